"""
One rollout worker: plays steps_per_worker environment steps with the
learner's snapshot on the home side and the frozen opponent on the away
side, then returns the experience as a RolloutBuffer.
"""
import logging

import numpy as np

from env.heuristic import previous_movement, scripted_team_actions
from env.models import Team
from env.simulator import mirror_action, reset, step
from env.replay import ReplayWriter
from features.encoders import critic_observation, team_observations
from policy.batch import Transition
from policy.jrpo import act
from policy.learner import predict_values
from rewards.models import RewardVariant
from rewards.rnd import rnd_bonus_batch
from rewards.shaped import base_reward
from rewards.ssir import ssir_bonus_batch
from rewards.variants import total_reward

from .messages import EpisodeOutcome, RolloutBuffer
from .models import OpponentKind, Outcome

logger = logging.getLogger(__name__)

SEED_BOUND = 2 ** 63


def worker_rngs(run_seed, rollout_index, worker_index):
    """Independent (env, learner, opponent) generators of one worker"""
    seq = np.random.SeedSequence([run_seed, rollout_index, worker_index])
    return tuple(np.random.default_rng(child) for child in seq.spawn(3))


def opponent_actions(opponent, state, rng, pe_dim):
    """
    Away-side actions. Policy opponents act on the mirrored view and their
    actions are mirrored back; a player keeps its previous movement with
    probability 1 - strength.
    """
    if opponent.kind == OpponentKind.HEURISTIC:
        return scripted_team_actions(state, Team.AWAY, opponent.strength, rng)
    obs = team_observations(state, Team.AWAY, pe_dim)
    actions, _ = act(opponent.actor_spec, opponent.actor, obs, rng)
    gates = rng.random(len(actions))
    out = []
    for player, action, gate in zip(state.away, actions, gates):
        if gate >= opponent.strength:
            out.append(previous_movement(player))
        else:
            out.append(mirror_action(int(action)))
    return out


def episode_outcome(state, opponent_label):
    home, away = state.score
    if home > away:
        result = Outcome.WIN
    elif home < away:
        result = Outcome.LOSS
    else:
        result = Outcome.DRAW
    return EpisodeOutcome(result, home, away, state.step, opponent_label)


def intrinsic_rewards(bonus, transitions):
    """Per-step bonus added to the extrinsic reward, zero while inactive"""
    T = len(transitions)
    variant = RewardVariant(bonus.variant)
    if variant == RewardVariant.BASE or not bonus.active:
        return np.zeros(T)
    if variant == RewardVariant.SSIR:
        obs = np.stack([t.obs for t in transitions])
        actions = np.stack([t.actions for t in transitions])
        raw = ssir_bonus_batch(bonus.ssir, obs, actions)
    else:
        raw = rnd_bonus_batch(bonus.rnd, np.stack([t.next_state for t in transitions]))
    return total_reward(variant, np.zeros(T), raw, bonus.alpha, active=True)


def run_worker(task):
    env_rng, actor_rng, opponent_rng = worker_rngs(task.run_seed, task.rollout_index, task.worker_index)
    learner = task.learner
    if task.initial_state is not None and not task.initial_state.terminated:
        state = task.initial_state.copy()
    else:
        state = reset(task.scenario, seed=int(env_rng.integers(SEED_BOUND)))
    transitions, outcomes = [], []
    writer = ReplayWriter(task.replay_path) if task.replay_path else None

    try:
        for t in range(task.steps):
            obs = team_observations(state, Team.HOME, learner.pe_dim)
            state_vec = critic_observation(state)
            actions, log_probs = act(learner.actor_spec, learner.actor, obs, actor_rng)
            value = float(predict_values(learner.critic_spec, learner.critic, learner.normalizer, state_vec)[0])
            away = opponent_actions(task.opponent, state, opponent_rng, learner.pe_dim)
            result = step(state, actions.tolist(), away)
            if writer is not None:
                writer.record(state, actions, away, result)
            reward, _ = base_reward(state, result.events, result.next_state, task.reward)
            transitions.append(Transition(
                obs=obs,
                state=state_vec,
                next_state=critic_observation(result.next_state),
                actions=actions,
                log_probs=log_probs,
                extrinsic=reward,
                value=value,
                done=result.terminated,
                events=tuple(result.events),
            ))
            state = result.next_state
            if result.terminated:
                outcomes.append(episode_outcome(state, task.opponent.label))
                state = reset(task.scenario, seed=int(env_rng.integers(SEED_BOUND)))
    finally:
        if writer is not None:
            writer.close()

    if transitions[-1].done:
        bootstrap = 0.0
    else:
        bootstrap = float(predict_values(learner.critic_spec, learner.critic, learner.normalizer, critic_observation(state))[0])

    for transition, bonus in zip(transitions, intrinsic_rewards(task.bonus, transitions)):
        transition.intrinsic = float(bonus)

    logger.debug(
        'Worker %d finished rollout %d: %d steps, %d episodes',
        task.worker_index, task.rollout_index, len(transitions), len(outcomes),
    )
    return RolloutBuffer(
        rollout_index=task.rollout_index,
        worker_index=task.worker_index,
        policy_version=learner.version,
        transitions=transitions,
        bootstrap_value=bootstrap,
        outcomes=outcomes,
        final_state=state,
    )
