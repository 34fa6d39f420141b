"""
Evaluation matches: the trained actor on the home side against the
scripted AI or a frozen pool policy. Each match is seeded on its own, so
it can run anywhere.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from env.models import Team
from env.simulator import reset, step
from env.state import MatchState, ScenarioConfig
from features.encoders import team_observations
from policy.jrpo import act
from rollout.messages import EpisodeOutcome, OpponentSnapshot
from rollout.worker import episode_outcome, opponent_actions

from .stats import MatchStats

logger = logging.getLogger(__name__)

MEDIUM_STRENGTH = 0.6


@dataclass(frozen=True)
class MatchTask:
    actor_spec: object
    actor: object
    scenario: ScenarioConfig
    seed: int
    opponent_strength: float = MEDIUM_STRENGTH
    pe_dim: int = 16
    opponent: Optional[OpponentSnapshot] = None  # the scripted AI at opponent_strength when unset

    @property
    def away(self) -> OpponentSnapshot:
        if self.opponent is not None:
            return self.opponent
        return OpponentSnapshot.heuristic(self.opponent_strength, label=f'heuristic@{self.opponent_strength:g}')


def match_seeds(group_seed, n_matches):
    """n distinct match seeds derived from one group seed (an int or a list of ints)"""
    if n_matches < 1:
        raise ValueError('An evaluation needs at least one match')
    seeds = np.random.SeedSequence(group_seed).generate_state(n_matches)
    return [int(s) for s in seeds]


def play_episode(actor_spec, actor, scenario, seed, opponent, pe_dim=16) -> tuple[MatchStats, MatchState]:
    """
    Play one match to termination and return its statistics with the final
    state. With terminate_on_score_or_fault unset (the full-match scenario)
    that is the step limit.
    """
    actor_rng = np.random.default_rng([seed, 1])
    opponent_rng = np.random.default_rng([seed, 2])
    state = reset(scenario, seed=seed)
    stats = MatchStats()
    while not state.terminated:
        actions, _ = act(actor_spec, actor, team_observations(state, Team.HOME, pe_dim), actor_rng)
        away = opponent_actions(opponent, state, opponent_rng, pe_dim)
        result = step(state, actions.tolist(), away)
        stats.record(result.events, result.next_state)
        state = result.next_state
    logger.debug(
        'Match seed %d against %s ended %d-%d after %d steps',
        seed, opponent.label, stats.goals_for, stats.goals_against, state.step,
    )
    return stats, state


def play_match(actor_spec, actor, scenario, seed, opponent_strength=MEDIUM_STRENGTH, pe_dim=16, opponent=None):
    task = MatchTask(actor_spec, actor, scenario, seed, opponent_strength, pe_dim, opponent)
    stats, _ = play_episode(actor_spec, actor, scenario, seed, task.away, pe_dim)
    return stats


def run_match(task: MatchTask) -> MatchStats:
    stats, _ = play_episode(task.actor_spec, task.actor, task.scenario, task.seed, task.away, task.pe_dim)
    return stats


def run_outcome_match(task: MatchTask) -> EpisodeOutcome:
    """One match reduced to the result the league window records"""
    _, state = play_episode(task.actor_spec, task.actor, task.scenario, task.seed, task.away, task.pe_dim)
    return episode_outcome(state, task.away.label)
