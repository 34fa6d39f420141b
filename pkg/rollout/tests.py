import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase, override_settings

from env.models import Action, Team
from env.replay import read_replay
from env.simulator import reset
from env.state import ScenarioConfig
from features.encoders import team_observations
from features.layout import actor_dim, critic_dim
from policy.batch import Transition
from policy.config import TrainConfig
from policy.gae import compute_gae
from policy.learner import JrpoLearner
from rewards.models import RewardVariant
from rewards.ssir import SsirNetwork, ssir_bonus_batch

from .config import WorkerConfig
from .exceptions import RunError
from .merge import merge, outcome_counts, win_rate
from .messages import BonusSnapshot, EpisodeOutcome, LearnerSnapshot, OpponentSnapshot, RolloutBuffer, WorkerTask
from .models import Outcome
from .serializers import build_worker_config
from .service import RolloutService
from .worker import opponent_actions, run_worker

SCENARIO = ScenarioConfig(players_per_team=2, episode_step_limit=6)


def make_learner(seed=0):
    config = TrainConfig(pe_dim=4)
    return JrpoLearner(actor_dim(2, 4), critic_dim(2), config, np.random.default_rng(seed))


def fake_transition(reward, value, done):
    return Transition(
        obs=np.zeros((2, 3)),
        state=np.zeros(4),
        next_state=np.zeros(4),
        actions=np.zeros(2, dtype=np.int64),
        log_probs=np.zeros(2),
        extrinsic=reward,
        value=value,
        done=done,
    )


def fake_buffer(worker_index, rewards, values, dones, bootstrap, version=0, outcomes=()):
    return RolloutBuffer(
        rollout_index=3,
        worker_index=worker_index,
        policy_version=version,
        transitions=[fake_transition(r, v, d) for r, v, d in zip(rewards, values, dones)],
        bootstrap_value=bootstrap,
        outcomes=list(outcomes),
    )


def outcome(result):
    return EpisodeOutcome(result, 0, 0, 10, 'heuristic')


class FlakyRunner:
    """Fails the first `failures` calls, then runs the worker"""

    def __init__(self, failures):
        self.failures = failures
        self.calls = 0

    def __call__(self, task):
        self.calls += 1
        if self.calls <= self.failures:
            raise RuntimeError('worker crashed')
        return run_worker(task)


@override_settings(ROLLOUT_BACKEND='serial')
class CollectTests(SimpleTestCase):

    def setUp(self):
        self.snapshot = LearnerSnapshot.from_learner(make_learner())
        self.opponent = OpponentSnapshot.heuristic(0.5)

    def collect(self, service, workers=2, steps=10, **kwargs):
        cfg = WorkerConfig(num_workers=workers, steps_per_worker=steps)
        return service.collect(cfg, self.snapshot, self.opponent, SCENARIO, rollout_index=1, run_seed=42, **kwargs)

    def test_step_accounting(self):
        buffers = self.collect(RolloutService())
        self.assertEqual([len(b) for b in buffers], [10, 10])
        self.assertEqual(len(merge(buffers)), 20)

    def test_same_seeds_same_batches(self):
        first = merge(self.collect(RolloutService()))
        second = merge(self.collect(RolloutService()))
        for name in ('obs', 'states', 'actions', 'log_probs', 'rewards', 'values', 'advantages', 'returns'):
            np.testing.assert_array_equal(getattr(first, name), getattr(second, name))

    def test_workers_are_decorrelated(self):
        buffers = self.collect(RolloutService())
        first, second = (np.stack([t.actions for t in b.transitions]) for b in buffers)
        self.assertFalse(np.array_equal(first, second))

    def test_process_pool_matches_serial(self):
        serial = merge(self.collect(RolloutService(), steps=5))
        with RolloutService(backend='process', processes=2) as service:
            pooled = merge(self.collect(service, steps=5))
        np.testing.assert_array_equal(serial.actions, pooled.actions)
        np.testing.assert_array_equal(serial.rewards, pooled.rewards)

    def test_episode_boundaries_follow_done_flags(self):
        buffers = self.collect(RolloutService(), workers=1, steps=20)
        buffer = buffers[0]
        dones = [t.done for t in buffer.transitions]
        ends = [i for i, done in enumerate(dones) if done]
        self.assertEqual([o.steps for o in buffer.outcomes][1:], [int(d) for d in np.diff(ends)])
        self.assertEqual(len(buffer.outcomes), sum(dones))
        # The step limit alone ends an episode within six steps
        self.assertGreaterEqual(sum(dones), 3)

    def test_workers_continue_their_matches(self):
        first = self.collect(RolloutService())
        cfg = WorkerConfig(num_workers=2, steps_per_worker=10)
        second = RolloutService().collect(
            cfg, self.snapshot, self.opponent, SCENARIO, rollout_index=2, run_seed=42,
            env_states=[b.final_state for b in first],
        )
        for before, after in zip(first, second):
            expected = team_observations(before.final_state, Team.HOME, 4)
            np.testing.assert_array_equal(after.transitions[0].obs, expected)
            self.assertFalse(before.final_state.terminated)

    def test_every_transition_carries_the_snapshot_version(self):
        batch = merge(self.collect(RolloutService()))
        self.assertEqual(batch.policy_version, self.snapshot.version)

    def test_inactive_bonus_adds_nothing(self):
        net = SsirNetwork.create(actor_dim(2, 4), np.random.default_rng(1))
        bonus = BonusSnapshot(RewardVariant.SSIR, active=False, ssir=net)
        batch = merge(self.collect(RolloutService(), bonus=bonus))
        np.testing.assert_array_equal(batch.intrinsic, np.zeros(20))
        np.testing.assert_array_equal(batch.rewards, batch.extrinsic)

    def test_active_ssir_bonus(self):
        net = SsirNetwork.create(actor_dim(2, 4), np.random.default_rng(1))
        bonus = BonusSnapshot(RewardVariant.SSIR, active=True, alpha=0.1, ssir=net)
        batch = merge(self.collect(RolloutService(), bonus=bonus))
        np.testing.assert_allclose(batch.intrinsic, 0.1 * ssir_bonus_batch(net, batch.obs, batch.actions))
        np.testing.assert_allclose(batch.rewards, batch.extrinsic + batch.intrinsic)

    def test_retry_once_with_same_seeds(self):
        runner = FlakyRunner(failures=1)
        buffers = self.collect(RolloutService(runner=runner))
        reference = self.collect(RolloutService())
        for got, want in zip(buffers, reference):
            np.testing.assert_array_equal(got.transitions[-1].obs, want.transitions[-1].obs)

    def test_second_failure_aborts(self):
        with self.assertRaises(RunError):
            self.collect(RolloutService(runner=FlakyRunner(failures=10)))

    def test_replay_dump(self):
        cfg = WorkerConfig(num_workers=1, steps_per_worker=7, dump_replays=True)
        with tempfile.TemporaryDirectory() as tmp:
            RolloutService().collect(cfg, self.snapshot, self.opponent, SCENARIO, 2, 42, replay_dir=tmp)
            lines = read_replay(Path(tmp) / 'rollout_000002_worker_000.jsonl')
        self.assertEqual(len(lines), 7)


class OpponentTests(SimpleTestCase):

    def test_policy_opponent_plays(self):
        learner = make_learner()
        snapshot = LearnerSnapshot.from_learner(learner)
        opponent = OpponentSnapshot.policy(learner.actor_spec, learner.actor, 'policy-0001')
        task = WorkerTask(0, 0, 7, 12, SCENARIO, snapshot, opponent)
        buffer = run_worker(task)
        self.assertEqual(len(buffer), 12)
        for o in buffer.outcomes:
            self.assertEqual(o.opponent, 'policy-0001')

    def test_weak_policy_opponent_repeats_movement(self):
        learner = make_learner()
        opponent = OpponentSnapshot.policy(learner.actor_spec, learner.actor, 'weak', strength=1e-12)
        state = reset(SCENARIO, seed=0)
        actions = opponent_actions(opponent, state, np.random.default_rng(0), 4)
        self.assertEqual(actions, [Action.IDLE, Action.IDLE])


class MergeTests(SimpleTestCase):

    def test_single_buffer_gains_advantages(self):
        buffer = fake_buffer(0, [0.0, 1.0, 0.5], [0.1, 0.2, 0.3], [False, False, False], bootstrap=0.7)
        batch = merge([buffer], gamma=0.9, gae_lambda=0.8)
        advantages, returns = compute_gae([0.0, 1.0, 0.5], [0.1, 0.2, 0.3], 0.7, [False, False, False], 0.9, 0.8)
        np.testing.assert_allclose(batch.advantages, advantages)
        np.testing.assert_allclose(batch.returns, returns)
        np.testing.assert_allclose(batch.extrinsic_advantages, advantages)

    def test_truncated_segment_bootstraps(self):
        truncated = merge([fake_buffer(0, [0.0], [0.0], [False], bootstrap=1.0)], gamma=0.5, gae_lambda=1.0)
        finished = merge([fake_buffer(0, [0.0], [0.0], [True], bootstrap=1.0)], gamma=0.5, gae_lambda=1.0)
        self.assertAlmostEqual(truncated.advantages[0], 0.5)
        self.assertAlmostEqual(finished.advantages[0], 0.0)

    def test_worker_order(self):
        later = fake_buffer(1, [2.0], [0.0], [True], 0.0)
        earlier = fake_buffer(0, [1.0], [0.0], [True], 0.0)
        batch = merge([later, earlier])
        np.testing.assert_array_equal(batch.extrinsic, [1.0, 2.0])

    def test_mixed_versions_rejected(self):
        with self.assertRaises(ValueError):
            merge([fake_buffer(0, [0.0], [0.0], [True], 0.0, version=1), fake_buffer(1, [0.0], [0.0], [True], 0.0, version=2)])

    def test_win_rate(self):
        results = [Outcome.WIN, Outcome.LOSS, Outcome.WIN, Outcome.DRAW, Outcome.WIN]
        buffer = fake_buffer(0, [0.0], [0.0], [True], 0.0, outcomes=[outcome(r) for r in results])
        batch = merge([buffer])
        self.assertAlmostEqual(win_rate(batch.outcomes), 0.6)
        self.assertEqual(outcome_counts(batch.outcomes), {'win': 3, 'draw': 1, 'loss': 1})
        self.assertIsNone(win_rate([]))

    def test_worker_config(self):
        cfg = build_worker_config({'num_workers': 2, 'steps_per_worker': 10})
        self.assertEqual(cfg.steps_per_rollout, 20)
        self.assertEqual(WorkerConfig().steps_per_rollout, 20000)
