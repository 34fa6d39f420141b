import numpy as np
from django.core.exceptions import ImproperlyConfigured
from django.test import SimpleTestCase

from env.models import EventKind, Team
from env.simulator import Event, reset, step
from env.state import ScenarioConfig
from nn.mlp import forward, zero_params
from nn.specs import rnd_target_spec
from policy.batch import RolloutBatch

from .models import RewardVariant
from .rnd import RndPair, raw_bonus, rnd_bonus, rnd_bonus_batch, rnd_update
from .serializers import build_reward_config
from .shaped import ShapedRewardConfig, base_reward, clustered_players
from .ssir import SsirNetwork, ssir_bonus, ssir_bonus_batch, ssir_regress, ssir_targets, ssir_update
from .variants import bonus_active, reward_decomposition, total_reward

SPREAD_HOME = ((-0.8, 0.0), (-0.4, 0.3), (-0.4, -0.3), (-0.1, 0.0))
SPREAD_AWAY = ((0.8, 0.0), (0.4, 0.3), (0.4, -0.3), (0.1, 0.2))


def spread_state(**overrides):
    params = dict(home_positions=SPREAD_HOME, away_positions=SPREAD_AWAY)
    params.update(overrides)
    return reset(ScenarioConfig(**params), seed=0)


def bonus_batch(rng, T=8, N=2, obs_dim=6):
    return RolloutBatch(
        obs=rng.normal(size=(T, N, obs_dim)),
        states=rng.normal(size=(T, 5)),
        next_states=rng.normal(size=(T, 5)),
        actions=rng.integers(0, 18, size=(T, N)),
        log_probs=np.full((T, N), np.log(1 / 18)),
        extrinsic=rng.normal(size=T),
        intrinsic=np.zeros(T),
        rewards=rng.normal(size=T),
        values=np.zeros(T),
        dones=np.zeros(T, dtype=bool),
        advantages=rng.normal(size=T),
        returns=rng.normal(size=T),
        extrinsic_advantages=rng.normal(size=T),
    )


class ShapedRewardTests(SimpleTestCase):

    def test_quiet_step_is_zero(self):
        state = spread_state()
        self.assertEqual(base_reward(state, [], state), (0.0, 0.0))

    def test_goal_is_zero_sum(self):
        state = spread_state()
        home, away = base_reward(state, [Event(EventKind.GOAL, Team.HOME)], state)
        self.assertAlmostEqual(home, 1.0)
        self.assertAlmostEqual(away, -1.0)

    def test_ball_holding(self):
        state = spread_state(kickoff_holder=3)
        home, away = base_reward(state, [], state)
        self.assertAlmostEqual(home, 0.0001)
        self.assertAlmostEqual(home + away, 0.0)

    def test_only_good_passes_earn_the_bonus(self):
        state = spread_state()
        good = Event(EventKind.PASS_ATTEMPT, Team.AWAY, good=True)
        bad = Event(EventKind.PASS_ATTEMPT, Team.HOME, good=False)
        home, away = base_reward(state, [good, bad], state)
        self.assertAlmostEqual(home, -0.05)
        self.assertAlmostEqual(away, 0.05)

    def test_grouping_penalty(self):
        crowded = ((-0.8, 0.0), (-0.4, 0.0), (-0.4, 0.03), (-0.1, 0.0))
        state = spread_state(home_positions=crowded)
        self.assertEqual(clustered_players(state.home, 0.05), 2)
        home, _ = base_reward(state, [], state)
        self.assertAlmostEqual(home, -0.002)

    def test_out_of_bounds_penalty(self):
        state = spread_state()
        state.away[0].x = 1.2
        state.away[1].y = 0.5
        home, away = base_reward(state, [], state)
        self.assertAlmostEqual(home, 0.002)
        self.assertAlmostEqual(away, -0.002)

    def test_zero_sum_under_random_play(self):
        rng = np.random.default_rng(5)
        state = reset(ScenarioConfig(), seed=5)
        for _ in range(100_000):
            if state.terminated:
                state = reset(ScenarioConfig(), seed=int(rng.integers(1 << 31)))
            result = step(state, rng.integers(0, 18, size=4).tolist(), rng.integers(0, 18, size=4).tolist())
            home, away = base_reward(state, result.events, result.next_state)
            self.assertEqual(home + away, 0.0)
            state = result.next_state

    def test_custom_constants(self):
        cfg = build_reward_config({'goal': 2.0, 'hold_ball': 0.0})
        self.assertEqual(cfg.goal, 2.0)
        self.assertEqual(cfg.pass_bonus, ShapedRewardConfig().pass_bonus)
        state = spread_state(kickoff_holder=0)
        home, _ = base_reward(state, [Event(EventKind.GOAL, Team.HOME)], state, cfg)
        self.assertAlmostEqual(home, 2.0)

    def test_invalid_constants(self):
        with self.assertRaises(ImproperlyConfigured):
            build_reward_config({'goal': 0.0})
        with self.assertRaises(ImproperlyConfigured):
            build_reward_config({'grouping_penalty': 0.01})


class SsirTests(SimpleTestCase):

    def setUp(self):
        self.rng = np.random.default_rng(3)
        self.net = SsirNetwork.create(6, self.rng)

    def test_bonus_is_agent_mean_of_selected_outputs(self):
        obs = self.rng.normal(size=(3, 6))
        actions = np.array([0, 5, 17])
        out, _ = forward(self.net.spec, self.net.params, obs)
        expected = np.mean([out[0, 0], out[1, 5], out[2, 17]])
        self.assertAlmostEqual(ssir_bonus(self.net, obs, actions), expected, places=12)

    def test_zero_network_gives_zero_bonus(self):
        net = SsirNetwork(self.net.spec, zero_params(self.net.spec), self.net.adam)
        self.assertEqual(ssir_bonus(net, self.rng.normal(size=(4, 6)), [1, 2, 3, 4]), 0.0)

    def test_batched_bonus_matches_single(self):
        batch = bonus_batch(self.rng)
        values = ssir_bonus_batch(self.net, batch.obs, batch.actions)
        for t in range(len(batch)):
            self.assertAlmostEqual(values[t], ssir_bonus(self.net, batch.obs[t], batch.actions[t]), places=12)

    def test_bonus_is_bounded(self):
        values = ssir_bonus_batch(self.net, 50 * self.rng.normal(size=(20, 2, 6)), self.rng.integers(0, 18, size=(20, 2)))
        self.assertTrue(np.all(np.abs(values) <= 1.0))

    def test_targets_are_clipped(self):
        targets = ssir_targets(np.array([-100.0, 0.0, 0.1, 0.2, 100.0]))
        self.assertTrue(np.all(targets <= 1.0))
        self.assertTrue(np.all(targets >= -1.0))
        self.assertEqual(targets[0], -1.0)
        self.assertEqual(targets[-1], 1.0)

    def test_regression_fits_targets(self):
        batch = bonus_batch(self.rng)
        targets = ssir_targets(batch.extrinsic_advantages)
        first = ssir_regress(self.net, batch.obs, batch.actions, targets, 5e-3)
        for _ in range(300):
            last = ssir_regress(self.net, batch.obs, batch.actions, targets, 5e-3)
        self.assertLess(last, 0.5 * first)

    def test_update_prefers_extrinsic_advantages(self):
        batch = bonus_batch(self.rng)
        twin = SsirNetwork(self.net.spec, self.net.params.copy(), self.net.adam)
        ssir_update(self.net, batch, 1e-3)
        ssir_regress(twin, batch.obs, batch.actions, ssir_targets(batch.extrinsic_advantages), 1e-3)
        for a, b in zip(self.net.params.arrays(), twin.params.arrays()):
            np.testing.assert_array_equal(a, b)

    def test_update_needs_advantages(self):
        batch = bonus_batch(self.rng)
        batch.advantages = None
        batch.extrinsic_advantages = None
        with self.assertRaises(ValueError):
            ssir_update(self.net, batch, 1e-3)


class RndTests(SimpleTestCase):

    def setUp(self):
        self.rng = np.random.default_rng(11)
        self.pair = RndPair.create(5, self.rng)
        self.states = self.rng.normal(size=(8, 5))

    def test_bonus_is_non_negative(self):
        values = rnd_bonus_batch(self.pair, self.states)
        self.assertTrue(np.all(values >= 0))
        self.assertAlmostEqual(rnd_bonus(self.pair, self.states[2]), values[2], places=12)

    def test_copied_predictor_gives_zero_bonus(self):
        pair = RndPair.create(5, self.rng, predictor_spec=rnd_target_spec(5))
        pair.predictor = pair.target.copy()
        np.testing.assert_allclose(raw_bonus(pair, self.states), 0.0, atol=1e-15)

    def test_target_never_changes(self):
        before = [a.copy() for a in self.pair.target.arrays()]
        for _ in range(5):
            rnd_update(self.pair, self.states, 1e-3)
        for a, b in zip(before, self.pair.target.arrays()):
            np.testing.assert_array_equal(a, b)
        with self.assertRaises(ValueError):
            self.pair.target.weights[0][0, 0] = 1.0

    def test_target_is_not_trainable(self):
        with self.assertRaises(ValueError):
            rnd_update(self.pair, self.states, 1e-3, network='target')

    def test_familiar_states_lose_novelty(self):
        rnd_update(self.pair, self.states, 1e-3)
        first = raw_bonus(self.pair, self.states).mean()
        for _ in range(300):
            rnd_update(self.pair, self.states, 1e-3, update_normalizers=False)
        self.assertLess(raw_bonus(self.pair, self.states).mean(), 0.5 * first)

    def test_trained_state_is_less_novel_than_unseen_state(self):
        seen = self.states[:1]
        unseen = self.rng.normal(size=(1, 5)) + 3.0
        for _ in range(500):
            rnd_update(self.pair, seen, 1e-3, update_normalizers=False)
        self.assertLess(raw_bonus(self.pair, seen)[0], raw_bonus(self.pair, unseen)[0])

    def test_fitting_one_state_leaves_other_states_novel(self):
        for seed in range(5):
            rng = np.random.default_rng(seed)
            pair = RndPair.create(5, rng)
            fixed = rng.normal(size=(1, 5))
            held_out = rng.normal(size=(32, 5))
            fixed_before = raw_bonus(pair, fixed)[0]
            held_before = raw_bonus(pair, held_out).mean()
            for _ in range(1000):
                rnd_update(pair, fixed, 1e-3, update_normalizers=False)
            fixed_drop = fixed_before / raw_bonus(pair, fixed)[0]
            held_drop = held_before / raw_bonus(pair, held_out).mean()
            with self.subTest(seed=seed):
                self.assertGreaterEqual(fixed_drop, 10.0)
                self.assertLess(held_drop, fixed_drop)

    def test_normalizers_track_inputs_and_bonuses(self):
        rnd_update(self.pair, self.states, 1e-3)
        np.testing.assert_allclose(self.pair.input_stats.mean, self.states.mean(axis=0))
        self.assertEqual(self.pair.bonus_stats.count, 8)
        rnd_update(self.pair, self.states, 1e-3, update_normalizers=False)
        self.assertEqual(self.pair.input_stats.count, 8)
        self.assertEqual(self.pair.bonus_stats.count, 8)


class VariantTests(SimpleTestCase):

    def test_warmup_gate(self):
        self.assertFalse(bonus_active(699, 700))
        self.assertTrue(bonus_active(700, 700))
        self.assertTrue(bonus_active(0, 0))

    def test_total_reward(self):
        base = np.array([0.1, -0.2])
        intrinsic = np.array([0.5, 1.0])
        np.testing.assert_array_equal(total_reward(RewardVariant.BASE, base, intrinsic, 0.1), base)
        np.testing.assert_allclose(total_reward('ssir', base, intrinsic, 0.1), [0.15, -0.1])
        np.testing.assert_allclose(total_reward('rnd', base, intrinsic, 0.1), [0.6, 0.8])
        np.testing.assert_array_equal(total_reward('rnd', base, intrinsic, 0.1, active=False), base)

    def test_unknown_variant(self):
        with self.assertRaises(ValueError):
            total_reward('curiosity', 0.0, 0.0, 0.1)

    def test_decomposition(self):
        batch = bonus_batch(np.random.default_rng(0))
        batch.intrinsic = np.full(len(batch), 0.25)
        record = reward_decomposition(batch, RndPair.create(5, np.random.default_rng(1)))
        self.assertAlmostEqual(record['intrinsic_mean'], 0.25)
        self.assertEqual(record['bonus_std'], 1.0)
