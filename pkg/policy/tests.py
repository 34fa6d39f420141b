import numpy as np
from django.core.exceptions import ImproperlyConfigured
from django.test import SimpleTestCase

from nn.mlp import MlpSpec, forward, init_params, zero_params
from nn.optim import AdamState, global_norm
from nn.specs import actor_spec

from .batch import RolloutBatch, Transition
from .config import TrainConfig
from .gae import compute_gae
from .jrpo import act, clipped_surrogate, joint_log_prob, jrpo_loss, normalize_advantages
from .learner import JrpoLearner, critic_update, explained_variance, predict_values
from .normalizer import ValueNormalizer
from .serializers import build_train_config


def make_batch(rng, T=4, N=2, obs_dim=6, state_dim=5, spread=0.3):
    actions = rng.integers(0, 18, size=(T, N))
    return RolloutBatch(
        obs=rng.normal(size=(T, N, obs_dim)),
        states=rng.normal(size=(T, state_dim)),
        next_states=rng.normal(size=(T, state_dim)),
        actions=actions,
        log_probs=np.log(1 / 18) + rng.normal(scale=spread, size=(T, N)),
        extrinsic=rng.normal(size=T),
        intrinsic=np.zeros(T),
        rewards=rng.normal(size=T),
        values=rng.normal(size=T),
        dones=np.zeros(T, dtype=bool),
        advantages=rng.normal(size=T),
        returns=rng.normal(size=T),
    )


def reference_gae(rewards, values, bootstrap, dones, gamma, lam):
    T = len(rewards)
    nxt = list(values[1:]) + [bootstrap]
    deltas = [rewards[t] + gamma * nxt[t] * (0.0 if dones[t] else 1.0) - values[t] for t in range(T)]
    out = []
    for t in range(T):
        total, weight = 0.0, 1.0
        for k in range(t, T):
            total += weight * deltas[k]
            if dones[k]:
                break
            weight *= gamma * lam
        out.append(total)
    return np.array(out)


def reference_objective(W, b, batch, eps, beta):
    """Straight-line JRPO objective and weight gradients for a linear actor"""
    T, N = batch.actions.shape
    adv = batch.advantages
    mean = sum(adv) / T
    std = (sum((a - mean) ** 2 for a in adv) / T) ** 0.5
    adv = [(a - mean) / (std + 1e-8) for a in adv]
    dW, db = np.zeros_like(W), np.zeros_like(b)
    total = 0.0
    for t in range(T):
        new_joint, old_joint, entropy = 0.0, 0.0, 0.0
        per_agent = []
        for i in range(N):
            z = batch.obs[t, i] @ W + b
            z = z - z.max()
            p = np.exp(z) / np.exp(z).sum()
            logp = np.log(p)
            h = -float(np.sum(p * logp))
            new_joint += logp[batch.actions[t, i]]
            old_joint += batch.log_probs[t, i]
            entropy += h
            per_agent.append((p, logp, h))
        ratio = np.exp(new_joint - old_joint)
        clipped = min(max(ratio, 1 - eps), 1 + eps)
        if ratio * adv[t] <= clipped * adv[t]:
            term, slope = ratio * adv[t], ratio * adv[t]
        else:
            term, slope = clipped * adv[t], 0.0
        total += term + beta * entropy
        for i, (p, logp, h) in enumerate(per_agent):
            g = -slope * p
            g[batch.actions[t, i]] += slope
            g += -beta * p * (logp + h)
            dW += np.outer(batch.obs[t, i], g)
            db += g
    return total / T, dW / T, db / T


class JointLogProbTests(SimpleTestCase):

    def test_sum_of_log_probs(self):
        self.assertEqual(joint_log_prob([-1.0, -1.0]), -2.0)
        self.assertEqual(joint_log_prob([0.0]), 0.0)
        self.assertAlmostEqual(joint_log_prob([np.log(1 / 18)] * 4), -4 * np.log(18), places=12)

    def test_ratio_from_sums_equals_product_of_ratios(self):
        rng = np.random.default_rng(0)
        new, old = rng.normal(size=(20, 4)), rng.normal(size=(20, 4))
        from_sums = np.exp(joint_log_prob(new) - joint_log_prob(old))
        from_product = np.prod(np.exp(new - old), axis=-1)
        np.testing.assert_allclose(from_sums, from_product, rtol=1e-12)


class GaeTests(SimpleTestCase):

    def test_zero_values_telescope(self):
        adv, ret = compute_gae([1, 0, 0], [0, 0, 0], 0.0, [False, False, True], 1.0, 1.0)
        np.testing.assert_allclose(adv, [1, 0, 0])
        np.testing.assert_allclose(ret, [1, 0, 0])

    def test_two_step_example(self):
        adv, _ = compute_gae([1, 1], [0.5, 0.5], 0.0, [False, True], 0.9, 0.8)
        np.testing.assert_allclose(adv, [1.31, 0.5], atol=1e-12)

    def test_constant_value_fixed_point(self):
        adv, _ = compute_gae(np.zeros(6), np.full(6, 3.0), 3.0, np.zeros(6, dtype=bool), 1.0, 0.9)
        np.testing.assert_allclose(adv, np.zeros(6), atol=1e-12)

    def test_matches_double_sum_definition(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            T = int(rng.integers(1, 30))
            r, v = rng.normal(size=T), rng.normal(size=T)
            dones = rng.random(T) < 0.15
            boot = float(rng.normal())
            gamma, lam = float(rng.uniform(0.8, 1.0)), float(rng.uniform(0.0, 1.0))
            adv, _ = compute_gae(r, v, boot, dones, gamma, lam)
            np.testing.assert_allclose(adv, reference_gae(r, v, boot, dones, gamma, lam), atol=1e-8)

    def test_lambda_limits(self):
        rng = np.random.default_rng(2)
        r, v = rng.normal(size=8), rng.normal(size=8)
        dones = np.zeros(8, dtype=bool)
        dones[-1] = True
        gamma = 0.95
        adv, _ = compute_gae(r, v, 0.0, dones, gamma, 1.0)
        mc = np.array([sum(gamma ** (k - t) * r[k] for k in range(t, 8)) for t in range(8)])
        np.testing.assert_allclose(adv, mc - v, atol=1e-10)
        adv, _ = compute_gae(r, v, 0.0, dones, gamma, 0.0)
        td = r + gamma * np.append(v[1:], 0.0) - v
        np.testing.assert_allclose(adv, td, atol=1e-12)


class SurrogateTests(SimpleTestCase):

    def test_min_clip_algebra(self):
        value, _ = clipped_surrogate(np.array([1.5]), np.array([1.0]), 0.2)
        self.assertAlmostEqual(value[0], 1.2)
        value, _ = clipped_surrogate(np.array([1.5]), np.array([-1.0]), 0.2)
        self.assertAlmostEqual(value[0], -1.5)

    def test_each_term_is_min_of_candidates(self):
        rng = np.random.default_rng(3)
        ratio, adv = np.exp(rng.normal(scale=0.5, size=200)), rng.normal(size=200)
        value, _ = clipped_surrogate(ratio, adv, 0.2)
        expected = np.minimum(ratio * adv, np.clip(ratio, 0.8, 1.2) * adv)
        np.testing.assert_array_equal(value, expected)

    def test_ratio_one_gives_mean_advantage(self):
        rng = np.random.default_rng(4)
        spec = MlpSpec((6, 8, 18))
        params = init_params(spec, rng)
        batch = make_batch(rng)
        logits, _ = forward(spec, params, batch.obs.reshape(8, 6))
        logp = logits - logits.max(axis=1, keepdims=True)
        logp = logp - np.log(np.exp(logp).sum(axis=1, keepdims=True))
        batch.log_probs = np.take_along_axis(logp, batch.actions.reshape(8, 1), axis=1).reshape(4, 2)
        result = jrpo_loss(spec, params, batch, 0.2, 0.0, normalize=False)
        self.assertAlmostEqual(result.surrogate, float(batch.advantages.mean()), places=12)
        self.assertEqual(result.clip_fraction, 0.0)

    def test_matches_reference_implementation(self):
        rng = np.random.default_rng(5)
        spec = MlpSpec((6, 18))
        params = init_params(spec, rng, output_gain=0.5)
        params.biases[0] = rng.normal(scale=0.1, size=18)
        batch = make_batch(rng, spread=0.4)
        result = jrpo_loss(spec, params, batch, 0.2, 0.01)
        objective, dW, db = reference_objective(params.weights[0], params.biases[0], batch, 0.2, 0.01)
        self.assertAlmostEqual(result.objective, objective, delta=1e-10)
        np.testing.assert_allclose(result.gradients.weights[0], dW, atol=1e-10)
        np.testing.assert_allclose(result.gradients.biases[0], db, atol=1e-10)

    def test_deep_actor_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(6)
        spec = MlpSpec((6, 10, 10, 18))
        params = init_params(spec, rng, output_gain=0.5)
        batch = make_batch(rng, spread=0.05)
        result = jrpo_loss(spec, params, batch, 0.2, 0.01)
        analytic, flat = result.gradients.flat(), params.flat()
        h = 1e-6
        for k in rng.choice(flat.size, size=60, replace=False):
            plus, minus = flat.copy(), flat.copy()
            plus[k] += h
            minus[k] -= h
            numeric = (
                jrpo_loss(spec, params.with_flat(plus), batch, 0.2, 0.01).objective
                - jrpo_loss(spec, params.with_flat(minus), batch, 0.2, 0.01).objective
            ) / (2 * h)
            self.assertLess(abs(numeric - analytic[k]), 1e-6 + 1e-4 * abs(analytic[k]))

    def test_uniform_policy_is_entropy_stationary(self):
        rng = np.random.default_rng(7)
        spec = MlpSpec((6, 8, 18))
        batch = make_batch(rng)
        batch.advantages = np.zeros(4)
        result = jrpo_loss(spec, zero_params(spec), batch, 0.2, 0.01)
        self.assertAlmostEqual(result.entropy, 2 * np.log(18), places=12)
        self.assertLess(global_norm(result.gradients), 1e-12)

    def test_missing_advantages(self):
        rng = np.random.default_rng(8)
        batch = make_batch(rng)
        batch.advantages = None
        spec = MlpSpec((6, 18))
        with self.assertRaises(ValueError):
            jrpo_loss(spec, zero_params(spec), batch, 0.2, 0.01)

    def test_normalized_advantages(self):
        adv = normalize_advantages([1.0, 2.0, 3.0, 6.0])
        self.assertAlmostEqual(float(adv.mean()), 0.0, places=12)
        self.assertAlmostEqual(float(adv.std()), 1.0, places=6)


class ActTests(SimpleTestCase):

    def test_zero_actor_is_uniform(self):
        spec = actor_spec(63)
        rng = np.random.default_rng(9)
        obs = rng.normal(size=(18000, 63))
        actions, log_probs = act(spec, zero_params(spec), obs, rng)
        counts = np.bincount(actions, minlength=18)
        sigma = np.sqrt(18000 * (1 / 18) * (17 / 18))
        self.assertTrue(np.all(np.abs(counts - 1000) < 4 * sigma))
        np.testing.assert_allclose(log_probs, -np.log(18), rtol=1e-12)

    def test_deterministic_given_seed(self):
        spec = actor_spec(63)
        params = init_params(spec, np.random.default_rng(0), output_gain=1.0)
        obs = np.random.default_rng(1).normal(size=(4, 63))
        first = act(spec, params, obs, np.random.default_rng(2))
        second = act(spec, params, obs, np.random.default_rng(2))
        np.testing.assert_array_equal(first[0], second[0])
        np.testing.assert_array_equal(first[1], second[1])


class CriticTests(SimpleTestCase):

    def test_two_point_normalizer(self):
        normalizer = ValueNormalizer.create().update([0.0, 2.0])
        self.assertEqual(float(normalizer.mean), 1.0)
        self.assertEqual(float(normalizer.std), 1.0)
        self.assertEqual(float(normalizer.normalize(2.0)), 1.0)

    def test_incremental_matches_batch_moments(self):
        values = np.random.default_rng(10).normal(loc=3.0, scale=2.0, size=300)
        normalizer = ValueNormalizer.create()
        for chunk in np.array_split(values, 7):
            normalizer = normalizer.update(chunk)
        self.assertAlmostEqual(float(normalizer.mean), values.mean(), places=10)
        self.assertAlmostEqual(float(normalizer.var), values.var(), places=10)

    def test_round_trip(self):
        normalizer = ValueNormalizer.create().update([3.0, -1.0, 7.5])
        x = np.linspace(-10, 10, 21)
        np.testing.assert_allclose(normalizer.denormalize(normalizer.normalize(x)), x, atol=1e-10)

    def test_constant_targets_converge(self):
        rng = np.random.default_rng(11)
        spec = MlpSpec((3, 16, 1))
        params = init_params(spec, rng)
        adam = AdamState.zeros(params)
        normalizer = ValueNormalizer.create()
        batch = make_batch(rng, T=8, state_dim=3)
        batch.returns = np.full(8, 2.5)
        for _ in range(500):
            update = critic_update(spec, params, adam, normalizer, batch, 5e-3)
            params, adam, normalizer = update.params, update.adam, update.normalizer
        self.assertLess(update.value_loss, 1e-4)
        np.testing.assert_allclose(predict_values(spec, params, normalizer, batch.states), 2.5, atol=1e-6)

    def test_non_finite_targets_rejected(self):
        rng = np.random.default_rng(12)
        spec = MlpSpec((5, 4, 1))
        params = init_params(spec, rng)
        batch = make_batch(rng)
        batch.returns = np.array([1.0, np.inf, 0.0, 0.0])
        with self.assertRaises(ValueError):
            critic_update(spec, params, AdamState.zeros(params), ValueNormalizer.create(), batch, 1e-3)

    def test_explained_variance(self):
        self.assertEqual(explained_variance(np.array([1.0, 2.0]), np.array([1.0, 2.0])), 1.0)
        self.assertEqual(explained_variance(np.zeros(3), np.ones(3)), 0.0)


class LearnerTests(SimpleTestCase):

    def test_update_cycle(self):
        rng = np.random.default_rng(13)
        config = TrainConfig(minibatch_size=8, epochs_per_rollout=2)
        learner = JrpoLearner(obs_dim=6, state_dim=5, config=config, rng=rng)
        batch = make_batch(rng, T=16)
        metrics = learner.update(batch, np.random.default_rng(0))
        self.assertEqual(learner.actor.version, 4)
        self.assertEqual(learner.critic.version, 4)
        self.assertEqual(learner.normalizer.count, 16)
        for key in ('objective', 'entropy', 'clip_fraction', 'value_loss', 'explained_variance'):
            self.assertTrue(np.isfinite(metrics[key]))

    def test_transitions_to_batch(self):
        rng = np.random.default_rng(14)
        transitions = [
            Transition(
                obs=rng.normal(size=(2, 6)), state=rng.normal(size=5), next_state=rng.normal(size=5),
                actions=np.array([1, 2]), log_probs=np.array([-1.0, -2.0]),
                extrinsic=0.5, value=0.1, done=(k == 2), intrinsic=0.25,
            )
            for k in range(3)
        ]
        batch = RolloutBatch.from_transitions(transitions, rollout_index=4, policy_version=9)
        self.assertEqual(len(batch), 3)
        self.assertEqual(batch.obs.shape, (3, 2, 6))
        np.testing.assert_array_equal(batch.rewards, [0.75, 0.75, 0.75])
        np.testing.assert_array_equal(batch.dones, [False, False, True])


class TrainConfigTests(SimpleTestCase):

    def test_defaults(self):
        config = build_train_config({})
        self.assertEqual(config, TrainConfig())
        self.assertEqual(config.gamma, 0.99)
        self.assertEqual(config.minibatch_size, 1024)

    def test_invalid_values(self):
        with self.assertRaises(ImproperlyConfigured):
            build_train_config({'gamma': 1.5})
        with self.assertRaises(ImproperlyConfigured):
            build_train_config({'pe_dim': 7})
        with self.assertRaises(ImproperlyConfigured):
            build_train_config({'clip_epsilon': 0.0})
