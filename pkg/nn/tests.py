import tempfile
from pathlib import Path

import numpy as np
from django.core.exceptions import ImproperlyConfigured
from django.test import SimpleTestCase

from .checkpoints import Checkpoint, CheckpointError, load_checkpoint, save_checkpoint
from .distributions import categorical, entropy, log_softmax, sample, softmax
from .mlp import MlpSpec, ParameterSet, backward, forward, init_params, zero_params
from .models import Activation
from .optim import AdamState, NonFiniteGradientError, adam_update, clip_grad_norm, global_norm
from .specs import actor_spec, critic_spec, rnd_predictor_spec, rnd_target_spec, ssir_spec

# 4v4 widths: actor observation 8N+31, critic state 10N+10
OBS_DIM, STATE_DIM = 63, 50


def finite_difference_check(test, spec, seed, samples=120, h=1e-5):
    rng = np.random.default_rng(seed)
    params = init_params(spec, rng)
    for b in params.biases:
        b[...] = rng.normal(scale=0.1, size=b.shape)
    x = rng.normal(size=(3, spec.input_size))
    upstream = rng.normal(size=(3, spec.output_size))

    def objective(p):
        out, _ = forward(spec, p, x)
        return float(np.sum(out * upstream))

    _, cache = forward(spec, params, x)
    analytic = backward(spec, params, cache, upstream).flat()
    flat = params.flat()
    for k in rng.choice(flat.size, size=min(samples, flat.size), replace=False):
        plus, minus = flat.copy(), flat.copy()
        plus[k] += h
        minus[k] -= h
        numeric = (objective(params.with_flat(plus)) - objective(params.with_flat(minus))) / (2 * h)
        rel = abs(numeric - analytic[k]) / max(abs(numeric) + abs(analytic[k]), 1e-6)
        test.assertLess(rel, 1e-4, f'{spec.layer_sizes} parameter {k}: {analytic[k]} vs {numeric}')


class ForwardTests(SimpleTestCase):

    def test_zero_network_outputs_zero(self):
        for activation in (Activation.IDENTITY, Activation.TANH):
            spec = MlpSpec((5, 7, 3), output_activation=activation)
            out, _ = forward(spec, zero_params(spec), np.ones(5))
            np.testing.assert_array_equal(out, np.zeros(3))

    def test_hand_computed_network(self):
        spec = MlpSpec((1, 2, 1))
        params = ParameterSet(
            weights=[np.array([[1.0, -1.0]]), np.array([[2.0], [3.0]])],
            biases=[np.array([0.0, 0.5]), np.array([0.1])],
        )
        out, _ = forward(spec, params, np.array([2.0]))
        # hidden = relu([2, -1.5]) = [2, 0]; output = 2*2 + 0.1
        self.assertAlmostEqual(out[0], 4.1, places=12)

    def test_batched_matches_single(self):
        spec = MlpSpec((4, 6, 2), output_activation=Activation.TANH)
        params = init_params(spec, np.random.default_rng(1))
        x = np.random.default_rng(2).normal(size=(5, 4))
        batched, _ = forward(spec, params, x)
        for row, expected in zip(x, batched):
            np.testing.assert_allclose(forward(spec, params, row)[0], expected, rtol=1e-14)
        self.assertTrue(np.all(np.abs(batched) < 1.0))

    def test_shape_mismatch(self):
        spec = MlpSpec((4, 2))
        with self.assertRaises(ValueError):
            forward(spec, zero_params(spec), np.ones(3))

    def test_invalid_spec(self):
        with self.assertRaises(ImproperlyConfigured):
            MlpSpec((4,))
        with self.assertRaises(ImproperlyConfigured):
            MlpSpec((4, 0, 2))

    def test_orthogonal_init(self):
        spec = MlpSpec((6, 4, 8))
        params = init_params(spec, np.random.default_rng(0), output_gain=0.01)
        w0, w1 = params.weights
        np.testing.assert_allclose(w0.T @ w0, 2.0 * np.eye(4), atol=1e-12)
        np.testing.assert_allclose(w1 @ w1.T, 1e-4 * np.eye(4), atol=1e-15)
        self.assertTrue(all(not b.any() for b in params.biases))


class BackwardTests(SimpleTestCase):

    def test_zero_upstream_gradient(self):
        spec = MlpSpec((3, 5, 2))
        params = init_params(spec, np.random.default_rng(0))
        _, cache = forward(spec, params, np.ones(3))
        grads = backward(spec, params, cache, np.zeros(2))
        self.assertEqual(global_norm(grads), 0.0)

    def test_relu_subgradient_at_zero(self):
        spec = MlpSpec((1, 1, 1))
        params = ParameterSet([np.array([[1.0]]), np.array([[1.0]])], [np.array([0.0]), np.array([0.0])])
        _, cache = forward(spec, params, np.array([0.0]))
        grads = backward(spec, params, cache, np.array([1.0]))
        self.assertEqual(grads.weights[0][0, 0], 0.0)
        self.assertEqual(grads.biases[0][0], 0.0)

    def test_stale_cache_rejected(self):
        spec = MlpSpec((3, 4, 2))
        params = init_params(spec, np.random.default_rng(0))
        _, cache = forward(spec, params, np.ones(3))
        grads = backward(spec, params, cache, np.ones(2))
        updated, _ = adam_update(params, grads, AdamState.zeros(params), 1e-3)
        with self.assertRaises(ValueError):
            backward(spec, updated, cache, np.ones(2))

    def test_small_network_gradients(self):
        finite_difference_check(self, MlpSpec((3, 4, 4, 2), output_activation=Activation.TANH), seed=0, samples=200)

    def test_gradients_of_every_network_in_use(self):
        specs = [
            actor_spec(OBS_DIM),
            critic_spec(STATE_DIM),
            ssir_spec(OBS_DIM),
            rnd_target_spec(STATE_DIM),
            rnd_predictor_spec(STATE_DIM),
        ]
        for seed, spec in enumerate(specs):
            finite_difference_check(self, spec, seed=seed)


class AdamTests(SimpleTestCase):

    def scalar(self, value):
        return ParameterSet([np.array([[value]])], [np.array([0.0])])

    def test_zero_gradients_leave_parameters(self):
        params = self.scalar(1.5)
        new, adam = adam_update(params, params.zeros_like(), AdamState.zeros(params), 0.1)
        self.assertTrue(new.identical(params))
        self.assertEqual(adam.t, 1)
        self.assertEqual(new.version, params.version + 1)

    def test_first_step_moves_by_learning_rate(self):
        params = self.scalar(0.0)
        grads = ParameterSet([np.array([[1.0]])], [np.array([0.0])])
        new, _ = adam_update(params, grads, AdamState.zeros(params), 0.1)
        self.assertAlmostEqual(new.weights[0][0, 0], -0.1, places=7)

    def test_deterministic(self):
        params = self.scalar(0.3)
        grads = ParameterSet([np.array([[0.7]])], [np.array([-0.2])])
        adam = AdamState.zeros(params)
        first, _ = adam_update(params, grads, adam, 0.01)
        second, _ = adam_update(params, grads, adam, 0.01)
        self.assertTrue(first.identical(second))

    def test_non_finite_gradient_rejected(self):
        params = self.scalar(0.3)
        grads = ParameterSet([np.array([[np.nan]])], [np.array([0.0])])
        with self.assertRaises(NonFiniteGradientError):
            adam_update(params, grads, AdamState.zeros(params), 0.01)
        self.assertEqual(params.weights[0][0, 0], 0.3)

    def test_clip_grad_norm(self):
        grads = ParameterSet([np.array([[3.0]])], [np.array([4.0])])
        clipped, norm = clip_grad_norm(grads, 1.0)
        self.assertEqual(norm, 5.0)
        self.assertAlmostEqual(global_norm(clipped), 1.0, places=12)
        unchanged, _ = clip_grad_norm(grads, 10.0)
        self.assertIs(unchanged, grads)


class CategoricalTests(SimpleTestCase):

    def test_uniform_entropy(self):
        self.assertAlmostEqual(float(entropy(np.zeros(18))), np.log(18), places=12)
        np.testing.assert_allclose(softmax(np.zeros(18)), np.full(18, 1 / 18), rtol=1e-14)

    def test_near_deterministic_logit(self):
        logits = np.zeros(18)
        logits[5] = 50.0
        rng = np.random.default_rng(0)
        for _ in range(100):
            index, logp = categorical(logits, rng)
            self.assertEqual(index, 5)
            self.assertAlmostEqual(logp, 0.0, places=12)

    def test_extreme_logits_are_stable(self):
        logits = np.array([1e4, -1e4, 0.0, 5e3])
        self.assertTrue(np.all(np.isfinite(log_softmax(logits))))
        self.assertAlmostEqual(float(softmax(logits).sum()), 1.0, places=12)

    def test_sampling_frequencies(self):
        logits = np.log(np.array([0.1, 0.2, 0.7]))
        rng = np.random.default_rng(3)
        index, logp = sample(np.tile(logits, (30000, 1)), rng)
        freq = np.bincount(index, minlength=3) / 30000
        np.testing.assert_allclose(freq, [0.1, 0.2, 0.7], atol=0.015)
        np.testing.assert_allclose(logp, logits[index], rtol=1e-12)


class CheckpointTests(SimpleTestCase):

    def build(self):
        spec = MlpSpec((4, 3, 2), output_activation=Activation.TANH)
        params = init_params(spec, np.random.default_rng(5))
        params.version = 7
        adam = AdamState.zeros(params)
        adam.t = 3
        return Checkpoint(
            networks={'actor': (spec, params)},
            optimizers={'actor': adam},
            arrays={'normalizer': np.array([1.0, 2.0, 3.0])},
            metadata={'phase': 'challenge', 'rollout': 12},
        )

    def test_round_trip_is_bit_identical(self):
        checkpoint = self.build()
        with tempfile.TemporaryDirectory() as tmp:
            path = save_checkpoint(Path(tmp) / 'ckpt.npz', checkpoint)
            loaded = load_checkpoint(path)
        spec, params = loaded.networks['actor']
        self.assertEqual(spec, checkpoint.spec('actor'))
        self.assertTrue(params.identical(checkpoint.params('actor')))
        self.assertEqual(params.version, 7)
        self.assertEqual(loaded.optimizers['actor'].t, 3)
        np.testing.assert_array_equal(loaded.arrays['normalizer'], [1.0, 2.0, 3.0])
        self.assertEqual(loaded.metadata, {'phase': 'challenge', 'rollout': 12})

    def test_same_contents_same_bytes(self):
        with tempfile.TemporaryDirectory() as tmp:
            first = save_checkpoint(Path(tmp) / 'a.npz', self.build()).read_bytes()
            second = save_checkpoint(Path(tmp) / 'b.npz', self.build()).read_bytes()
        self.assertEqual(first, second)

    def test_corrupt_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'bad.npz'
            path.write_bytes(b'not a checkpoint')
            with self.assertRaises(CheckpointError):
                load_checkpoint(path)
            with self.assertRaises(CheckpointError):
                load_checkpoint(Path(tmp) / 'missing.npz')
