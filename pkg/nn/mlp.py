"""
Fully connected networks with hand-written backprop, in float64.

Layer i computes z_i = a_{i-1} @ W_i + b_i. Hidden layers apply ReLU (with
subgradient 0 at 0), the output layer applies identity or tanh.
"""
from dataclasses import dataclass, field

import numpy as np
from django.core.exceptions import ImproperlyConfigured

from .models import Activation

HIDDEN_GAIN = np.sqrt(2.0)


@dataclass(frozen=True)
class MlpSpec:
    layer_sizes: tuple
    hidden_activation: str = Activation.RELU
    output_activation: str = Activation.IDENTITY

    def __post_init__(self):
        object.__setattr__(self, 'layer_sizes', tuple(int(s) for s in self.layer_sizes))
        object.__setattr__(self, 'hidden_activation', Activation(self.hidden_activation))
        object.__setattr__(self, 'output_activation', Activation(self.output_activation))
        if len(self.layer_sizes) < 2:
            raise ImproperlyConfigured('An MLP needs at least an input and an output size')
        if min(self.layer_sizes) < 1:
            raise ImproperlyConfigured(f'Layer sizes must be positive, got {self.layer_sizes}')
        if self.hidden_activation != Activation.RELU:
            raise ImproperlyConfigured('Hidden layers use ReLU')

    @property
    def n_layers(self):
        """Number of weight layers"""
        return len(self.layer_sizes) - 1

    @property
    def input_size(self):
        return self.layer_sizes[0]

    @property
    def output_size(self):
        return self.layer_sizes[-1]

    def shapes(self):
        return [(self.layer_sizes[i], self.layer_sizes[i + 1]) for i in range(self.n_layers)]

    def to_dict(self):
        return {
            'layer_sizes': list(self.layer_sizes),
            'hidden_activation': str(self.hidden_activation.value),
            'output_activation': str(self.output_activation.value),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(tuple(data['layer_sizes']), data['hidden_activation'], data['output_activation'])


@dataclass
class ParameterSet:
    """Weights and biases of one network plus a version counter"""
    weights: list
    biases: list
    version: int = 0

    def arrays(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def copy(self):
        return ParameterSet([w.copy() for w in self.weights], [b.copy() for b in self.biases], self.version)

    def zeros_like(self):
        return ParameterSet([np.zeros_like(w) for w in self.weights], [np.zeros_like(b) for b in self.biases], self.version)

    def scaled(self, factor):
        return ParameterSet([w * factor for w in self.weights], [b * factor for b in self.biases], self.version)

    def is_finite(self):
        return all(np.all(np.isfinite(a)) for a in self.arrays())

    def flat(self):
        return np.concatenate([a.ravel() for a in self.arrays()])

    def with_flat(self, vector):
        out, offset = self.copy(), 0
        for target in out.arrays():
            size = target.size
            target[...] = vector[offset:offset + size].reshape(target.shape)
            offset += size
        return out

    def matches(self, spec):
        return (
            len(self.weights) == spec.n_layers
            and all(w.shape == s for w, s in zip(self.weights, spec.shapes()))
            and all(b.shape == (s[1],) for b, s in zip(self.biases, spec.shapes()))
        )

    def identical(self, other):
        return len(self.weights) == len(other.weights) and all(
            np.array_equal(a, b) for a, b in zip(self.arrays(), other.arrays())
        )


@dataclass
class ForwardCache:
    spec: MlpSpec
    version: int
    activations: list = field(default_factory=list)  # a_0 = input, ..., a_{L-1}
    pre_activations: list = field(default_factory=list)  # z_1 .. z_L
    output: np.ndarray = None
    batched: bool = False


def orthogonal(shape, gain, rng):
    rows, cols = shape
    flat = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(flat)
    q = q * np.sign(np.diag(r))
    if rows < cols:
        q = q.T
    return gain * q[:rows, :cols]


def init_params(spec, rng, output_gain=1.0):
    """Orthogonal weights (gain sqrt 2 on hidden layers), zero biases"""
    weights, biases = [], []
    for i, shape in enumerate(spec.shapes()):
        gain = output_gain if i == spec.n_layers - 1 else HIDDEN_GAIN
        weights.append(orthogonal(shape, gain, rng))
        biases.append(np.zeros(shape[1]))
    return ParameterSet(weights, biases)


def zero_params(spec):
    return ParameterSet([np.zeros(s) for s in spec.shapes()], [np.zeros(s[1]) for s in spec.shapes()])


def forward(spec, params, x):
    """
    Run the network on one input vector or a batch (rows are samples).
    """
    x = np.asarray(x, dtype=np.float64)
    batched = x.ndim == 2
    if x.ndim not in (1, 2) or x.shape[-1] != spec.input_size:
        raise ValueError(f'Expected input of width {spec.input_size}, got shape {x.shape}')
    if not params.matches(spec):
        raise ValueError('Parameter shapes do not match the network spec')

    cache = ForwardCache(spec=spec, version=params.version, batched=batched)
    a = x if batched else x[None, :]
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        cache.activations.append(a)
        z = a @ w + b
        cache.pre_activations.append(z)
        if i < spec.n_layers - 1:
            a = np.maximum(z, 0.0)
        elif spec.output_activation == Activation.TANH:
            a = np.tanh(z)
        else:
            a = z
    cache.output = a
    return (a if batched else a[0]), cache


def backward(spec, params, cache, output_gradient):
    """
    Gradients of sum(output * output_gradient) with respect to every
    weight and bias, summed over the batch.
    """
    if cache.spec != spec or cache.version != params.version or len(cache.pre_activations) != spec.n_layers:
        raise ValueError('Forward cache is stale or belongs to another network')
    g = np.asarray(output_gradient, dtype=np.float64)
    if not cache.batched:
        g = g[None, :]
    if g.shape != cache.output.shape:
        raise ValueError(f'Output gradient shape {g.shape} does not match output {cache.output.shape}')

    if spec.output_activation == Activation.TANH:
        g = g * (1.0 - cache.output ** 2)

    grads = params.zeros_like()
    for i in reversed(range(spec.n_layers)):
        a = cache.activations[i]
        grads.weights[i] = a.T @ g
        grads.biases[i] = g.sum(axis=0)
        if i > 0:
            g = (g @ params.weights[i].T) * (cache.pre_activations[i - 1] > 0.0)
    return grads
