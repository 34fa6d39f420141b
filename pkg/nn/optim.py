import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)


class NonFiniteGradientError(ValueError):
    """Raised when an update is attempted with NaN or infinite gradients"""


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, params, **kwargs):
        return cls(
            m=[np.zeros_like(a) for a in params.arrays()],
            v=[np.zeros_like(a) for a in params.arrays()],
            **kwargs,
        )

    def copy(self):
        return AdamState([m.copy() for m in self.m], [v.copy() for v in self.v], self.t, self.beta1, self.beta2, self.eps)


def global_norm(grads):
    return float(np.sqrt(sum(float(np.sum(a * a)) for a in grads.arrays())))


def clip_grad_norm(grads, max_norm):
    """
    Rescale gradients so their global L2 norm is at most max_norm.
    Returns the clipped gradients and the norm before clipping.
    """
    norm = global_norm(grads)
    if max_norm is None or norm <= max_norm or norm == 0.0:
        return grads, norm
    return grads.scaled(max_norm / norm), norm


def adam_update(params, grads, adam, lr):
    """
    One bias-corrected Adam step. Returns new parameters (version + 1) and
    a new AdamState; the inputs are not modified.
    """
    arrays, grad_arrays = params.arrays(), grads.arrays()
    if len(arrays) != len(grad_arrays) or len(arrays) != len(adam.m):
        raise ValueError('Gradient, parameter and optimizer shapes do not match')
    for a, g in zip(arrays, grad_arrays):
        if a.shape != g.shape:
            raise ValueError(f'Gradient shape {g.shape} does not match parameter shape {a.shape}')
    if not grads.is_finite():
        bad = [i for i, g in enumerate(grad_arrays) if not np.all(np.isfinite(g))]
        logger.warning('Rejected update: non-finite gradients in parameter arrays %s', bad)
        raise NonFiniteGradientError(f'Non-finite gradients in parameter arrays {bad}')

    t = adam.t + 1
    new_params = params.copy()
    new_params.version = params.version + 1
    new_m, new_v = [], []
    correction1 = 1.0 - adam.beta1 ** t
    correction2 = 1.0 - adam.beta2 ** t
    for target, g, m, v in zip(new_params.arrays(), grad_arrays, adam.m, adam.v):
        m = adam.beta1 * m + (1.0 - adam.beta1) * g
        v = adam.beta2 * v + (1.0 - adam.beta2) * g * g
        target -= lr * (m / correction1) / (np.sqrt(v / correction2) + adam.eps)
        new_m.append(m)
        new_v.append(v)
    return new_params, AdamState(new_m, new_v, t, adam.beta1, adam.beta2, adam.eps)
