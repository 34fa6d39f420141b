"""
Self-supervised intrinsic reward: a small tanh network scores every
(observation, action) pair and is regressed towards a signal derived from
the extrinsic advantage of the timestep.
"""
from dataclasses import dataclass

import numpy as np

from nn.mlp import backward, forward, init_params
from nn.optim import AdamState, adam_update
from nn.specs import ssir_spec
from policy.jrpo import normalize_advantages


@dataclass
class SsirNetwork:
    spec: object
    params: object
    adam: AdamState

    @classmethod
    def create(cls, obs_dim, rng):
        spec = ssir_spec(obs_dim)
        params = init_params(spec, rng)
        return cls(spec, params, AdamState.zeros(params))

    def snapshot(self):
        return SsirNetwork(self.spec, self.params.copy(), self.adam)


def _selected(net, obs, actions):
    """r_phi(o, a) for every (timestep, agent); obs (T, N, d), actions (T, N)"""
    T, N = actions.shape
    out, cache = forward(net.spec, net.params, obs.reshape(T * N, -1))
    flat_actions = actions.reshape(T * N)
    return out[np.arange(T * N), flat_actions].reshape(T, N), out, cache


def ssir_bonus(net, observations, actions):
    """Mean over agents of r_phi(o_i, a_i) for one timestep"""
    obs = np.asarray(observations, dtype=np.float64)[None]
    values, _, _ = _selected(net, obs, np.asarray(actions)[None])
    return float(values.mean())


def ssir_bonus_batch(net, obs, actions):
    """Per-timestep agent-mean bonus for a (T, N, d) block of observations"""
    values, _, _ = _selected(net, np.asarray(obs, dtype=np.float64), np.asarray(actions))
    return values.mean(axis=1)


def ssir_targets(advantages):
    """Regression targets: normalized extrinsic advantages clipped to [-1, 1]"""
    return np.clip(normalize_advantages(advantages), -1.0, 1.0)


def ssir_regress(net, obs, actions, targets, lr):
    """
    One gradient step on the mean squared error between r_phi(o_i, a_i) and
    the timestep's target, averaged over agents and timesteps. Returns the
    loss before the step.
    """
    obs = np.asarray(obs, dtype=np.float64)
    actions = np.asarray(actions)
    T, N = actions.shape
    values, out, cache = _selected(net, obs, actions)
    error = values - np.asarray(targets, dtype=np.float64)[:, None]
    loss = float(np.mean(error ** 2))
    grad_out = np.zeros_like(out)
    grad_out[np.arange(T * N), actions.reshape(T * N)] = (2.0 / (T * N)) * error.reshape(T * N)
    grads = backward(net.spec, net.params, cache, grad_out)
    net.params, net.adam = adam_update(net.params, grads, net.adam, lr)
    return loss


def ssir_update(net, batch, lr):
    advantages = batch.extrinsic_advantages if batch.extrinsic_advantages is not None else batch.advantages
    if advantages is None:
        raise ValueError('Batch has no advantages to derive intrinsic reward targets from')
    return ssir_regress(net, batch.obs, batch.actions, ssir_targets(advantages), lr)
