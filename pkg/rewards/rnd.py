"""
Random network distillation on the global state.

A frozen random target and a deeper trainable predictor both map the
normalized next state to four outputs; the bonus is their mean squared
difference divided by a running standard deviation of past bonuses.
"""
from dataclasses import dataclass

import numpy as np

from nn.mlp import backward, forward, init_params
from nn.optim import AdamState, adam_update
from nn.specs import rnd_predictor_spec, rnd_target_spec
from policy.normalizer import RunningMeanStd

INPUT_CLIP = 5.0


@dataclass
class RndPair:
    target_spec: object
    target: object
    predictor_spec: object
    predictor: object
    adam: AdamState
    input_stats: RunningMeanStd
    bonus_stats: RunningMeanStd

    @classmethod
    def create(cls, state_dim, rng, predictor_spec=None):
        target_spec = rnd_target_spec(state_dim)
        predictor_spec = predictor_spec or rnd_predictor_spec(state_dim)
        target = init_params(target_spec, rng)
        for array in target.arrays():
            array.setflags(write=False)
        predictor = init_params(predictor_spec, rng)
        return cls(
            target_spec=target_spec,
            target=target,
            predictor_spec=predictor_spec,
            predictor=predictor,
            adam=AdamState.zeros(predictor),
            input_stats=RunningMeanStd.create((state_dim,)),
            bonus_stats=RunningMeanStd.create(),
        )

    def snapshot(self):
        return RndPair(
            self.target_spec, self.target, self.predictor_spec, self.predictor.copy(), self.adam,
            self.input_stats.copy(), self.bonus_stats.copy(),
        )


def normalize_input(pair, states):
    states = np.atleast_2d(np.asarray(states, dtype=np.float64))
    return np.clip((states - pair.input_stats.mean) / pair.input_stats.std, -INPUT_CLIP, INPUT_CLIP)


def raw_bonus(pair, states):
    """Mean over the four outputs of (predictor - target)^2, per state"""
    x = normalize_input(pair, states)
    target, _ = forward(pair.target_spec, pair.target, x)
    prediction, _ = forward(pair.predictor_spec, pair.predictor, x)
    return np.mean((prediction - target) ** 2, axis=1)


def rnd_bonus(pair, next_state_vec):
    """Normalized bonus for one state; never negative"""
    return float(raw_bonus(pair, next_state_vec)[0] / pair.bonus_stats.std)


def rnd_bonus_batch(pair, next_states):
    return raw_bonus(pair, next_states) / pair.bonus_stats.std


def rnd_update(pair, state_vecs, lr, update_normalizers=True, network='predictor'):
    """
    One gradient step on the predictor. With update_normalizers the input
    statistics are updated before and the bonus statistics after scoring
    the batch. Returns the loss before the step.
    """
    if network != 'predictor':
        raise ValueError('Only the predictor network of an RND pair is trainable')
    states = np.atleast_2d(np.asarray(state_vecs, dtype=np.float64))
    if update_normalizers:
        pair.input_stats = pair.input_stats.update(states)
    x = normalize_input(pair, states)
    target, _ = forward(pair.target_spec, pair.target, x)
    prediction, cache = forward(pair.predictor_spec, pair.predictor, x)
    diff = prediction - target
    per_state = np.mean(diff ** 2, axis=1)
    if update_normalizers:
        pair.bonus_stats = pair.bonus_stats.update(per_state)
    grad_out = 2.0 * diff / diff.size
    grads = backward(pair.predictor_spec, pair.predictor, cache, grad_out)
    pair.predictor, pair.adam = adam_update(pair.predictor, grads, pair.adam, lr)
    return float(per_state.mean())
