"""
Learner-side updates: the centralized critic and the shared actor.
"""
import logging
from dataclasses import dataclass

import numpy as np

from nn.mlp import backward, forward, init_params
from nn.optim import AdamState, NonFiniteGradientError, adam_update, clip_grad_norm
from nn.specs import ACTOR_OUTPUT_GAIN, CRITIC_OUTPUT_GAIN, actor_spec, critic_spec

from .jrpo import jrpo_loss
from .normalizer import ValueNormalizer

logger = logging.getLogger(__name__)


def predict_values(spec, params, normalizer, states):
    """Denormalized critic values for a (T, state_dim) array"""
    out, _ = forward(spec, params, np.atleast_2d(states))
    return normalizer.denormalize(out[:, 0])


@dataclass
class CriticUpdate:
    params: object
    adam: AdamState
    normalizer: ValueNormalizer
    value_loss: float


def critic_update(spec, params, adam, normalizer, batch, lr, epochs=1, minibatch_size=None, rng=None, max_grad_norm=None):
    """
    Fold the raw returns into the normalizer once, then regress the critic
    on normalized returns with mean squared error.
    """
    if not batch.has_advantages:
        raise ValueError('Batch has no return targets')
    returns = np.asarray(batch.returns, dtype=np.float64)
    if not np.all(np.isfinite(returns)):
        raise NonFiniteGradientError('Non-finite return targets')
    normalizer = normalizer.update(returns)
    targets = normalizer.normalize(returns)

    T = len(returns)
    size = minibatch_size or T
    losses = []
    for _ in range(epochs):
        order = rng.permutation(T) if rng is not None else np.arange(T)
        for start in range(0, T, size):
            idx = order[start:start + size]
            out, cache = forward(spec, params, batch.states[idx])
            error = out[:, 0] - targets[idx]
            losses.append(float(np.mean(error ** 2)))
            grad_out = (2.0 / len(idx)) * error[:, None]
            grads, _ = clip_grad_norm(backward(spec, params, cache, grad_out), max_grad_norm)
            params, adam = adam_update(params, grads, adam, lr)
    return CriticUpdate(params, adam, normalizer, float(np.mean(losses)))


def explained_variance(predictions, targets):
    var = np.var(targets)
    if var == 0.0:
        return 0.0
    return float(1.0 - np.var(targets - predictions) / var)


class JrpoLearner:
    """
    Owns the actor and critic parameters with their optimizer states and
    runs the per-rollout update.
    """

    def __init__(self, obs_dim, state_dim, config, rng):
        self.config = config
        self.actor_spec = actor_spec(obs_dim)
        self.critic_spec = critic_spec(state_dim)
        self.actor = init_params(self.actor_spec, rng, output_gain=ACTOR_OUTPUT_GAIN)
        self.critic = init_params(self.critic_spec, rng, output_gain=CRITIC_OUTPUT_GAIN)
        self.actor_adam = AdamState.zeros(self.actor)
        self.critic_adam = AdamState.zeros(self.critic)
        self.normalizer = ValueNormalizer.create()

    def values(self, states):
        return predict_values(self.critic_spec, self.critic, self.normalizer, states)

    def update(self, batch, rng):
        """
        Run epochs_per_rollout passes of shuffled minibatches over the batch.
        Returns the update metrics.
        """
        cfg = self.config
        T = len(batch)
        objectives, entropies, clip_fractions = [], [], []
        skipped = 0
        for _ in range(cfg.epochs_per_rollout):
            order = rng.permutation(T)
            for start in range(0, T, cfg.minibatch_size):
                minibatch = batch.take(order[start:start + cfg.minibatch_size])
                result = jrpo_loss(self.actor_spec, self.actor, minibatch, cfg.clip_epsilon, cfg.entropy_coef)
                descent = result.gradients.scaled(-1.0)
                descent, _ = clip_grad_norm(descent, cfg.max_grad_norm)
                try:
                    self.actor, self.actor_adam = adam_update(self.actor, descent, self.actor_adam, cfg.lr_actor)
                except NonFiniteGradientError:
                    skipped += 1
                    continue
                objectives.append(result.objective)
                entropies.append(result.entropy)
                clip_fractions.append(result.clip_fraction)

        critic = critic_update(
            self.critic_spec, self.critic, self.critic_adam, self.normalizer, batch, cfg.lr_critic,
            epochs=cfg.epochs_per_rollout, minibatch_size=cfg.minibatch_size, rng=rng,
            max_grad_norm=cfg.max_grad_norm,
        )
        self.critic, self.critic_adam, self.normalizer = critic.params, critic.adam, critic.normalizer
        if skipped:
            logger.warning('Skipped %d actor minibatches with non-finite gradients', skipped)

        return {
            'objective': float(np.mean(objectives)) if objectives else 0.0,
            'entropy': float(np.mean(entropies)) if entropies else 0.0,
            'clip_fraction': float(np.mean(clip_fractions)) if clip_fractions else 0.0,
            'value_loss': critic.value_loss,
            'explained_variance': explained_variance(batch.values, batch.returns),
            'skipped_minibatches': skipped,
        }
