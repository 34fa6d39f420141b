"""
Joint-ratio clipped policy objective.

All agents share one actor. The probability of the team's joint action is
the product of the per-agent probabilities, so its log is the sum of the
per-agent log-probabilities and one importance ratio is taken per timestep.
"""
from dataclasses import dataclass

import numpy as np

from nn.distributions import log_softmax, sample
from nn.mlp import backward, forward

ADVANTAGE_EPS = 1e-8


@dataclass
class JrpoResult:
    objective: float
    gradients: object  # ParameterSet, ascent direction of the objective
    surrogate: float
    entropy: float  # mean joint entropy
    clip_fraction: float


def act(spec, params, observations, rng):
    """
    Sample one action per agent from the shared actor.
    observations: (N, obs_dim). Returns (actions, log_probs), both (N,).
    """
    logits, _ = forward(spec, params, np.atleast_2d(observations))
    actions, log_probs = sample(logits, rng)
    return actions.astype(np.int64), log_probs


def joint_log_prob(per_agent_log_probs):
    """Log-probability of the joint action: sum over agents (last axis)"""
    return np.sum(np.asarray(per_agent_log_probs, dtype=np.float64), axis=-1)


def normalize_advantages(advantages):
    advantages = np.asarray(advantages, dtype=np.float64)
    return (advantages - advantages.mean()) / (advantages.std() + ADVANTAGE_EPS)


def clipped_surrogate(ratio, advantages, clip_epsilon):
    """Per-timestep min(r A, clip(r, 1-eps, 1+eps) A)"""
    unclipped = ratio * advantages
    clipped = np.clip(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon) * advantages
    return np.minimum(unclipped, clipped), unclipped <= clipped


def jrpo_loss(spec, params, batch, clip_epsilon, entropy_coef, normalize=True):
    """
    Objective (to maximize) and its gradient with respect to the actor
    parameters:
        mean_t min(r_t A_t, clip(r_t) A_t) + entropy_coef * mean_t H_t
    with r_t = exp(joint_new_t - joint_old_t) and H_t the joint entropy.
    """
    if not batch.has_advantages:
        raise ValueError('Batch has no advantages; run GAE before the policy loss')
    T, N = batch.actions.shape
    advantages = normalize_advantages(batch.advantages) if normalize else np.asarray(batch.advantages)

    logits, cache = forward(spec, params, batch.obs.reshape(T * N, -1))
    logp_all = log_softmax(logits).reshape(T, N, -1)
    probs = np.exp(logp_all)
    new_logp = np.take_along_axis(logp_all, batch.actions[..., None], axis=-1)[..., 0]

    ratio = np.exp(joint_log_prob(new_logp) - joint_log_prob(batch.log_probs))
    surrogate, unclipped_active = clipped_surrogate(ratio, advantages, clip_epsilon)
    agent_entropy = -(probs * logp_all).sum(axis=-1)  # (T, N)
    joint_entropy = agent_entropy.sum(axis=-1)
    objective = surrogate.mean() + entropy_coef * joint_entropy.mean()

    # d objective / d logits
    d_joint = np.where(unclipped_active, ratio * advantages, 0.0) / T  # (T,)
    one_hot = np.zeros_like(probs)
    np.put_along_axis(one_hot, batch.actions[..., None], 1.0, axis=-1)
    d_logits = d_joint[:, None, None] * (one_hot - probs)
    d_logits -= (entropy_coef / T) * probs * (logp_all + agent_entropy[..., None])

    grads = backward(spec, params, cache, d_logits.reshape(T * N, -1))
    clip_fraction = float(np.mean(np.abs(ratio - 1.0) > clip_epsilon))
    return JrpoResult(
        objective=float(objective),
        gradients=grads,
        surrogate=float(surrogate.mean()),
        entropy=float(joint_entropy.mean()),
        clip_fraction=clip_fraction,
    )
