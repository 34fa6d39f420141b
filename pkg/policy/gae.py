import numpy as np


def compute_gae(rewards, values, bootstrap_value, dones, gamma, gae_lambda):
    """
    Generalized advantage estimates for one contiguous segment.

    dones[t] marks that s_{t+1} is terminal; bootstrap_value is V of the
    state after the last step (ignored when that step is terminal).
    Returns (advantages, returns) with returns = advantages + values.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=bool)
    if not (rewards.shape == values.shape == dones.shape):
        raise ValueError('rewards, values and dones must have the same length')

    advantages = np.zeros_like(rewards)
    next_value, next_advantage = float(bootstrap_value), 0.0
    for t in reversed(range(len(rewards))):
        live = 0.0 if dones[t] else 1.0
        delta = rewards[t] + gamma * next_value * live - values[t]
        next_advantage = delta + gamma * gae_lambda * live * next_advantage
        advantages[t] = next_advantage
        next_value = values[t]
    return advantages, advantages + values
