import numpy as np

from .models import RewardVariant


def bonus_active(rollout_index, warmup_rollouts):
    """Intrinsic bonuses join the reward once warmup_rollouts rollouts have run"""
    return rollout_index >= warmup_rollouts


def total_reward(variant, base, intrinsic, alpha_ssir, active=True):
    """
    Base reward plus the variant's bonus. For SSIR intrinsic is the
    agent-mean network output, for RND it is the normalized bonus.
    Works elementwise on arrays.
    """
    variant = RewardVariant(variant)
    if variant == RewardVariant.BASE or not active:
        return base
    if variant == RewardVariant.SSIR:
        return base + alpha_ssir * intrinsic
    return base + intrinsic


def reward_decomposition(batch, pair=None):
    """Per-rollout breakdown written to the metrics log"""
    record = {
        'extrinsic_mean': float(np.mean(batch.extrinsic)),
        'intrinsic_mean': float(np.mean(batch.intrinsic)),
    }
    if pair is not None:
        record['bonus_std'] = float(pair.bonus_stats.std)
    return record
