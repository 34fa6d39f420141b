import numpy as np

from policy.batch import STEP_FIELDS, RolloutBatch
from policy.gae import compute_gae

from .models import Outcome


def buffer_batch(buffer, gamma, gae_lambda):
    """
    Batch of one worker with advantages on the total reward and on the
    extrinsic reward alone. Dones cut the worker's stream into episodes;
    the last segment bootstraps from the critic unless it ended.
    """
    batch = RolloutBatch.from_transitions(buffer.transitions, buffer.rollout_index, buffer.policy_version)
    batch.advantages, batch.returns = compute_gae(
        batch.rewards, batch.values, buffer.bootstrap_value, batch.dones, gamma, gae_lambda,
    )
    batch.extrinsic_advantages, _ = compute_gae(
        batch.extrinsic, batch.values, buffer.bootstrap_value, batch.dones, gamma, gae_lambda,
    )
    batch.outcomes = list(buffer.outcomes)
    return batch


def concat_batches(batches):
    first = batches[0]
    data = {name: np.concatenate([getattr(b, name) for b in batches]) for name in STEP_FIELDS}
    outcomes = [o for b in batches for o in b.outcomes]
    return RolloutBatch(**data, rollout_index=first.rollout_index, policy_version=first.policy_version, outcomes=outcomes)


def merge(buffers, gamma=0.99, gae_lambda=0.95):
    """Worker buffers of one rollout as a single batch, in worker order"""
    if not buffers:
        raise ValueError('Cannot merge zero rollout buffers')
    versions = {b.policy_version for b in buffers}
    if len(versions) > 1:
        raise ValueError(f'Buffers mix policy versions {sorted(versions)}')
    indices = {b.rollout_index for b in buffers}
    if len(indices) > 1:
        raise ValueError(f'Buffers come from different rollouts {sorted(indices)}')
    ordered = sorted(buffers, key=lambda b: b.worker_index)
    return concat_batches([buffer_batch(b, gamma, gae_lambda) for b in ordered])


def win_rate(outcomes):
    """Fraction of won episodes, None without finished episodes"""
    if not outcomes:
        return None
    return sum(1 for o in outcomes if Outcome(o.result) == Outcome.WIN) / len(outcomes)


def outcome_counts(outcomes):
    counts = {str(choice.value): 0 for choice in Outcome}
    for outcome in outcomes:
        counts[str(Outcome(outcome.result).value)] += 1
    return counts
