"""
Experience containers shared by the rollout workers and the learner.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass
class Transition:
    """One environment step of the learning team"""
    obs: np.ndarray  # (N, obs_dim)
    state: np.ndarray  # (state_dim,)
    next_state: np.ndarray  # (state_dim,)
    actions: np.ndarray  # (N,)
    log_probs: np.ndarray  # (N,)
    extrinsic: float
    value: float
    done: bool
    events: tuple = ()
    intrinsic: float = 0.0


# Per-timestep array fields of RolloutBatch, in storage order
STEP_FIELDS = (
    'obs', 'states', 'next_states', 'actions', 'log_probs',
    'extrinsic', 'intrinsic', 'rewards', 'values', 'dones', 'advantages', 'returns',
    'extrinsic_advantages',
)


@dataclass
class RolloutBatch:
    obs: np.ndarray  # (T, N, obs_dim)
    states: np.ndarray  # (T, state_dim)
    next_states: np.ndarray  # (T, state_dim)
    actions: np.ndarray  # (T, N) int64
    log_probs: np.ndarray  # (T, N)
    extrinsic: np.ndarray  # (T,)
    intrinsic: np.ndarray  # (T,)
    rewards: np.ndarray  # (T,) extrinsic + intrinsic
    values: np.ndarray  # (T,) denormalized V(s_t)
    dones: np.ndarray  # (T,) bool
    advantages: Optional[np.ndarray] = None
    returns: Optional[np.ndarray] = None
    extrinsic_advantages: Optional[np.ndarray] = None  # GAE on the extrinsic reward alone
    rollout_index: int = 0
    policy_version: int = 0
    outcomes: list = field(default_factory=list)  # MatchResult per finished episode

    def __len__(self):
        return len(self.rewards)

    @property
    def n_agents(self):
        return self.actions.shape[1]

    @property
    def has_advantages(self):
        return self.advantages is not None and self.returns is not None

    def take(self, indices):
        """Sub-batch of the given timesteps (for minibatching)"""
        data = {}
        for name in STEP_FIELDS:
            value = getattr(self, name)
            data[name] = None if value is None else value[indices]
        return RolloutBatch(**data, rollout_index=self.rollout_index, policy_version=self.policy_version)

    @classmethod
    def from_transitions(cls, transitions, rollout_index=0, policy_version=0):
        if not transitions:
            raise ValueError('Cannot build a batch from zero transitions')
        extrinsic = np.array([t.extrinsic for t in transitions], dtype=np.float64)
        intrinsic = np.array([t.intrinsic for t in transitions], dtype=np.float64)
        return cls(
            obs=np.stack([t.obs for t in transitions]),
            states=np.stack([t.state for t in transitions]),
            next_states=np.stack([t.next_state for t in transitions]),
            actions=np.stack([np.asarray(t.actions, dtype=np.int64) for t in transitions]),
            log_probs=np.stack([t.log_probs for t in transitions]),
            extrinsic=extrinsic,
            intrinsic=intrinsic,
            rewards=extrinsic + intrinsic,
            values=np.array([t.value for t in transitions], dtype=np.float64),
            dones=np.array([t.done for t in transitions], dtype=bool),
            rollout_index=rollout_index,
            policy_version=policy_version,
        )
