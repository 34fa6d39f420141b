"""
Messages exchanged between the learner and rollout workers.

A worker receives one WorkerTask holding immutable snapshots and sends back
one RolloutBuffer. Everything here pickles, so the same messages travel to
a local process pool or could be sent over a wire.
"""
from dataclasses import dataclass, field
from typing import Optional

from env.state import MatchState, ScenarioConfig
from rewards.models import RewardVariant
from rewards.shaped import ShapedRewardConfig

from .models import OpponentKind, Outcome


@dataclass(frozen=True)
class LearnerSnapshot:
    actor_spec: object
    actor: object
    critic_spec: object
    critic: object
    normalizer: object
    pe_dim: int = 16

    @property
    def version(self):
        return self.actor.version

    @classmethod
    def from_learner(cls, learner):
        return cls(
            actor_spec=learner.actor_spec,
            actor=learner.actor.copy(),
            critic_spec=learner.critic_spec,
            critic=learner.critic.copy(),
            normalizer=learner.normalizer.copy(),
            pe_dim=learner.config.pe_dim,
        )


@dataclass(frozen=True)
class OpponentSnapshot:
    """The frozen side of a match: the scripted AI or a pool entry"""
    kind: OpponentKind = OpponentKind.HEURISTIC
    strength: float = 1.0
    label: str = 'heuristic'
    actor_spec: object = None
    actor: object = None

    @classmethod
    def heuristic(cls, strength, label='heuristic'):
        return cls(OpponentKind.HEURISTIC, strength, label)

    @classmethod
    def policy(cls, actor_spec, actor, label, strength=1.0):
        return cls(OpponentKind.POLICY, strength, label, actor_spec, actor)


@dataclass(frozen=True)
class BonusSnapshot:
    variant: RewardVariant = RewardVariant.BASE
    active: bool = False
    alpha: float = 0.1
    ssir: object = None  # SsirNetwork
    rnd: object = None  # RndPair


@dataclass(frozen=True)
class WorkerTask:
    rollout_index: int
    worker_index: int
    run_seed: int
    steps: int
    scenario: ScenarioConfig
    learner: LearnerSnapshot
    opponent: OpponentSnapshot
    bonus: BonusSnapshot = field(default_factory=BonusSnapshot)
    reward: ShapedRewardConfig = field(default_factory=ShapedRewardConfig)
    replay_path: Optional[str] = None
    initial_state: Optional[MatchState] = None  # carried over from the previous rollout of the phase


@dataclass(frozen=True)
class EpisodeOutcome:
    result: Outcome
    goals_for: int
    goals_against: int
    steps: int
    opponent: str

    def to_dict(self):
        return {
            'result': str(Outcome(self.result).value),
            'goals_for': self.goals_for,
            'goals_against': self.goals_against,
            'steps': self.steps,
            'opponent': self.opponent,
        }


@dataclass
class RolloutBuffer:
    """
    Ordered transitions of one worker. Episodes are delimited by the done
    flags; the first segment continues the match carried over from the
    previous rollout. final_state is the live match the worker stopped in.
    """
    rollout_index: int
    worker_index: int
    policy_version: int
    transitions: list
    bootstrap_value: float
    outcomes: list = field(default_factory=list)
    final_state: Optional[MatchState] = None

    def __len__(self):
        return len(self.transitions)
