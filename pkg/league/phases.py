"""
Training-stage state machine.

Curriculum(1) .. Curriculum(K) run in order, then Challenge and Generalize
alternate until the run stops. A phase is passed once a full window of
recent results reaches the phase's win-rate threshold.
"""
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from rollout.models import Outcome

from .config import LeagueConfig
from .models import Decision, PhaseKind


@dataclass(frozen=True)
class Phase:
    kind: PhaseKind
    index: Optional[int] = None  # curriculum scenario, 1-based

    @property
    def label(self):
        if PhaseKind(self.kind) == PhaseKind.CURRICULUM:
            return f'curriculum-{self.index:02d}'
        return str(PhaseKind(self.kind).value)

    @property
    def is_curriculum(self):
        return PhaseKind(self.kind) == PhaseKind.CURRICULUM

    @classmethod
    def curriculum(cls, index):
        return cls(PhaseKind.CURRICULUM, index)

    @classmethod
    def from_label(cls, label):
        if label.startswith('curriculum-'):
            return cls.curriculum(int(label.split('-', 1)[1]))
        return cls(PhaseKind(label))


def threshold(phase, cfg=LeagueConfig()):
    """
    Win rate required to pass a phase: a linear ramp over the first
    ramp_scenarios curriculum scenarios, final_threshold after that and
    selfplay_threshold in self-play.
    """
    if not phase.is_curriculum:
        return cfg.selfplay_threshold
    k = phase.index
    if k >= cfg.ramp_scenarios:
        return cfg.final_threshold
    return cfg.first_threshold + (k - 1) * (cfg.final_threshold - cfg.first_threshold) / (cfg.ramp_scenarios - 1)


def next_phase(phase, cfg=LeagueConfig()):
    if phase.is_curriculum:
        if phase.index < cfg.curriculum_scenarios:
            return Phase.curriculum(phase.index + 1)
        return Phase(PhaseKind.CHALLENGE)
    if PhaseKind(phase.kind) == PhaseKind.CHALLENGE:
        return Phase(PhaseKind.GENERALIZE)
    return Phase(PhaseKind.CHALLENGE)


@dataclass(frozen=True)
class MatchResult:
    """One finished episode from the learner's side"""
    outcome: Outcome
    goals_for: int = 0
    goals_against: int = 0
    steps: int = 0

    def __post_init__(self):
        outcome = Outcome(self.outcome)
        expected = Outcome.WIN if self.goals_for > self.goals_against else (
            Outcome.LOSS if self.goals_for < self.goals_against else Outcome.DRAW
        )
        if (self.goals_for or self.goals_against) and outcome != expected:
            raise ValueError(f'Outcome {outcome} contradicts score {self.goals_for}-{self.goals_against}')
        object.__setattr__(self, 'outcome', outcome)

    @classmethod
    def from_episode(cls, episode):
        return cls(Outcome(episode.result), episode.goals_for, episode.goals_against, episode.steps)


@dataclass
class PhaseState:
    phase: Phase = field(default_factory=lambda: Phase.curriculum(1))
    capacity: int = 100
    window: deque = None
    curriculum_passed: int = 0
    challenge_passes: int = 0
    generalize_passes: int = 0
    episodes: int = 0
    env_steps: dict = field(default_factory=dict)  # phase label -> env steps
    elapsed: dict = field(default_factory=dict)  # phase label -> seconds

    def __post_init__(self):
        if self.window is None:
            self.window = deque(maxlen=self.capacity)

    @property
    def win_rate(self):
        """Fraction of wins in the window; 0 when empty, draws are non-wins"""
        if not self.window:
            return 0.0
        return sum(1 for outcome in self.window if outcome == Outcome.WIN) / len(self.window)

    @property
    def window_full(self):
        return len(self.window) == self.capacity

    @property
    def total_env_steps(self):
        return sum(self.env_steps.values())

    @property
    def total_elapsed(self):
        return sum(self.elapsed.values())

    def to_dict(self):
        return {
            'phase': self.phase.label,
            'capacity': self.capacity,
            'window': [str(o.value) for o in self.window],
            'curriculum_passed': self.curriculum_passed,
            'challenge_passes': self.challenge_passes,
            'generalize_passes': self.generalize_passes,
            'episodes': self.episodes,
            'env_steps': dict(self.env_steps),
            'elapsed': dict(self.elapsed),
        }

    @classmethod
    def from_dict(cls, data):
        capacity = data['capacity']
        return cls(
            phase=Phase.from_label(data['phase']),
            capacity=capacity,
            window=deque((Outcome(o) for o in data['window']), maxlen=capacity),
            curriculum_passed=data['curriculum_passed'],
            challenge_passes=data['challenge_passes'],
            generalize_passes=data['generalize_passes'],
            episodes=data['episodes'],
            env_steps=dict(data['env_steps']),
            elapsed=dict(data['elapsed']),
        )


def record_result(state, result):
    state.window.append(Outcome(result.outcome))
    state.episodes += 1
    return state


def record_progress(state, env_steps, elapsed):
    """Charge env steps and wall-clock seconds to the current phase"""
    if env_steps < 0 or elapsed < 0:
        raise ValueError('Progress accounting cannot go backwards')
    label = state.phase.label
    state.env_steps[label] = state.env_steps.get(label, 0) + int(env_steps)
    state.elapsed[label] = state.elapsed.get(label, 0.0) + float(elapsed)
    return state


def advance_check(state, cfg=LeagueConfig()):
    if state.window_full and state.win_rate >= threshold(state.phase, cfg):
        return Decision.ADVANCE
    return Decision.STAY


def advance(state, cfg=LeagueConfig()):
    """Move to the next phase with an empty window, counting the pass"""
    phase = state.phase
    if phase.is_curriculum:
        state.curriculum_passed += 1
    elif PhaseKind(phase.kind) == PhaseKind.CHALLENGE:
        state.challenge_passes += 1
    else:
        state.generalize_passes += 1
    state.phase = next_phase(phase, cfg)
    state.window.clear()
    return state
