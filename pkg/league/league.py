import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from rollout.merge import win_rate
from rollout.messages import OpponentSnapshot

from .config import LeagueConfig
from .curriculum import phase_scenario
from .models import Decision
from .phases import MatchResult, PhaseState, advance, advance_check, record_progress, record_result, threshold
from .pool import PolicyPool, snapshot
from .progress import ProgressLog
from .sampling import HEURISTIC, select_opponent
from .signals import phase_advanced

logger = logging.getLogger(__name__)

EMA_WEIGHT = 0.1


@dataclass
class LeagueReport:
    phase: str  # phase the rollout was played in
    win_rate: float  # over the result window
    rollout_win_rate: Optional[float]
    win_rate_ema: Optional[float]
    threshold: float
    advanced: bool
    entry: Optional[str] = None  # pool key of the snapshot taken on advance

    def to_dict(self):
        return {
            'phase': self.phase,
            'win_rate': self.win_rate,
            'rollout_win_rate': self.rollout_win_rate,
            'win_rate_ema': self.win_rate_ema,
            'threshold': self.threshold,
            'advanced': self.advanced,
            'entry': self.entry,
        }


class League:
    """
    Owns the phase state, the snapshot pool and the progress log of a run.
    Single writer: only the learner loop calls into it.
    """

    def __init__(self, run_dir, players_per_team, cfg=LeagueConfig(), state=None, snapshot_metadata=None):
        self.run_dir = Path(run_dir)
        self.players_per_team = players_per_team
        self.cfg = cfg
        # Stored with every pool snapshot so it can be evaluated on its own
        self.snapshot_metadata = dict(snapshot_metadata or {})
        self.state = state or PhaseState(capacity=cfg.window_capacity)
        self.pool = PolicyPool(self.run_dir / 'pool')
        self.progress = ProgressLog(self.run_dir)
        self.win_rate_ema = None
        self._actors = {}

    @property
    def phase(self):
        return self.state.phase

    def scenario(self):
        return phase_scenario(self.phase, self.players_per_team, self.cfg)

    def threshold(self):
        return threshold(self.phase, self.cfg)

    def _actor(self, entry):
        if entry.key not in self._actors:
            self._actors[entry.key] = self.pool.load_actor(entry)
        return self._actors[entry.key]

    def forget_cached_actors(self):
        self._actors.clear()

    def choose_opponent(self, rng):
        strength = self.scenario().opponent_strength
        choice = select_opponent(self.phase, self.pool, rng, self.cfg)
        if choice == HEURISTIC:
            return OpponentSnapshot.heuristic(strength)
        spec, actor = self._actor(choice)
        return OpponentSnapshot.policy(spec, actor, choice.key, strength=strength)

    def after_rollout(self, outcomes, rollout_index, env_steps, elapsed, actor_spec, actor, window_outcomes=None):
        """
        Fold one rollout into the league: results, accounting, the pass
        check and, on a pass, the snapshot and phase change. When
        window_outcomes is given those results fill the win-rate window in
        place of the rollout episodes.
        """
        played = self.phase
        measured = outcomes if window_outcomes is None else window_outcomes
        for outcome in measured:
            record_result(self.state, MatchResult.from_episode(outcome))
        self.pool.record_outcomes(outcomes)
        record_progress(self.state, env_steps, elapsed)

        rollout_rate = win_rate(measured)
        if rollout_rate is not None:
            if self.win_rate_ema is None:
                self.win_rate_ema = rollout_rate
            else:
                self.win_rate_ema = (1 - EMA_WEIGHT) * self.win_rate_ema + EMA_WEIGHT * rollout_rate

        report = LeagueReport(
            phase=played.label,
            win_rate=self.state.win_rate,
            rollout_win_rate=rollout_rate,
            win_rate_ema=self.win_rate_ema,
            threshold=self.threshold(),
            advanced=advance_check(self.state, self.cfg) == Decision.ADVANCE,
        )
        if report.advanced:
            self.pool.decay_statistics(self.cfg.pool_stats_decay)
            entry = snapshot(
                self.pool, actor_spec, actor, played.label, self.state.total_env_steps,
                metadata={**self.snapshot_metadata, 'rollout_index': rollout_index},
            )
            report.entry = entry.key
            advance(self.state, self.cfg)
            logger.info('Passed %s at rollout %d (win rate %.3f); now in %s',
                        played.label, rollout_index, report.win_rate, self.phase.label)

        self.progress.append(
            played.label, rollout_index, self.state.total_env_steps, self.state.total_elapsed,
            report.win_rate, report.threshold, report.advanced,
        )
        if report.advanced:
            phase_advanced.send(
                sender=League, previous=played, current=self.phase, entry=self.pool.get(report.entry),
                rollout_index=rollout_index, env_steps=self.state.total_env_steps,
            )
        return report

    def state_dict(self):
        return {'phase_state': self.state.to_dict(), 'win_rate_ema': self.win_rate_ema}

    def load_state_dict(self, data):
        self.state = PhaseState.from_dict(data['phase_state'])
        self.win_rate_ema = data.get('win_rate_ema')
