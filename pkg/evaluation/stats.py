from dataclasses import asdict, dataclass, fields

from env.models import EventKind, Team
from rollout.models import Outcome


@dataclass
class MatchStats:
    """Football statistics of the evaluated (home) team over one match"""
    total_passes: int = 0
    good_passes: int = 0
    bad_passes: int = 0
    total_shots: int = 0
    good_shots: int = 0
    bad_shots: int = 0
    possession_steps: int = 0
    interceptions_made: int = 0
    times_intercepted: int = 0
    goals_for: int = 0
    goals_against: int = 0

    @property
    def outcome(self):
        if self.goals_for > self.goals_against:
            return Outcome.WIN
        if self.goals_for < self.goals_against:
            return Outcome.LOSS
        return Outcome.DRAW

    def record(self, events, next_state, team=Team.HOME):
        """Add one environment step"""
        team = Team(team)
        for event in events:
            own = event.team == team
            if event.kind == EventKind.PASS_ATTEMPT and own:
                self.total_passes += 1
                if event.good:
                    self.good_passes += 1
                else:
                    self.bad_passes += 1
            elif event.kind == EventKind.SHOT_ATTEMPT and own:
                self.total_shots += 1
                if event.good:
                    self.good_shots += 1
                else:
                    self.bad_shots += 1
            elif event.kind == EventKind.INTERCEPTION:
                if own:
                    self.interceptions_made += 1
                else:
                    self.times_intercepted += 1
            elif event.kind == EventKind.GOAL:
                if own:
                    self.goals_for += 1
                else:
                    self.goals_against += 1
        controller = next_state.ball.controller
        if controller is not None and Team(controller[0]) == team:
            self.possession_steps += 1
        return self

    def is_consistent(self):
        values = asdict(self).values()
        return (
            all(v >= 0 for v in values)
            and self.good_passes + self.bad_passes == self.total_passes
            and self.good_shots + self.bad_shots == self.total_shots
            and self.good_shots == self.goals_for
        )

    def to_dict(self):
        return asdict(self)


STAT_FIELDS = tuple(f.name for f in fields(MatchStats))
