"""
Match state types for the kinematic football simulator.

Coordinates are normalized: x spans [-length/2, length/2] (the home team
attacks towards +x), y spans [-width/2, width/2] with +y pointing to the
bottom touchline.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from django.core.exceptions import ImproperlyConfigured

from .models import Team


@dataclass(frozen=True)
class FieldConfig:
    length: float = 2.0
    width: float = 0.84
    goal_half_width: float = 0.1

    @property
    def half_length(self):
        return self.length / 2.0

    @property
    def half_width(self):
        return self.width / 2.0

    def validate(self):
        if self.length <= 0 or self.width <= 0:
            raise ImproperlyConfigured('Field length and width must be positive')
        if not 0 < self.goal_half_width < self.width / 2.0:
            raise ImproperlyConfigured('Goal half-width must lie in (0, width/2)')

    def contains(self, x, y):
        return abs(x) <= self.half_length and abs(y) <= self.half_width


def default_formation(players_per_team):
    """
    Home formation in the own half: a keeper on the goal line area and
    outfield lines of up to four players, back to front.
    """
    positions = [(-0.9, 0.0)]
    outfield = players_per_team - 1
    line_x = [-0.65, -0.4, -0.15]
    line = 0
    while outfield > 0:
        size = min(4, outfield)
        x = line_x[min(line, len(line_x) - 1)]
        if size == 1:
            ys = [0.0]
        else:
            ys = [-0.3 + 0.6 * k / (size - 1) for k in range(size)]
        positions.extend((x, y) for y in ys)
        outfield -= size
        line += 1
    return tuple(positions[:players_per_team])


def mirror_positions(positions):
    return tuple((-x, -y) for x, y in positions)


@dataclass(frozen=True)
class ScenarioConfig:
    """
    One football scenario: team size, episode rules, opponent reaction
    strength and the starting layout.
    """
    players_per_team: int = 4
    episode_step_limit: int = 500
    terminate_on_score_or_fault: bool = True
    offside_enabled: bool = False
    opponent_strength: float = 1.0
    home_positions: tuple = ()
    away_positions: tuple = ()
    seed: int = 0
    ball_position: tuple = (0.0, 0.0)
    kickoff_holder: Optional[int] = None
    name: str = 'kickoff'
    pitch: FieldConfig = field(default_factory=FieldConfig)

    def __post_init__(self):
        # Positions default to the standard formation for the team size
        if not self.home_positions and self.players_per_team > 0:
            object.__setattr__(self, 'home_positions', default_formation(self.players_per_team))
        if not self.away_positions and self.home_positions:
            object.__setattr__(self, 'away_positions', mirror_positions(self.home_positions))
        object.__setattr__(self, 'home_positions', tuple(tuple(map(float, p)) for p in self.home_positions))
        object.__setattr__(self, 'away_positions', tuple(tuple(map(float, p)) for p in self.away_positions))
        object.__setattr__(self, 'ball_position', tuple(map(float, self.ball_position)))

    def validate(self):
        """Raise ImproperlyConfigured if the scenario cannot be played"""
        self.pitch.validate()
        if self.players_per_team < 1:
            raise ImproperlyConfigured('A scenario needs at least one player per team')
        if self.episode_step_limit <= 0:
            raise ImproperlyConfigured('episode_step_limit must be positive')
        if not 0.0 < self.opponent_strength <= 1.0:
            raise ImproperlyConfigured('opponent_strength must lie in (0, 1]')
        if len(self.home_positions) != self.players_per_team or len(self.away_positions) != self.players_per_team:
            raise ImproperlyConfigured('Initial positions must list exactly one (x, y) per player and team')
        if self.kickoff_holder is not None and not 0 <= self.kickoff_holder < self.players_per_team:
            raise ImproperlyConfigured('kickoff_holder is not a valid home player index')

    def positions(self, team):
        return self.home_positions if Team(team) == Team.HOME else self.away_positions

    def mirrored(self):
        return replace(
            self,
            home_positions=mirror_positions(self.away_positions),
            away_positions=mirror_positions(self.home_positions),
            ball_position=(-self.ball_position[0], -self.ball_position[1]),
        )


@dataclass
class PlayerState:
    x: float
    y: float
    vx: float = 0.0
    vy: float = 0.0
    tiredness: float = 0.0
    sprinting: bool = False
    dribbling: bool = False
    sliding_cooldown: int = 0

    @property
    def position(self):
        return (self.x, self.y)

    @property
    def velocity(self):
        return (self.vx, self.vy)

    def copy(self):
        return replace(self)

    def mirrored(self):
        return replace(self, x=-self.x, y=-self.y, vx=-self.vx, vy=-self.vy)


@dataclass
class BallState:
    x: float = 0.0
    y: float = 0.0
    vx: float = 0.0
    vy: float = 0.0
    aerial_steps: int = 0
    controller: Optional[tuple] = None  # (team, index)
    pass_from: Optional[tuple] = None  # passer of a pass in transit
    offside_receivers: tuple = ()

    @property
    def aerial(self):
        return self.aerial_steps > 0

    @property
    def position(self):
        return (self.x, self.y)

    def copy(self):
        return replace(self)


def _swap_owner(owner):
    if owner is None:
        return None
    team, index = owner
    return (Team(team).other, index)


@dataclass
class MatchState:
    scenario: ScenarioConfig
    home: list
    away: list
    ball: BallState
    score: tuple = (0, 0)
    step: int = 0
    last_touch: Optional[tuple] = None
    rng_state: dict = field(default_factory=dict)
    terminated: bool = False

    def team(self, team):
        return self.home if Team(team) == Team.HOME else self.away

    def player(self, owner):
        team, index = owner
        return self.team(team)[index]

    def copy(self):
        rng_state = dict(self.rng_state)
        if isinstance(rng_state.get('state'), dict):
            rng_state['state'] = dict(rng_state['state'])
        return MatchState(
            scenario=self.scenario,
            home=[p.copy() for p in self.home],
            away=[p.copy() for p in self.away],
            ball=self.ball.copy(),
            score=self.score,
            step=self.step,
            last_touch=self.last_touch,
            rng_state=rng_state,
            terminated=self.terminated,
        )

    # Serialization (worker states are carried across rollouts and checkpoints)

    def to_dict(self):
        return {
            'scenario': scenario_to_dict(self.scenario),
            'home': [vars(p).copy() for p in self.home],
            'away': [vars(p).copy() for p in self.away],
            'ball': {
                **{k: v for k, v in vars(self.ball).items() if k not in ('controller', 'pass_from', 'offside_receivers')},
                'controller': _owner_to_list(self.ball.controller),
                'pass_from': _owner_to_list(self.ball.pass_from),
                'offside_receivers': list(self.ball.offside_receivers),
            },
            'score': list(self.score),
            'step': self.step,
            'last_touch': _owner_to_list(self.last_touch),
            'rng_state': self.rng_state,
            'terminated': self.terminated,
        }

    @classmethod
    def from_dict(cls, data):
        ball = dict(data['ball'])
        ball['controller'] = _owner_from_list(ball['controller'])
        ball['pass_from'] = _owner_from_list(ball['pass_from'])
        ball['offside_receivers'] = tuple(ball['offside_receivers'])
        return cls(
            scenario=scenario_from_dict(data['scenario']),
            home=[PlayerState(**p) for p in data['home']],
            away=[PlayerState(**p) for p in data['away']],
            ball=BallState(**ball),
            score=tuple(data['score']),
            step=data['step'],
            last_touch=_owner_from_list(data['last_touch']),
            rng_state=data['rng_state'],
            terminated=data['terminated'],
        )


def _owner_to_list(owner):
    return None if owner is None else [str(Team(owner[0]).value), int(owner[1])]


def _owner_from_list(value):
    return None if value is None else (Team(value[0]), int(value[1]))


def scenario_to_dict(scenario):
    return {
        'name': scenario.name,
        'players_per_team': scenario.players_per_team,
        'episode_step_limit': scenario.episode_step_limit,
        'terminate_on_score_or_fault': scenario.terminate_on_score_or_fault,
        'offside_enabled': scenario.offside_enabled,
        'opponent_strength': scenario.opponent_strength,
        'home_positions': [list(p) for p in scenario.home_positions],
        'away_positions': [list(p) for p in scenario.away_positions],
        'seed': scenario.seed,
        'ball_position': list(scenario.ball_position),
        'kickoff_holder': scenario.kickoff_holder,
        'pitch': {
            'length': scenario.pitch.length,
            'width': scenario.pitch.width,
            'goal_half_width': scenario.pitch.goal_half_width,
        },
    }


def scenario_from_dict(data):
    data = dict(data)
    pitch = FieldConfig(**data.pop('pitch', {}))
    return ScenarioConfig(pitch=pitch, **data)


def mirror_state(state):
    """
    Point-reflect the state through the field centre and swap the teams.
    Mirroring twice gives back the original state.
    """
    ball = state.ball
    return MatchState(
        scenario=state.scenario.mirrored(),
        home=[p.mirrored() for p in state.away],
        away=[p.mirrored() for p in state.home],
        ball=BallState(
            x=-ball.x,
            y=-ball.y,
            vx=-ball.vx,
            vy=-ball.vy,
            aerial_steps=ball.aerial_steps,
            controller=_swap_owner(ball.controller),
            pass_from=_swap_owner(ball.pass_from),
            offside_receivers=ball.offside_receivers,
        ),
        score=(state.score[1], state.score[0]),
        step=state.step,
        last_touch=_swap_owner(state.last_touch),
        rng_state=dict(state.rng_state),
        terminated=state.terminated,
    )


def state_digest(state):
    """Short content hash of the kinematic state, used in replay logs"""
    values = []
    for p in state.home + state.away:
        values.extend((p.x, p.y, p.vx, p.vy, p.tiredness))
    values.extend((state.ball.x, state.ball.y, state.ball.vx, state.ball.vy, float(state.ball.aerial_steps)))
    values.extend((float(state.score[0]), float(state.score[1]), float(state.step)))
    return hashlib.sha1(np.asarray(values, dtype=np.float64).tobytes()).hexdigest()[:16]
