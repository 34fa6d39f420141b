"""
Kinematic point-mass football simulator.

Players and ball are points on a normalized pitch. Passes travel as ground
or aerial balls and are resolved when someone picks them up; shots are
resolved on the spot with Gaussian aiming noise that shrinks with distance
to goal.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .models import Action, EventKind, PASS_ACTIONS, Team, TerminationCause
from .state import BallState, MatchState, PlayerState

logger = logging.getLogger(__name__)

# Kinematics (normalized units per step)
MAX_SPEED = 0.012
SPRINT_MULTIPLIER = 1.5
PASS_SPEED = 0.03
SHOT_SPEED = 0.05
CONTROL_RADIUS = 0.02
BALL_FRICTION = 0.98
BALL_STOP_SPEED = 1e-3
PLAYER_MARGIN = 0.05

# Player condition
TIREDNESS_GAIN = 0.001
TIREDNESS_RECOVERY = 0.0005
TIREDNESS_SLOWDOWN = 0.3

# Duels
SLIDE_COOLDOWN = 10
SLIDE_REACH = 2 * CONTROL_RADIUS
STEAL_RADIUS = CONTROL_RADIUS / 2

# Shooting: aiming noise in radians per unit of distance to goal
SHOT_NOISE = 0.25
LONG_PASS_MIN_DISTANCE = 0.2

_DIAG = 1.0 / math.sqrt(2.0)

DIRECTIONS = {
    Action.LEFT: (-1.0, 0.0),
    Action.TOP_LEFT: (-_DIAG, -_DIAG),
    Action.TOP: (0.0, -1.0),
    Action.TOP_RIGHT: (_DIAG, -_DIAG),
    Action.RIGHT: (1.0, 0.0),
    Action.BOTTOM_RIGHT: (_DIAG, _DIAG),
    Action.BOTTOM: (0.0, 1.0),
    Action.BOTTOM_LEFT: (-_DIAG, _DIAG),
}

_MIRRORED_ACTIONS = {
    Action.LEFT: Action.RIGHT,
    Action.RIGHT: Action.LEFT,
    Action.TOP: Action.BOTTOM,
    Action.BOTTOM: Action.TOP,
    Action.TOP_LEFT: Action.BOTTOM_RIGHT,
    Action.BOTTOM_RIGHT: Action.TOP_LEFT,
    Action.TOP_RIGHT: Action.BOTTOM_LEFT,
    Action.BOTTOM_LEFT: Action.TOP_RIGHT,
}


class MatchStateError(RuntimeError):
    """Raised when stepping a match that has already terminated"""


@dataclass(frozen=True)
class Event:
    kind: EventKind
    team: Team
    good: Optional[bool] = None

    def to_dict(self):
        data = {'kind': str(self.kind.value), 'team': str(self.team.value)}
        if self.good is not None:
            data['good'] = self.good
        return data


@dataclass
class StepResult:
    next_state: MatchState
    events: list
    scoring_reward_home: int
    terminated: bool
    termination_cause: Optional[TerminationCause] = None


@dataclass
class _StepContext:
    """Per-step bookkeeping of what happened and which restart is due"""
    events: list = field(default_factory=list)
    goal: Optional[Team] = None
    foul: Optional[tuple] = None  # (fouling team, fouled player owner)
    out: Optional[Team] = None  # team that put the ball out
    out_point: tuple = (0.0, 0.0)
    dead_ball: bool = False

    def emit(self, kind, team, good=None):
        event = Event(EventKind(kind), Team(team), good)
        # One event per cause per step
        if not any(e.kind == event.kind and e.team == event.team for e in self.events):
            self.events.append(event)


def mirror_action(action):
    """Map an action to its counterpart under point reflection of the pitch"""
    action = Action(action)
    return _MIRRORED_ACTIONS.get(action, action)


def _generator(rng_state):
    rng = np.random.Generator(np.random.PCG64(0))
    rng.bit_generator.state = rng_state
    return rng


def reset(scenario, seed):
    """
    Build the kickoff state of a scenario. Deterministic given the seed.
    """
    scenario.validate()
    home = [PlayerState(x=x, y=y) for x, y in scenario.home_positions]
    away = [PlayerState(x=x, y=y) for x, y in scenario.away_positions]
    bx, by = scenario.ball_position
    ball = BallState(x=bx, y=by)
    last_touch = None
    if scenario.kickoff_holder is not None:
        holder = home[scenario.kickoff_holder]
        ball = BallState(x=holder.x, y=holder.y, controller=(Team.HOME, scenario.kickoff_holder))
        last_touch = (Team.HOME, scenario.kickoff_holder)
    rng = np.random.Generator(np.random.PCG64(seed))
    return MatchState(
        scenario=scenario,
        home=home,
        away=away,
        ball=ball,
        last_touch=last_touch,
        rng_state=rng.bit_generator.state,
    )


def step(state, home_actions, away_actions):
    """
    Advance the match by one step. The input state is left untouched.
    """
    n = state.scenario.players_per_team
    if len(home_actions) != n or len(away_actions) != n:
        raise ValueError(f'Expected {n} actions per team, got {len(home_actions)} and {len(away_actions)}')
    if state.terminated:
        raise MatchStateError('Cannot step a terminated match; reset it first')

    nxt = state.copy()
    rng = _generator(nxt.rng_state)
    ctx = _StepContext()
    actions = {
        Team.HOME: [Action(int(a)) for a in home_actions],
        Team.AWAY: [Action(int(a)) for a in away_actions],
    }

    # Movement intents
    for team in (Team.HOME, Team.AWAY):
        for player, action in zip(nxt.team(team), actions[team]):
            _apply_intent(player, action)

    # Ball actions of the carrier
    if nxt.ball.controller is not None:
        team, index = nxt.ball.controller
        team = Team(team)
        action = actions[team][index]
        if action == Action.SHOT:
            _shoot(nxt, team, index, rng, ctx)
        elif action in PASS_ACTIONS:
            _kick_pass(nxt, team, index, action)

    # Slide tackles
    if not ctx.dead_ball:
        _resolve_slides(nxt, actions, ctx)

    for team in (Team.HOME, Team.AWAY):
        for player in nxt.team(team):
            _integrate(player, nxt.scenario.pitch)

    if not ctx.dead_ball:
        _advance_ball(nxt, ctx)
        _contest(nxt)

    for team in (Team.HOME, Team.AWAY):
        for index, player in enumerate(nxt.team(team)):
            if nxt.ball.controller != (team, index):
                player.dribbling = False

    nxt.step += 1
    nxt.rng_state = rng.bit_generator.state

    cause = None
    if ctx.goal is not None:
        cause = TerminationCause.GOAL
    elif ctx.foul is not None:
        cause = TerminationCause.FOUL
    elif ctx.out is not None:
        cause = TerminationCause.OUT_OF_BOUNDS

    terminated = False
    if cause is not None and nxt.scenario.terminate_on_score_or_fault:
        terminated = True
    else:
        if cause is not None:
            _restart(nxt, ctx)
        cause = None
        if nxt.step >= nxt.scenario.episode_step_limit:
            terminated = True
            cause = TerminationCause.STEP_LIMIT
    nxt.terminated = terminated

    reward = 0
    if ctx.goal == Team.HOME:
        reward = 1
    elif ctx.goal == Team.AWAY:
        reward = -1

    return StepResult(
        next_state=nxt,
        events=ctx.events,
        scoring_reward_home=reward,
        terminated=terminated,
        termination_cause=cause,
    )


# Players

def max_speed(player):
    speed = MAX_SPEED * (1.0 - TIREDNESS_SLOWDOWN * player.tiredness)
    if player.sprinting:
        speed *= SPRINT_MULTIPLIER
    return speed


def _apply_intent(player, action):
    direction = DIRECTIONS.get(action)
    if direction is not None:
        speed = max_speed(player)
        player.vx = direction[0] * speed
        player.vy = direction[1] * speed
    elif action in (Action.IDLE, Action.RELEASE_DIRECTION):
        player.vx = 0.0
        player.vy = 0.0
    elif action == Action.SPRINT:
        player.sprinting = True
    elif action == Action.RELEASE_SPRINT:
        player.sprinting = False
    elif action == Action.DRIBBLE:
        player.dribbling = True


def _integrate(player, pitch):
    moving = player.vx != 0.0 or player.vy != 0.0
    if moving:
        norm = math.hypot(player.vx, player.vy)
        speed = max_speed(player)
        player.vx = player.vx / norm * speed
        player.vy = player.vy / norm * speed
        player.x = _clamp(player.x + player.vx, pitch.half_length + PLAYER_MARGIN)
        player.y = _clamp(player.y + player.vy, pitch.half_width + PLAYER_MARGIN)
    if moving and player.sprinting:
        player.tiredness = min(1.0, player.tiredness + TIREDNESS_GAIN)
    else:
        player.tiredness = max(0.0, player.tiredness - TIREDNESS_RECOVERY)
    if player.sliding_cooldown > 0:
        player.sliding_cooldown -= 1


def _clamp(value, bound):
    return max(-bound, min(bound, value))


def _distance(a, b):
    return math.hypot(a[0] - b[0], a[1] - b[1])


def _segment_distance(point, start, end):
    sx, sy = end[0] - start[0], end[1] - start[1]
    length_sq = sx * sx + sy * sy
    if length_sq == 0.0:
        return _distance(point, start)
    t = ((point[0] - start[0]) * sx + (point[1] - start[1]) * sy) / length_sq
    t = max(0.0, min(1.0, t))
    return math.hypot(point[0] - (start[0] + t * sx), point[1] - (start[1] + t * sy))


# Ball possession

def _gain_control(state, team, index, ctx):
    ball = state.ball
    if ball.pass_from is not None:
        passer_team = Team(ball.pass_from[0])
        if passer_team == team:
            if index in ball.offside_receivers:
                ctx.emit(EventKind.PASS_ATTEMPT, passer_team, False)
                ctx.emit(EventKind.FOUL, passer_team)
                receiver = state.team(team)[index]
                victim = _nearest(state.team(team.other), receiver.position)
                ctx.foul = (passer_team, (team.other, victim))
            else:
                ctx.emit(EventKind.PASS_ATTEMPT, passer_team, True)
        else:
            ctx.emit(EventKind.PASS_ATTEMPT, passer_team, False)
            ctx.emit(EventKind.INTERCEPTION, team)
    player = state.team(team)[index]
    ball.pass_from = None
    ball.offside_receivers = ()
    ball.aerial_steps = 0
    ball.controller = (team, index)
    ball.x, ball.y = player.x, player.y
    ball.vx, ball.vy = player.vx, player.vy
    state.last_touch = (team, index)


def _nearest(players, point, exclude=None):
    best, best_distance = None, math.inf
    for index, player in enumerate(players):
        if index == exclude:
            continue
        d = _distance(player.position, point)
        if d < best_distance:
            best, best_distance = index, d
    return best


def _pass_target(state, team, index, action):
    passer = state.team(team)[index]
    mates = [(i, p) for i, p in enumerate(state.team(team)) if i != index]
    if not mates:
        return None
    nearest = min(mates, key=lambda item: (_distance(item[1].position, passer.position), item[0]))
    if action == Action.SHORT_PASS:
        return nearest[0]
    # Long and high passes look for the most advanced teammate at distance
    far = [(i, p) for i, p in mates if _distance(p.position, passer.position) >= LONG_PASS_MIN_DISTANCE]
    if not far:
        return nearest[0]
    return max(far, key=lambda item: (team.sign * item[1].x, -item[0]))[0]


def _kick_pass(state, team, index, action):
    target = _pass_target(state, team, index, action)
    if target is None:
        return
    passer = state.team(team)[index]
    receiver = state.team(team)[target]
    dx, dy = receiver.x - passer.x, receiver.y - passer.y
    distance = math.hypot(dx, dy)
    if distance == 0.0:
        return
    ball = state.ball
    ball.x, ball.y = passer.x, passer.y
    ball.vx = PASS_SPEED * dx / distance
    ball.vy = PASS_SPEED * dy / distance
    ball.controller = None
    ball.pass_from = (team, index)
    ball.aerial_steps = max(0, int(distance / PASS_SPEED) - 2) if action == Action.HIGH_PASS else 0
    ball.offside_receivers = _offside_receivers(state, team, index) if state.scenario.offside_enabled else ()
    passer.dribbling = False
    state.last_touch = (team, index)


def _offside_receivers(state, team, passer_index):
    sign = team.sign
    defenders = state.team(team.other)
    last_line = max(sign * p.x for p in defenders)
    ball_line = sign * state.ball.x
    return tuple(
        i for i, p in enumerate(state.team(team))
        if i != passer_index and sign * p.x > 0.0 and sign * p.x > last_line and sign * p.x > ball_line
    )


def offside_position(state, team, index):
    """Whether a player currently stands in an offside position"""
    team = Team(team)
    if not state.scenario.offside_enabled:
        return False
    player = state.team(team)[index]
    sign = team.sign
    last_line = max(sign * p.x for p in state.team(team.other))
    return sign * player.x > 0.0 and sign * player.x > last_line and sign * player.x > sign * state.ball.x


def _shoot(state, team, index, rng, ctx):
    shooter = state.team(team)[index]
    pitch = state.scenario.pitch
    goal_x = team.sign * pitch.half_length
    dx, dy = goal_x - shooter.x, -shooter.y
    distance = math.hypot(dx, dy)
    angle = math.atan2(dy, dx) + SHOT_NOISE * distance * float(rng.standard_normal())
    cos_a, sin_a = math.cos(angle), math.sin(angle)

    ball = state.ball
    ball.controller = None
    ball.pass_from = None
    shooter.dribbling = False
    state.last_touch = (team, index)

    if team.sign * cos_a > 1e-9:
        travel = (goal_x - shooter.x) / cos_a
        y_hit = shooter.y + travel * sin_a
        on_target = abs(y_hit) < pitch.goal_half_width
    else:
        travel = 2.0 * pitch.length
        y_hit = shooter.y
        on_target = False

    # Defenders close to the ball's path, allowing for their movement during flight
    blocker, blocker_along = None, math.inf
    for j, defender in enumerate(state.team(team.other)):
        rx, ry = defender.x - shooter.x, defender.y - shooter.y
        along = rx * cos_a + ry * sin_a
        if along <= 0.0 or along > travel:
            continue
        lateral = abs(-rx * sin_a + ry * cos_a)
        if lateral < CONTROL_RADIUS + MAX_SPEED * along / SHOT_SPEED and along < blocker_along:
            blocker, blocker_along = j, along

    if blocker is not None:
        ctx.emit(EventKind.SHOT_ATTEMPT, team, False)
        _gain_control(state, team.other, blocker, ctx)
    elif on_target:
        ctx.emit(EventKind.SHOT_ATTEMPT, team, True)
        ctx.emit(EventKind.GOAL, team)
        home, away = state.score
        state.score = (home + 1, away) if team == Team.HOME else (home, away + 1)
        ball.x, ball.y = goal_x, y_hit
        ball.vx = ball.vy = 0.0
        ctx.goal = team
        ctx.dead_ball = True
    else:
        ctx.emit(EventKind.SHOT_ATTEMPT, team, False)
        ctx.emit(EventKind.OUT_OF_BOUNDS, team)
        ball.x = goal_x
        ball.y = _clamp(y_hit, pitch.half_width)
        ball.vx = ball.vy = 0.0
        ctx.out = team
        ctx.out_point = (ball.x, ball.y)
        ctx.dead_ball = True


def _unique_closest(candidates):
    """
    Pick the closest of (distance, team, index) candidates.
    Teammates tied on distance go to the lowest index; a tie across teams
    has no winner.
    """
    if not candidates:
        return None
    nearest = min(d for d, _, _ in candidates)
    tied = [(team, index) for d, team, index in candidates if d == nearest]
    if len({team for team, _ in tied}) > 1:
        return None
    team, index = min(tied, key=lambda c: c[1])
    return nearest, team, index


def _resolve_slides(state, actions, ctx):
    """
    Slides of both teams happen at once. The slider closest to a grounded
    ball within reach wins it; sliders that miss the ball and hit an
    opponent commit a foul.
    """
    ball = state.ball
    holder_team = None if ball.controller is None else Team(ball.controller[0])
    sliders = []
    for team in (Team.HOME, Team.AWAY):
        for index, action in enumerate(actions[team]):
            player = state.team(team)[index]
            if action != Action.SLIDE or player.sliding_cooldown > 0:
                continue
            player.sliding_cooldown = SLIDE_COOLDOWN
            if holder_team != team:
                sliders.append((_distance(player.position, ball.position), team, index))
    if not sliders:
        return

    in_reach = [] if ball.aerial else [s for s in sliders if s[0] <= SLIDE_REACH]
    winner = _unique_closest(in_reach)
    if winner is not None:
        _gain_control(state, winner[1], winner[2], ctx)

    fouls = []
    for d, team, index in sliders:
        if (d, team, index) in in_reach:
            continue
        player = state.team(team)[index]
        for j, opponent in enumerate(state.team(team.other)):
            if _distance(player.position, opponent.position) <= CONTROL_RADIUS:
                ctx.emit(EventKind.FOUL, team)
                fouls.append((d, team, index, j))
                break
    fouler = _unique_closest([(d, team, index) for d, team, index, _ in fouls])
    if fouler is not None and ctx.foul is None:
        _, team, index = fouler
        victim = next(j for _, t, i, j in fouls if (t, i) == (team, index))
        ctx.foul = (team, (team.other, victim))


def _advance_ball(state, ctx):
    ball = state.ball
    pitch = state.scenario.pitch
    if ball.controller is not None:
        carrier = state.player(ball.controller)
        ball.x, ball.y, ball.vx, ball.vy = carrier.x, carrier.y, carrier.vx, carrier.vy
        if not pitch.contains(ball.x, ball.y):
            team = Team(ball.controller[0])
            ctx.emit(EventKind.OUT_OF_BOUNDS, team)
            ball.controller = None
            ball.vx = ball.vy = 0.0
            ctx.out = team
            ctx.out_point = (ball.x, ball.y)
        return

    start = ball.position
    was_aerial = ball.aerial
    ball.x += ball.vx
    ball.y += ball.vy
    if ball.aerial_steps > 0:
        ball.aerial_steps -= 1
    else:
        ball.vx *= BALL_FRICTION
        ball.vy *= BALL_FRICTION
        if math.hypot(ball.vx, ball.vy) < BALL_STOP_SPEED:
            ball.vx = ball.vy = 0.0

    if not was_aerial:
        candidates = []
        for team in (Team.HOME, Team.AWAY):
            for index, player in enumerate(state.team(team)):
                if ball.pass_from is not None and ball.pass_from == (team, index):
                    continue
                d = _segment_distance(player.position, start, ball.position)
                if d <= CONTROL_RADIUS:
                    candidates.append((d, team, index))
        best = _unique_closest(candidates)
        if best is not None:
            _gain_control(state, best[1], best[2], ctx)
            return

    if not pitch.contains(ball.x, ball.y):
        if ball.pass_from is not None:
            ctx.emit(EventKind.PASS_ATTEMPT, Team(ball.pass_from[0]), False)
        if state.last_touch is not None:
            team = Team(state.last_touch[0])
        else:
            # Untouched since kickoff: charged to the side the ball left from
            team = Team.HOME if (ball.x, ball.y) < (0.0, 0.0) else Team.AWAY
        ctx.emit(EventKind.OUT_OF_BOUNDS, team)
        ball.pass_from = None
        ball.offside_receivers = ()
        ball.aerial_steps = 0
        ball.vx = ball.vy = 0.0
        ctx.out = team
        ctx.out_point = (ball.x, ball.y)
        return

    if ball.pass_from is not None and ball.vx == 0.0 and ball.vy == 0.0 and not ball.aerial:
        # The pass died out without reaching anybody
        ctx.emit(EventKind.PASS_ATTEMPT, Team(ball.pass_from[0]), False)
        ball.pass_from = None
        ball.offside_receivers = ()


def _contest(state):
    """Non-dribbling carriers lose the ball to an opponent who gets close enough"""
    ball = state.ball
    if ball.controller is None:
        return
    team, index = ball.controller
    team = Team(team)
    if state.team(team)[index].dribbling:
        return
    taker = _nearest(state.team(team.other), ball.position)
    if taker is None:
        return
    opponent = state.team(team.other)[taker]
    if _distance(opponent.position, ball.position) <= STEAL_RADIUS:
        ball.controller = (team.other, taker)
        ball.x, ball.y, ball.vx, ball.vy = opponent.x, opponent.y, opponent.vx, opponent.vy
        state.last_touch = (team.other, taker)


# Restarts in matches that keep running after goals and faults

def _restart(state, ctx):
    ball = state.ball
    ball.pass_from = None
    ball.offside_receivers = ()
    ball.aerial_steps = 0
    ball.vx = ball.vy = 0.0
    if ctx.goal is not None:
        scenario = state.scenario
        for team in (Team.HOME, Team.AWAY):
            for player, (x, y) in zip(state.team(team), scenario.positions(team)):
                player.x, player.y = x, y
                player.vx = player.vy = 0.0
        ball.x, ball.y = 0.0, 0.0
        ball.controller = None
        state.last_touch = None
    elif ctx.foul is not None:
        victim_team, victim = ctx.foul[1]
        _give_ball(state, Team(victim_team), victim)
    elif ctx.out is not None:
        team = ctx.out.other
        _give_ball(state, team, _nearest(state.team(team), ctx.out_point))


def _give_ball(state, team, index):
    player = state.team(team)[index]
    pitch = state.scenario.pitch
    # The restart is taken from inside the lines
    player.x = _clamp(player.x, pitch.half_length)
    player.y = _clamp(player.y, pitch.half_width)
    ball = state.ball
    ball.controller = (team, index)
    ball.x, ball.y = player.x, player.y
    ball.vx, ball.vy = player.vx, player.vy
    state.last_touch = (team, index)
