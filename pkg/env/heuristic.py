"""
Scripted opponent. The strength factor is the probability of taking a
fresh decision on a step; otherwise the player keeps its previous
movement (or idles if it was standing).
"""
import math

from .models import Action, Team

SHOOTING_RANGE = 0.35
PRESSURE_RADIUS = 0.08
SUPPORT_ADVANCE = 0.3
MARK_OFFSET = 0.05
ARRIVAL_TOLERANCE = 0.01

# Octants counted counter-clockwise from +x with +y pointing down the pitch
_OCTANTS = (
    Action.RIGHT,
    Action.BOTTOM_RIGHT,
    Action.BOTTOM,
    Action.BOTTOM_LEFT,
    Action.LEFT,
    Action.TOP_LEFT,
    Action.TOP,
    Action.TOP_RIGHT,
)


def direction_action(dx, dy):
    """Closest of the eight movement actions to the vector (dx, dy)"""
    if dx == 0.0 and dy == 0.0:
        return Action.IDLE
    octant = int(round(math.atan2(dy, dx) / (math.pi / 4.0))) % 8
    return _OCTANTS[octant]


def move_towards(player, target):
    dx, dy = target[0] - player.x, target[1] - player.y
    if math.hypot(dx, dy) < ARRIVAL_TOLERANCE:
        return Action.IDLE
    return direction_action(dx, dy)


def previous_movement(player):
    if player.vx == 0.0 and player.vy == 0.0:
        return Action.IDLE
    return direction_action(player.vx, player.vy)


def heuristic_action(state, team, player_index, strength, rng):
    """
    Decide one player's action. Always draws exactly one number from rng.
    """
    team = Team(team)
    player = state.team(team)[player_index]
    if rng.random() >= strength:
        return previous_movement(player)
    return _decide(state, team, player_index)


def _decide(state, team, index):
    player = state.team(team)[index]
    pitch = state.scenario.pitch
    ball = state.ball
    goal = (team.sign * pitch.half_length, 0.0)
    owner_team = None if ball.controller is None else Team(ball.controller[0])

    if ball.controller is not None and owner_team == team and ball.controller[1] == index:
        if math.hypot(goal[0] - player.x, goal[1] - player.y) < SHOOTING_RANGE:
            return Action.SHOT
        pressure = min(math.hypot(o.x - player.x, o.y - player.y) for o in state.team(team.other))
        if pressure < PRESSURE_RADIUS and len(state.team(team)) > 1:
            return Action.SHORT_PASS
        return move_towards(player, goal)

    home_x, home_y = state.scenario.positions(team)[index]

    if owner_team == team:
        support_x = max(-pitch.half_length, min(pitch.half_length, home_x + team.sign * SUPPORT_ADVANCE))
        return move_towards(player, (support_x, home_y))

    # Ball is loose or with the opponent: the closest player chases it
    distances = [math.hypot(p.x - ball.x, p.y - ball.y) for p in state.team(team)]
    chaser = min(range(len(distances)), key=lambda i: (distances[i], i))
    if chaser == index and not ball.aerial:
        return move_towards(player, ball.position)
    if chaser == index:
        return move_towards(player, _landing_point(ball))

    if owner_team == team.other:
        # Mark the opponent closest to our formation spot, goal side
        opponents = state.team(team.other)
        marked = min(opponents, key=lambda o: math.hypot(o.x - home_x, o.y - home_y))
        return move_towards(player, (marked.x - team.sign * MARK_OFFSET, marked.y))

    return move_towards(player, (home_x, home_y))


def _landing_point(ball):
    steps = ball.aerial_steps
    return (ball.x + ball.vx * steps, ball.y + ball.vy * steps)


def scripted_team_actions(state, team, strength, rng):
    """Actions for every player of a team, in player order"""
    return [heuristic_action(state, team, i, strength, rng) for i in range(len(state.team(team)))]
