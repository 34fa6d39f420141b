"""
Observation encoders. Everything here is a pure function of the match
state; the away team is encoded on the mirrored state so that both teams
see themselves attacking towards +x.
"""
from functools import lru_cache

import numpy as np
from django.core.exceptions import ImproperlyConfigured

from env.models import Team
from env.simulator import offside_position
from env.state import mirror_state

from .layout import DEFAULT_PE_DIM, actor_dim, critic_dim

VELOCITY_SCALE = 1.0 / 0.05
SCORE_SCALE = 0.1
MAX_SCORE_DIFF = 5


@lru_cache(maxsize=None)
def _encoding(player_id, d_pe):
    i = np.arange(d_pe // 2, dtype=np.float64)
    angles = player_id / np.power(10000.0, 2.0 * i / d_pe)
    out = np.empty(d_pe, dtype=np.float64)
    out[0::2] = np.sin(angles)
    out[1::2] = np.cos(angles)
    out.setflags(write=False)
    return out


def positional_encoding(player_id, d_pe=DEFAULT_PE_DIM):
    """
    Sinusoidal player-id encoding: sin on even entries, cos on odd ones,
    frequency 1/10000^(2i/d_pe).
    """
    if d_pe < 2 or d_pe % 2:
        raise ImproperlyConfigured(f'Positional encoding width must be even and >= 2, got {d_pe}')
    if player_id < 0:
        raise ValueError(f'Player id must be non-negative, got {player_id}')
    return _encoding(int(player_id), int(d_pe)).copy()


def _perspective(state, team):
    return state if Team(team) == Team.HOME else mirror_state(state)


def actor_observation(state, team, agent_index, d_pe=DEFAULT_PE_DIM):
    n = state.scenario.players_per_team
    if not 0 <= agent_index < n:
        raise ValueError(f'Agent index {agent_index} out of range for {n} players')
    view = _perspective(state, team)
    return _encode_home_agent(view, agent_index, d_pe)


def team_observations(state, team, d_pe=DEFAULT_PE_DIM):
    """(N, dim) matrix of every agent's observation for one team"""
    view = _perspective(state, team)
    n = state.scenario.players_per_team
    return np.stack([_encode_home_agent(view, i, d_pe) for i in range(n)])


def _encode_home_agent(view, index, d_pe):
    pitch = view.scenario.pitch
    sx, sy = 1.0 / pitch.half_length, 1.0 / pitch.half_width
    me = view.home[index]
    ball = view.ball
    n = len(view.home)

    out = np.empty(actor_dim(n, d_pe), dtype=np.float64)
    out[0:7] = (
        me.x * sx, me.y * sy,
        me.vx * VELOCITY_SCALE, me.vy * VELOCITY_SCALE,
        me.tiredness, float(me.sprinting), float(me.dribbling),
    )
    out[7:12] = (
        (ball.x - me.x) * sx, (ball.y - me.y) * sy,
        ball.vx * VELOCITY_SCALE, ball.vy * VELOCITY_SCALE,
        float(ball.aerial),
    )
    control = np.zeros(4)
    if ball.controller is None:
        control[3] = 1.0
    elif Team(ball.controller[0]) == Team.HOME:
        control[0 if ball.controller[1] == index else 1] = 1.0
    else:
        control[2] = 1.0
    out[12:16] = control

    offset = 16
    others = [p for k, p in enumerate(view.home) if k != index] + list(view.away)
    for p in others:
        out[offset:offset + 4] = (
            (p.x - me.x) * sx, (p.y - me.y) * sy,
            p.vx * VELOCITY_SCALE, p.vy * VELOCITY_SCALE,
        )
        offset += 4

    diff = max(-MAX_SCORE_DIFF, min(MAX_SCORE_DIFF, view.score[0] - view.score[1]))
    limit = view.scenario.episode_step_limit
    out[offset:offset + 3] = (
        diff / MAX_SCORE_DIFF,
        max(0, limit - view.step) / limit,
        float(offside_position(view, Team.HOME, index)),
    )
    offset += 3
    out[offset:] = _encoding(index, d_pe)
    return out


def critic_observation(state):
    """Global state from the home perspective"""
    pitch = state.scenario.pitch
    sx, sy = 1.0 / pitch.half_length, 1.0 / pitch.half_width
    n = state.scenario.players_per_team
    out = np.empty(critic_dim(n), dtype=np.float64)
    offset = 0
    for p in state.home + state.away:
        out[offset:offset + 5] = (p.x * sx, p.y * sy, p.vx * VELOCITY_SCALE, p.vy * VELOCITY_SCALE, p.tiredness)
        offset += 5
    ball = state.ball
    out[offset:offset + 5] = (
        ball.x * sx, ball.y * sy, ball.vx * VELOCITY_SCALE, ball.vy * VELOCITY_SCALE, float(ball.aerial),
    )
    offset += 5
    owner = None if ball.controller is None else Team(ball.controller[0])
    out[offset:offset + 2] = (float(owner == Team.HOME), float(owner == Team.AWAY))
    offset += 2
    out[offset:offset + 2] = (state.score[0] * SCORE_SCALE, state.score[1] * SCORE_SCALE)
    offset += 2
    out[offset] = state.step / state.scenario.episode_step_limit
    return out
