"""
Feature layout tables: (name, offset, width) for every block of the actor
observation and of the critic state.
"""
import json
from pathlib import Path

OWN_FIELDS = ('x', 'y', 'vx', 'vy', 'tiredness', 'sprinting', 'dribbling')
BALL_FIELDS = ('rel_x', 'rel_y', 'vx', 'vy', 'aerial')
BALL_CONTROL = ('mine', 'teammate', 'opponent', 'none')
OTHER_FIELDS = ('rel_x', 'rel_y', 'vx', 'vy')
CONTEXT_FIELDS = ('score_diff', 'steps_remaining', 'offside')

PLAYER_STATE_FIELDS = ('x', 'y', 'vx', 'vy', 'tiredness')
CRITIC_BALL_FIELDS = ('x', 'y', 'vx', 'vy', 'aerial')

DEFAULT_PE_DIM = 16


def _with_offsets(blocks):
    table, offset = [], 0
    for name, width in blocks:
        table.append({'name': name, 'offset': offset, 'width': width})
        offset += width
    return table


def feature_layout(players_per_team, d_pe=DEFAULT_PE_DIM):
    blocks = [(f'own.{f}', 1) for f in OWN_FIELDS]
    blocks += [(f'ball.{f}', 1) for f in BALL_FIELDS]
    blocks.append(('ball.controlled_by', len(BALL_CONTROL)))
    for k in range(players_per_team - 1):
        blocks.append((f'teammate{k}', len(OTHER_FIELDS)))
    for k in range(players_per_team):
        blocks.append((f'opponent{k}', len(OTHER_FIELDS)))
    blocks += [(f'context.{f}', 1) for f in CONTEXT_FIELDS]
    blocks.append(('player_id', d_pe))
    return _with_offsets(blocks)


def critic_layout(players_per_team):
    blocks = []
    for team in ('home', 'away'):
        for k in range(players_per_team):
            blocks.append((f'{team}{k}', len(PLAYER_STATE_FIELDS)))
    blocks.append(('ball', len(CRITIC_BALL_FIELDS)))
    blocks.append(('possession', 2))
    blocks.append(('score', 2))
    blocks.append(('time', 1))
    return _with_offsets(blocks)


def layout_dim(table):
    last = table[-1]
    return last['offset'] + last['width']


def actor_dim(players_per_team, d_pe=DEFAULT_PE_DIM):
    """8N + 15 + d_pe"""
    return layout_dim(feature_layout(players_per_team, d_pe))


def critic_dim(players_per_team):
    """10N + 10"""
    return layout_dim(critic_layout(players_per_team))


def block(table, name):
    for entry in table:
        if entry['name'] == name:
            return slice(entry['offset'], entry['offset'] + entry['width'])
    raise KeyError(name)


def write_layout(run_dir, players_per_team, d_pe=DEFAULT_PE_DIM):
    path = Path(run_dir) / 'feature_layout.json'
    data = {
        'players_per_team': players_per_team,
        'd_pe': d_pe,
        'actor': feature_layout(players_per_team, d_pe),
        'critic': critic_layout(players_per_team),
    }
    path.write_text(json.dumps(data, indent=2, sort_keys=True), encoding='utf-8')
    return path
