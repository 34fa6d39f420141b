"""
Dense shaped team reward. Every term is computed per team and the home
reward is the difference of the two team totals, so home + away = 0.
"""
import math
from dataclasses import asdict, dataclass

from env.models import EventKind, Team


@dataclass(frozen=True)
class ShapedRewardConfig:
    goal: float = 1.0
    hold_ball: float = 0.0001
    pass_bonus: float = 0.05
    grouping_penalty: float = -0.001
    grouping_threshold: float = 0.05
    out_of_bounds: float = -0.001

    def to_dict(self):
        return asdict(self)


def clustered_players(players, threshold):
    """Number of players with at least one teammate closer than threshold"""
    count = 0
    for i, p in enumerate(players):
        if any(j != i and math.hypot(p.x - q.x, p.y - q.y) < threshold for j, q in enumerate(players)):
            count += 1
    return count


def players_outside(players, pitch):
    return sum(1 for p in players if not pitch.contains(p.x, p.y))


def team_terms(team, events, state, cfg):
    """Shaped terms earned by one team on a step, keyed by term name"""
    team = Team(team)
    players = state.team(team)
    controller = state.ball.controller
    holds = controller is not None and Team(controller[0]) == team
    return {
        'goal': cfg.goal * sum(1 for e in events if e.kind == EventKind.GOAL and e.team == team),
        'hold': cfg.hold_ball if holds else 0.0,
        'pass': cfg.pass_bonus * sum(1 for e in events if e.kind == EventKind.PASS_ATTEMPT and e.team == team and e.good),
        'grouping': cfg.grouping_penalty * clustered_players(players, cfg.grouping_threshold),
        'out_of_bounds': cfg.out_of_bounds * players_outside(players, state.scenario.pitch),
    }


def team_total(team, events, state, cfg):
    terms = team_terms(team, events, state, cfg)
    return terms['goal'] + terms['hold'] + terms['pass'] + terms['grouping'] + terms['out_of_bounds']


def base_reward(prev, events, next_state, cfg=ShapedRewardConfig()):
    """
    (home_reward, away_reward) for one step. Ball holding, grouping and
    out-of-bounds terms are read from the state after the step.
    """
    home = team_total(Team.HOME, events, next_state, cfg) - team_total(Team.AWAY, events, next_state, cfg)
    return home, -home
