"""
Curriculum scenarios. Early scenarios start the home team deep in the
attacking half against a slow scripted defence; later ones move back to a
full-pitch kickoff against a quicker opponent. Offside is off throughout
the curriculum and on in self-play.
"""
from env.state import ScenarioConfig, default_formation, mirror_positions

from .config import LeagueConfig

STRENGTH_FACTORS = (0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5, 0.6, 0.75, 0.95)

# Forward shift of the home outfield in scenario 1, shrinking to 0 by the ramp end
MAX_ADVANCE = 1.0


def strength_factor(index):
    """Opponent strength of curriculum scenario index (1-based)"""
    return STRENGTH_FACTORS[min(index, len(STRENGTH_FACTORS)) - 1]


def home_layout(players_per_team, advance):
    formation = default_formation(players_per_team)
    # Keeper stays home
    return formation[:1] + tuple((x + advance, y) for x, y in formation[1:])


def curriculum_scenario(index, players_per_team, cfg=LeagueConfig()):
    span = max(cfg.ramp_scenarios - 1, 1)
    advance = MAX_ADVANCE * max(0.0, (cfg.ramp_scenarios - index) / span)
    return ScenarioConfig(
        players_per_team=players_per_team,
        episode_step_limit=cfg.curriculum_step_limit,
        terminate_on_score_or_fault=True,
        offside_enabled=False,
        opponent_strength=strength_factor(index),
        home_positions=home_layout(players_per_team, advance),
        away_positions=mirror_positions(default_formation(players_per_team)),
        kickoff_holder=players_per_team - 1,
        name=f'curriculum-{index:02d}',
    )


def build_curriculum(players_per_team, cfg=LeagueConfig()):
    return [curriculum_scenario(k, players_per_team, cfg) for k in range(1, cfg.curriculum_scenarios + 1)]


def selfplay_scenario(players_per_team, cfg=LeagueConfig()):
    """Normal football: full match length, play restarts after goals and faults"""
    return ScenarioConfig(
        players_per_team=players_per_team,
        episode_step_limit=cfg.selfplay_step_limit,
        terminate_on_score_or_fault=False,
        offside_enabled=True,
        opponent_strength=1.0,
        kickoff_holder=players_per_team - 1,
        name='self-play',
    )


def phase_scenario(phase, players_per_team, cfg=LeagueConfig()):
    if phase.is_curriculum:
        return curriculum_scenario(phase.index, players_per_team, cfg)
    return selfplay_scenario(players_per_team, cfg)
