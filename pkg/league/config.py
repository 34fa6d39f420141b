from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class LeagueConfig:
    """Staging rules: win-rate measurement, thresholds and opponent sampling"""
    window_capacity: int = 100
    first_threshold: float = 0.55
    final_threshold: float = 0.75
    ramp_scenarios: int = 8  # scenario at which the threshold reaches final_threshold
    curriculum_scenarios: int = 10
    selfplay_threshold: float = 0.75
    challenge_latest_probability: float = 0.8
    pfsp_exponent: float = 2.0
    curriculum_step_limit: int = 500
    selfplay_step_limit: int = 3000
    pool_stats_decay: float = 0.5  # applied to every pool entry's games and wins on each pass
    win_rate_matches: int = 0  # extra matches per rollout feeding the window instead of the rollout episodes

    def to_dict(self):
        return asdict(self)
