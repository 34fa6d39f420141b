from dataclasses import asdict, dataclass

from .harness import MEDIUM_STRENGTH


@dataclass(frozen=True)
class EvalConfig:
    matches: int = 50
    group_seeds: tuple = (0, 1, 2, 3, 4)
    opponent_strength: float = MEDIUM_STRENGTH
    match_step_limit: int = 3000

    def to_dict(self):
        data = asdict(self)
        data['group_seeds'] = list(self.group_seeds)
        return data
