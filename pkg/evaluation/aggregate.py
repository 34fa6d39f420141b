import math
from dataclasses import dataclass, field

import numpy as np

from .stats import STAT_FIELDS


def iqm(values):
    """Interquartile mean: drop floor(n/4) values at each end, mean the rest"""
    values = sorted(float(v) for v in values)
    if not values:
        raise ValueError('Interquartile mean of an empty list')
    cut = len(values) // 4
    kept = values[cut:len(values) - cut]
    return math.fsum(kept) / len(kept)


@dataclass
class EvalReport:
    metrics: dict  # field -> (iqm, population std)
    matches: int
    opponent: str
    seeds: list = field(default_factory=list)
    group_seed: int = 0

    def row(self):
        data = {'group_seed': self.group_seed, 'matches': self.matches, 'opponent': self.opponent}
        for name in STAT_FIELDS:
            mean, std = self.metrics[name]
            data[f'{name}_iqm'] = mean
            data[f'{name}_std'] = std
        return data


def aggregate(stats, opponent, seeds, group_seed=0):
    if not stats:
        raise ValueError('Cannot aggregate zero matches')
    metrics = {}
    for name in STAT_FIELDS:
        values = [getattr(s, name) for s in stats]
        metrics[name] = (iqm(values), float(np.std(values)))
    return EvalReport(metrics, len(stats), opponent, [int(s) for s in seeds], group_seed)
