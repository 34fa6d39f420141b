"""
Opponent selection per phase.

Curriculum(1) plays the scripted AI, Curriculum(k) plays the last snapshot
taken when scenario k-1 was passed. Challenge mostly plays the newest
snapshot and sometimes an older one; Generalize weights every snapshot by
how hard it still is for the current policy.
"""
import numpy as np

from rollout.exceptions import RunError

from .config import LeagueConfig
from .models import PhaseKind
from .phases import Phase

HEURISTIC = 'heuristic'
UNKNOWN_WIN_RATE = 0.5


def pfsp_weights(entries, exponent=2.0):
    """(1 - p)^exponent per entry, p the win rate against it (0.5 if unplayed)"""
    p = np.array([UNKNOWN_WIN_RATE if e.win_rate is None else e.win_rate for e in entries])
    return (1.0 - p) ** exponent


def challenge_probabilities(n, latest_probability=0.8):
    if n == 1:
        return np.ones(1)
    probs = np.full(n, (1.0 - latest_probability) / (n - 1))
    probs[-1] = latest_probability
    return probs


def generalize_probabilities(entries, exponent=2.0):
    weights = pfsp_weights(entries, exponent)
    total = weights.sum()
    if total <= 0:
        return np.full(len(entries), 1.0 / len(entries))
    return weights / total


def selection_probabilities(phase, pool, cfg=LeagueConfig()):
    """Distribution over pool entries for the self-play phases"""
    entries = list(pool)
    if not entries:
        raise RunError(f'Opponent pool is empty in phase {phase.label}')
    if PhaseKind(phase.kind) == PhaseKind.CHALLENGE:
        return challenge_probabilities(len(entries), cfg.challenge_latest_probability)
    return generalize_probabilities(entries, cfg.pfsp_exponent)


def select_opponent(phase, pool, rng, cfg=LeagueConfig()):
    """A pool entry, or HEURISTIC for the first curriculum scenario"""
    if phase.is_curriculum:
        if phase.index == 1:
            return HEURISTIC
        previous = Phase.curriculum(phase.index - 1).label
        entry = pool.latest_with_label(previous)
        if entry is None:
            raise RunError(f'No snapshot from {previous} to play in {phase.label}')
        return entry
    probs = selection_probabilities(phase, pool, cfg)
    return list(pool)[int(rng.choice(len(probs), p=probs))]
