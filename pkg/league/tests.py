import json
import tempfile
from collections import Counter
from pathlib import Path
from unittest import mock

import numpy as np
from django.core.exceptions import ImproperlyConfigured
from django.test import SimpleTestCase

from nn.mlp import MlpSpec, init_params
from rollout.exceptions import RunError
from rollout.messages import EpisodeOutcome
from rollout.models import OpponentKind, Outcome

from .config import LeagueConfig
from .curriculum import STRENGTH_FACTORS, build_curriculum, selfplay_scenario
from .league import League
from .models import Decision, PhaseKind
from .phases import MatchResult, Phase, PhaseState, advance, advance_check, next_phase, record_result, threshold
from .pool import PolicyPool, snapshot
from .progress import ProgressLog, progress_summary, relative_progress
from .sampling import HEURISTIC, generalize_probabilities, select_opponent, selection_probabilities
from .serializers import build_league_config
from .signals import phase_advanced

SPEC = MlpSpec((4, 8, 18))
CHALLENGE = Phase(PhaseKind.CHALLENGE)
GENERALIZE = Phase(PhaseKind.GENERALIZE)


def actor(seed=0):
    return init_params(SPEC, np.random.default_rng(seed))


def filled_state(wins, total=100, phase=None):
    state = PhaseState(phase=phase or Phase.curriculum(1))
    for i in range(total):
        record_result(state, MatchResult(Outcome.WIN if i < wins else Outcome.LOSS))
    return state


def episode(result, opponent='heuristic'):
    goals = {Outcome.WIN: (1, 0), Outcome.LOSS: (0, 1), Outcome.DRAW: (0, 0)}[result]
    return EpisodeOutcome(result, goals[0], goals[1], 50, opponent)


class ThresholdTests(SimpleTestCase):

    def test_ramp(self):
        self.assertEqual(threshold(Phase.curriculum(1)), 0.55)
        self.assertAlmostEqual(threshold(Phase.curriculum(4)), 0.635714, places=6)
        self.assertAlmostEqual(threshold(Phase.curriculum(8)), 0.75)
        self.assertEqual(threshold(Phase.curriculum(9)), 0.75)
        self.assertEqual(threshold(Phase.curriculum(10)), 0.75)
        self.assertEqual(threshold(CHALLENGE), 0.75)
        self.assertEqual(threshold(GENERALIZE), 0.75)

    def test_non_decreasing(self):
        values = [threshold(Phase.curriculum(k)) for k in range(1, 11)]
        self.assertEqual(values, sorted(values))

    def test_league_config(self):
        cfg = build_league_config({'window_capacity': 20})
        self.assertEqual(cfg.window_capacity, 20)
        self.assertEqual(cfg.challenge_latest_probability, 0.8)
        with self.assertRaises(ImproperlyConfigured):
            build_league_config({'first_threshold': 0.9, 'final_threshold': 0.7})
        self.assertEqual(cfg.win_rate_matches, 0)
        self.assertEqual(build_league_config({'win_rate_matches': 8}).win_rate_matches, 8)
        with self.assertRaises(ImproperlyConfigured):
            build_league_config({'win_rate_matches': -1})
        with self.assertRaises(ImproperlyConfigured):
            build_league_config({'pool_stats_decay': 1.5})


class PhaseStateTests(SimpleTestCase):

    def test_window_win_rate(self):
        self.assertEqual(filled_state(60).win_rate, 0.60)

    def test_window_keeps_the_latest_results(self):
        state = filled_state(100)
        for _ in range(40):
            record_result(state, MatchResult(Outcome.LOSS))
        self.assertEqual(len(state.window), 100)
        self.assertEqual(state.win_rate, 0.60)
        self.assertEqual(state.episodes, 140)

    def test_empty_window(self):
        state = PhaseState()
        self.assertEqual(state.win_rate, 0.0)
        self.assertEqual(advance_check(state), Decision.STAY)

    def test_draws_are_not_wins(self):
        state = PhaseState(capacity=4)
        for outcome in (Outcome.WIN, Outcome.DRAW, Outcome.DRAW, Outcome.WIN):
            record_result(state, MatchResult(outcome))
        self.assertEqual(state.win_rate, 0.5)

    def test_result_must_match_score(self):
        with self.assertRaises(ValueError):
            MatchResult(Outcome.WIN, goals_for=0, goals_against=2)

    def test_advance_check(self):
        self.assertEqual(advance_check(filled_state(56)), Decision.ADVANCE)
        self.assertEqual(advance_check(filled_state(54)), Decision.STAY)
        self.assertEqual(advance_check(filled_state(99, total=99)), Decision.STAY)

    def test_phase_sequence(self):
        phase = Phase.curriculum(1)
        seen = [phase.label]
        for _ in range(14):
            phase = next_phase(phase)
            seen.append(phase.label)
        self.assertEqual(seen[:10], [f'curriculum-{k:02d}' for k in range(1, 11)])
        self.assertEqual(seen[10:], ['challenge', 'generalize', 'challenge', 'generalize', 'challenge'])

    def test_advance_resets_window_and_counts(self):
        state = filled_state(80, phase=Phase.curriculum(10))
        advance(state)
        self.assertEqual(state.phase, CHALLENGE)
        self.assertEqual(len(state.window), 0)
        self.assertEqual(state.curriculum_passed, 1)
        advance(state)
        self.assertEqual(state.phase, GENERALIZE)
        self.assertEqual(state.challenge_passes, 1)

    def test_state_round_trip(self):
        state = filled_state(30, total=40, phase=GENERALIZE)
        state.env_steps = {'generalize': 1000}
        restored = PhaseState.from_dict(json.loads(json.dumps(state.to_dict())))
        self.assertEqual(restored.to_dict(), state.to_dict())
        self.assertEqual(restored.window.maxlen, 100)

    def test_advancement_soundness(self):
        # Advancement at the first full-window check for p = tau +/- 0.1
        rng = np.random.default_rng(2024)
        tau = threshold(Phase.curriculum(1))
        for p, low, high in ((tau + 0.1, 0.9, 1.0), (tau - 0.1, 0.0, 0.1)):
            advanced = 0
            for _ in range(300):
                wins = int(rng.binomial(100, p))
                if advance_check(filled_state(wins)) == Decision.ADVANCE:
                    advanced += 1
            self.assertGreaterEqual(advanced / 300, low)
            self.assertLessEqual(advanced / 300, high)

    def test_full_window_decides_exactly_at_the_threshold(self):
        phases = [Phase.curriculum(k) for k in range(1, 11)] + [CHALLENGE, GENERALIZE]
        for phase in phases:
            tau = threshold(phase)
            needed = next(k for k in range(101) if k / 100 >= tau)
            with self.subTest(phase=phase.label, tau=tau):
                self.assertEqual(advance_check(filled_state(needed - 1, phase=phase)), Decision.STAY)
                self.assertEqual(advance_check(filled_state(needed, phase=phase)), Decision.ADVANCE)
                self.assertEqual(advance_check(filled_state(needed, total=99, phase=phase)), Decision.STAY)


class PoolTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name) / 'pool'

    def test_snapshot_round_trip(self):
        pool = PolicyPool(self.root)
        params = actor(1)
        entry = snapshot(pool, SPEC, params, 'curriculum-03', 1200)
        self.assertEqual(entry.label, 'curriculum-03')
        spec, loaded = pool.load_actor(entry)
        self.assertEqual(spec, SPEC)
        self.assertTrue(loaded.identical(params))

    def test_ids_increase_and_manifest_reloads(self):
        pool = PolicyPool(self.root)
        for k in range(10):
            snapshot(pool, SPEC, actor(k), f'curriculum-{k + 1:02d}', 100 * k)
        ids = [e.id for e in pool]
        self.assertEqual(ids, list(range(1, 11)))
        reopened = PolicyPool(self.root)
        self.assertEqual([e.key for e in reopened], [e.key for e in pool])
        self.assertEqual(reopened.latest_with_label('curriculum-04').id, 4)

    def test_failed_snapshot_keeps_the_pool(self):
        pool = PolicyPool(self.root)
        snapshot(pool, SPEC, actor(), 'curriculum-01', 0)
        with mock.patch('league.pool.save_checkpoint', side_effect=OSError('disk full')):
            with self.assertRaises(RunError):
                snapshot(pool, SPEC, actor(), 'curriculum-02', 10)
        self.assertEqual(len(pool), 1)
        self.assertEqual(len(PolicyPool(self.root)), 1)

    def test_missing_checkpoint_is_an_error(self):
        pool = PolicyPool(self.root)
        entry = snapshot(pool, SPEC, actor(), 'challenge', 0)
        (self.root / entry.path).unlink()
        with self.assertRaises(RunError):
            PolicyPool(self.root)

    def test_outcomes_update_entry_statistics(self):
        pool = PolicyPool(self.root)
        entry = snapshot(pool, SPEC, actor(), 'challenge', 0)
        pool.record_outcomes([episode(Outcome.WIN, entry.key), episode(Outcome.DRAW, entry.key), episode(Outcome.WIN)])
        self.assertEqual((entry.games, entry.wins), (2, 1))
        self.assertEqual(PolicyPool(self.root).get(entry.key).win_rate, 0.5)

    def test_decay_keeps_win_rates(self):
        pool = PolicyPool(self.root)
        entry = snapshot(pool, SPEC, actor(), 'challenge', 0)
        pool.record_outcomes([episode(Outcome.WIN, entry.key)] * 3 + [episode(Outcome.LOSS, entry.key)])
        pool.decay_statistics(0.5)
        self.assertEqual((entry.games, entry.wins), (2.0, 1.5))
        self.assertEqual(entry.win_rate, 0.75)
        self.assertEqual(PolicyPool(self.root).get(entry.key).games, 2.0)
        pool.decay_statistics(1.0)
        self.assertEqual(entry.games, 2.0)


class SamplingTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.pool = PolicyPool(Path(self.tmp.name) / 'pool')
        self.rng = np.random.default_rng(0)

    def fill(self, labels):
        return [snapshot(self.pool, SPEC, actor(i), label, i) for i, label in enumerate(labels)]

    def test_first_scenario_plays_the_heuristic(self):
        self.assertEqual(select_opponent(Phase.curriculum(1), self.pool, self.rng), HEURISTIC)
        self.assertEqual(STRENGTH_FACTORS[0], 0.05)

    def test_curriculum_plays_the_previous_scenario(self):
        entries = self.fill(['curriculum-01', 'curriculum-02', 'curriculum-02'])
        self.assertEqual(select_opponent(Phase.curriculum(3), self.pool, self.rng), entries[2])
        self.assertEqual(select_opponent(Phase.curriculum(2), self.pool, self.rng), entries[0])
        with self.assertRaises(RunError):
            select_opponent(Phase.curriculum(5), self.pool, self.rng)

    def test_challenge_probabilities(self):
        self.fill(['v1', 'v2', 'v3', 'v4', 'v5'])
        probs = selection_probabilities(CHALLENGE, self.pool)
        np.testing.assert_allclose(probs, [0.05, 0.05, 0.05, 0.05, 0.8])

    def test_challenge_sampling_frequency(self):
        entries = self.fill(['v1', 'v2', 'v3', 'v4', 'v5'])
        n = 100_000
        latest = sum(select_opponent(CHALLENGE, self.pool, self.rng) is entries[-1] for _ in range(n))
        sigma = np.sqrt(0.8 * 0.2 / n)
        self.assertLess(abs(latest / n - 0.8), 3 * sigma)

    def test_generalize_sampling_frequency(self):
        entries = self.fill(['a', 'b', 'c', 'd'])
        for entry, (games, wins) in zip(entries, ((10, 9), (10, 5), (10, 2), (0, 0))):
            entry.games, entry.wins = games, wins
        # (1 - p)^2 with the unplayed entry counted at p = 0.5
        weights = np.array([0.1 ** 2, 0.5 ** 2, 0.8 ** 2, 0.5 ** 2])
        expected = weights / weights.sum()
        np.testing.assert_allclose(selection_probabilities(GENERALIZE, self.pool), expected)

        n = 100_000
        counts = Counter(select_opponent(GENERALIZE, self.pool, self.rng).key for _ in range(n))
        for entry, p in zip(entries, expected):
            with self.subTest(entry=entry.key, p=p):
                sigma = np.sqrt(p * (1 - p) / n)
                self.assertLess(abs(counts[entry.key] / n - p), 3 * sigma)

    def test_generalize_weights(self):
        a, b = self.fill(['a', 'b'])
        a.games, a.wins = 10, 9
        b.games, b.wins = 10, 5
        probs = generalize_probabilities([a, b])
        self.assertAlmostEqual(probs[1], 25 / 26)

    def test_generalize_without_statistics_is_uniform(self):
        self.fill(['a', 'b', 'c'])
        np.testing.assert_allclose(selection_probabilities(GENERALIZE, self.pool), [1 / 3] * 3)

    def test_empty_pool_in_self_play(self):
        with self.assertRaises(RunError):
            select_opponent(CHALLENGE, self.pool, self.rng)


class CurriculumTests(SimpleTestCase):

    def test_ten_valid_scenarios(self):
        scenarios = build_curriculum(4)
        self.assertEqual(len(scenarios), 10)
        for scenario, strength in zip(scenarios, STRENGTH_FACTORS):
            scenario.validate()
            self.assertEqual(scenario.opponent_strength, strength)
            self.assertFalse(scenario.offside_enabled)

    def test_attack_starts_deeper_early(self):
        scenarios = build_curriculum(4)
        self.assertGreater(scenarios[0].home_positions[-1][0], scenarios[7].home_positions[-1][0])
        self.assertEqual(scenarios[7].home_positions, scenarios[9].home_positions)

    def test_self_play_is_normal_football(self):
        scenario = selfplay_scenario(11)
        scenario.validate()
        self.assertTrue(scenario.offside_enabled)
        self.assertFalse(scenario.terminate_on_score_or_fault)
        self.assertEqual(scenario.episode_step_limit, 3000)


class LeagueTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.run_dir = Path(self.tmp.name)
        self.league = League(self.run_dir, 4, LeagueConfig(window_capacity=4))
        self.received = []
        phase_advanced.connect(self.receiver)
        self.addCleanup(phase_advanced.disconnect, self.receiver)

    def receiver(self, sender, **kwargs):
        self.received.append(kwargs)

    def test_curriculum_pass(self):
        opponent = self.league.choose_opponent(np.random.default_rng(0))
        self.assertEqual(opponent.kind, OpponentKind.HEURISTIC)
        self.assertEqual(opponent.strength, 0.05)

        report = self.league.after_rollout([episode(Outcome.WIN)] * 2, 0, 1000, 1.5, SPEC, actor())
        self.assertFalse(report.advanced)
        report = self.league.after_rollout([episode(Outcome.WIN)] * 2, 1, 1000, 1.5, SPEC, actor())
        self.assertTrue(report.advanced)
        self.assertEqual(report.phase, 'curriculum-01')
        self.assertEqual(self.league.phase, Phase.curriculum(2))
        self.assertEqual(len(self.received), 1)
        self.assertEqual(self.received[0]['previous'], Phase.curriculum(1))
        self.assertEqual(self.received[0]['entry'].label, 'curriculum-01')

        opponent = self.league.choose_opponent(np.random.default_rng(0))
        self.assertEqual(opponent.kind, OpponentKind.POLICY)
        self.assertEqual(opponent.label, report.entry)
        self.assertEqual(opponent.strength, 0.1)
        self.assertTrue(opponent.actor.identical(actor()))

    def test_progress_log_and_summary(self):
        self.league.after_rollout([episode(Outcome.LOSS)] * 4, 0, 500, 2.0, SPEC, actor())
        self.league.after_rollout([episode(Outcome.WIN)] * 4, 1, 500, 2.0, SPEC, actor())
        self.league.after_rollout([episode(Outcome.DRAW)], 2, 500, 2.0, SPEC, actor())
        rows = ProgressLog(self.run_dir).rows()
        self.assertEqual([r['advanced'] for r in rows], ['0', '1', '0'])
        summary = progress_summary(self.run_dir)
        self.assertEqual(summary['curriculum_passed'], 1)
        self.assertEqual(summary['env_steps'], {'curriculum-01': 1000, 'curriculum-02': 500})
        self.assertEqual(summary['total_env_steps'], 1500)

    def test_relative_progress(self):
        other = Path(self.tmp.name) / 'other'
        League(other, 4, LeagueConfig(window_capacity=1)).after_rollout([episode(Outcome.WIN)], 0, 10, 0.1, SPEC, actor())
        self.league.after_rollout([episode(Outcome.WIN)] * 4, 0, 10, 0.1, SPEC, actor())
        self.league.after_rollout([episode(Outcome.WIN)] * 4, 1, 10, 0.1, SPEC, actor())
        result = relative_progress([self.run_dir], [other])
        self.assertEqual(result['base_mean_stages'], 2)
        self.assertEqual(result['other_mean_stages'], 1)
        self.assertEqual(result['ratio'], 0.5)

    def test_state_dict_round_trip(self):
        self.league.after_rollout([episode(Outcome.WIN), episode(Outcome.LOSS)], 0, 100, 1.0, SPEC, actor())
        restored = League(self.run_dir, 4, LeagueConfig(window_capacity=4))
        restored.load_state_dict(json.loads(json.dumps(self.league.state_dict())))
        self.assertEqual(restored.state.to_dict(), self.league.state.to_dict())
        self.assertEqual(restored.win_rate_ema, 0.5)

    def test_separate_matches_fill_the_window(self):
        report = self.league.after_rollout(
            [episode(Outcome.WIN)] * 4, 0, 100, 1.0, SPEC, actor(), window_outcomes=[],
        )
        self.assertFalse(report.advanced)
        self.assertEqual(len(self.league.state.window), 0)
        self.assertIsNone(report.rollout_win_rate)

        report = self.league.after_rollout(
            [episode(Outcome.LOSS)] * 4, 1, 100, 1.0, SPEC, actor(), window_outcomes=[episode(Outcome.WIN)] * 4,
        )
        self.assertTrue(report.advanced)
        self.assertEqual(report.rollout_win_rate, 1.0)

    def test_pass_decays_pool_statistics(self):
        entry = snapshot(self.league.pool, SPEC, actor(1), 'challenge', 0)
        self.league.pool.record_outcomes([episode(Outcome.WIN, entry.key), episode(Outcome.LOSS, entry.key)])
        self.league.after_rollout([episode(Outcome.WIN)] * 4, 0, 100, 1.0, SPEC, actor())
        self.assertEqual((entry.games, entry.wins), (1.0, 0.5))
        self.assertEqual(entry.win_rate, 0.5)
