import tempfile
from pathlib import Path

import numpy as np
from django.core.exceptions import ImproperlyConfigured
from django.test import SimpleTestCase, override_settings

from env.models import Action, EventKind, Team
from env.simulator import Event, reset, step
from env.state import ScenarioConfig
from features.layout import actor_dim
from nn.mlp import init_params, zero_params
from nn.specs import actor_spec
from rollout.messages import OpponentSnapshot
from rollout.models import Outcome

from .aggregate import aggregate, iqm
from .config import EvalConfig
from .harness import match_seeds, play_match
from .reports import read_csv
from .serializers import build_eval_config
from .service import AGGREGATE_CSV, MATCH_CSV, EvaluationService
from .stats import STAT_FIELDS, MatchStats

IDLE4 = [Action.IDLE] * 4
SHORT_MATCH = ScenarioConfig(players_per_team=2, episode_step_limit=80, terminate_on_score_or_fault=False)


def uniform_actor(players=2, pe_dim=4):
    spec = actor_spec(actor_dim(players, pe_dim))
    return spec, zero_params(spec)


class IqmTests(SimpleTestCase):

    def test_examples(self):
        self.assertEqual(iqm([1, 2, 3, 4]), 2.5)
        self.assertEqual(iqm([5]), 5.0)
        self.assertEqual(iqm([3.0] * 7), 3.0)

    def test_trims_a_quarter_each_side(self):
        self.assertEqual(iqm([100, 1, 2, 3, 4, 5, 6, -100]), 3.5)

    def test_order_and_bounds(self):
        rng = np.random.default_rng(0)
        values = rng.normal(size=50)
        self.assertEqual(iqm(values), iqm(values[::-1]))
        self.assertLessEqual(values.min(), iqm(values))
        self.assertLessEqual(iqm(values), values.max())

    def test_empty(self):
        with self.assertRaises(ValueError):
            iqm([])


class MatchStatsTests(SimpleTestCase):

    def test_event_mapping(self):
        state = reset(ScenarioConfig(kickoff_holder=0), seed=0)
        stats = MatchStats()
        stats.record([
            Event(EventKind.PASS_ATTEMPT, Team.HOME, True),
            Event(EventKind.SHOT_ATTEMPT, Team.HOME, False),
            Event(EventKind.INTERCEPTION, Team.AWAY),
            Event(EventKind.PASS_ATTEMPT, Team.AWAY, False),
        ], state)
        self.assertEqual((stats.total_passes, stats.good_passes, stats.bad_passes), (1, 1, 0))
        self.assertEqual((stats.total_shots, stats.bad_shots), (1, 1))
        self.assertEqual(stats.times_intercepted, 1)
        self.assertEqual(stats.interceptions_made, 0)
        self.assertEqual(stats.possession_steps, 1)
        self.assertTrue(stats.is_consistent())

    def test_completed_pass_counts_once(self):
        home = ((0.0, 0.0), (0.2, 0.0), (-0.3, 0.2), (-0.5, 0.0))
        away = ((0.5, 0.35), (0.3, -0.35), (0.2, 0.3), (0.6, -0.3))
        state = reset(ScenarioConfig(home_positions=home, away_positions=away, kickoff_holder=0), seed=0)
        stats = MatchStats()
        result = step(state, [Action.SHORT_PASS] + IDLE4[1:], IDLE4)
        stats.record(result.events, result.next_state)
        for _ in range(20):
            result = step(result.next_state, IDLE4, IDLE4)
            stats.record(result.events, result.next_state)
        self.assertEqual((stats.total_passes, stats.good_passes, stats.bad_passes), (1, 1, 0))

    def test_idle_match_has_no_events(self):
        scenario = ScenarioConfig(episode_step_limit=50, terminate_on_score_or_fault=False)
        state = reset(scenario, seed=3)
        stats = MatchStats()
        while not state.terminated:
            result = step(state, IDLE4, IDLE4)
            stats.record(result.events, result.next_state)
            state = result.next_state
        for name in STAT_FIELDS:
            if name != 'possession_steps':
                self.assertEqual(getattr(stats, name), 0, name)
        self.assertEqual(stats.outcome, Outcome.DRAW)


class HarnessTests(SimpleTestCase):

    def test_match_is_deterministic_and_consistent(self):
        spec, params = uniform_actor()
        first = play_match(spec, params, SHORT_MATCH, seed=11, pe_dim=4)
        second = play_match(spec, params, SHORT_MATCH, seed=11, pe_dim=4)
        self.assertEqual(first, second)
        self.assertTrue(first.is_consistent())

    def test_match_against_a_pool_policy(self):
        spec, params = uniform_actor()
        opponent = OpponentSnapshot.policy(spec, params, 'policy-000001', strength=0.5)
        first = play_match(spec, params, SHORT_MATCH, seed=3, pe_dim=4, opponent=opponent)
        self.assertEqual(first, play_match(spec, params, SHORT_MATCH, seed=3, pe_dim=4, opponent=opponent))
        self.assertTrue(first.is_consistent())

    def test_actor_is_not_modified(self):
        spec = actor_spec(actor_dim(2, 4))
        params = init_params(spec, np.random.default_rng(0))
        before = params.copy()
        play_match(spec, params, SHORT_MATCH, seed=1, pe_dim=4)
        self.assertTrue(params.identical(before))
        self.assertEqual(params.version, before.version)

    def test_match_seeds(self):
        seeds = match_seeds(7, 50)
        self.assertEqual(len(set(seeds)), 50)
        self.assertEqual(seeds, match_seeds(7, 50))
        with self.assertRaises(ValueError):
            match_seeds(7, 0)

    def test_single_match_report(self):
        spec, params = uniform_actor()
        stats = play_match(spec, params, SHORT_MATCH, seed=5, pe_dim=4)
        report = aggregate([stats], 'heuristic@0.6', [5])
        for name in STAT_FIELDS:
            self.assertEqual(report.metrics[name], (float(getattr(stats, name)), 0.0))

    def test_repeated_seed_has_zero_spread(self):
        spec, params = uniform_actor()
        stats = [play_match(spec, params, SHORT_MATCH, seed=5, pe_dim=4) for _ in range(3)]
        report = aggregate(stats, 'heuristic@0.6', [5, 5, 5])
        self.assertTrue(all(std == 0.0 for _, std in report.metrics.values()))


@override_settings(ROLLOUT_BACKEND='serial')
class ServiceTests(SimpleTestCase):

    def test_reports_written(self):
        spec, params = uniform_actor()
        cfg = EvalConfig(matches=3, group_seeds=(0, 1), match_step_limit=40)
        with tempfile.TemporaryDirectory() as tmp:
            reports = EvaluationService().evaluate(spec, params, 2, tmp, cfg, pe_dim=4)
            matches = read_csv(Path(tmp) / MATCH_CSV)
            summary = read_csv(Path(tmp) / AGGREGATE_CSV)
        self.assertEqual(len(reports), 2)
        self.assertEqual(len(matches), 6)
        self.assertEqual(len(summary), 2)
        self.assertEqual([r['group_seed'] for r in summary], ['0', '1'])
        self.assertIn('good_passes_iqm', summary[0])

    def test_same_inputs_same_files(self):
        spec, params = uniform_actor()
        cfg = EvalConfig(matches=2, group_seeds=(4,), match_step_limit=30)
        contents = []
        for _ in range(2):
            with tempfile.TemporaryDirectory() as tmp:
                EvaluationService().evaluate(spec, params, 2, tmp, cfg, pe_dim=4)
                contents.append((Path(tmp) / MATCH_CSV).read_text() + (Path(tmp) / AGGREGATE_CSV).read_text())
        self.assertEqual(contents[0], contents[1])

    def test_process_pool_matches_serial(self):
        spec, params = uniform_actor()
        cfg = EvalConfig(matches=2, group_seeds=(3,), match_step_limit=30)
        serial, _ = EvaluationService().run_evaluation(spec, params, 2, 3, cfg, pe_dim=4)
        pooled, _ = EvaluationService(backend='process', processes=2).run_evaluation(spec, params, 2, 3, cfg, pe_dim=4)
        self.assertEqual(serial.metrics, pooled.metrics)

    def test_outcomes_against_the_phase_opponent(self):
        spec, params = uniform_actor()
        scenario = ScenarioConfig(players_per_team=2, episode_step_limit=25)
        opponent = OpponentSnapshot.heuristic(0.3)
        outcomes = EvaluationService().play_outcomes(spec, params, scenario, opponent, match_seeds(9, 4), pe_dim=4)
        self.assertEqual(len(outcomes), 4)
        for outcome in outcomes:
            self.assertEqual(outcome.opponent, 'heuristic')
            self.assertLessEqual(outcome.steps, 25)
            self.assertEqual(outcome.result == Outcome.WIN, outcome.goals_for > outcome.goals_against)

    def test_eval_config(self):
        cfg = build_eval_config({'matches': 10, 'group_seeds': [1, 2]})
        self.assertEqual(cfg.group_seeds, (1, 2))
        self.assertEqual(cfg.opponent_strength, 0.6)
        with self.assertRaises(ImproperlyConfigured):
            build_eval_config({'opponent_strength': 0.0})
