import tempfile
from pathlib import Path

import numpy as np
from django.core.exceptions import ImproperlyConfigured
from django.test import SimpleTestCase

from .heuristic import direction_action, heuristic_action
from .models import NUM_ACTIONS, Action, EventKind, Team, TerminationCause
from .replay import ReplayWriter, read_replay
from .scenarios import load_scenario
from .serializers import build_scenario
from .simulator import MatchStateError, mirror_action, reset, step
from .state import FieldConfig, ScenarioConfig, mirror_state, state_digest

IDLE4 = [Action.IDLE] * 4

ATTACK_HOME = ((0.8, 0.0), (0.0, 0.2), (0.0, -0.2), (-0.5, 0.0))
ATTACK_AWAY = ((0.5, 0.35), (0.3, -0.35), (0.2, 0.3), (0.6, -0.3))


def attacking_scenario(**overrides):
    params = dict(home_positions=ATTACK_HOME, away_positions=ATTACK_AWAY, kickoff_holder=0)
    params.update(overrides)
    return ScenarioConfig(**params)


def kinematics(state):
    values = []
    for p in state.home + state.away:
        values.extend((p.x, p.y, p.vx, p.vy, p.tiredness))
    values.extend((state.ball.x, state.ball.y, state.ball.vx, state.ball.vy))
    return np.array(values)


class ScenarioTests(SimpleTestCase):

    def test_default_scenario_reset(self):
        state = reset(ScenarioConfig(), seed=7)
        self.assertEqual(len(state.home), 4)
        self.assertEqual(len(state.away), 4)
        self.assertEqual(state.ball.position, (0.0, 0.0))
        self.assertEqual(state.step, 0)
        self.assertEqual(state.score, (0, 0))

    def test_reset_is_deterministic(self):
        first = reset(ScenarioConfig(), seed=7)
        second = reset(ScenarioConfig(), seed=7)
        self.assertEqual(first.to_dict(), second.to_dict())

    def test_eleven_a_side(self):
        scenario = ScenarioConfig(players_per_team=11)
        state = reset(scenario, seed=1)
        self.assertEqual(len(state.home), 11)
        self.assertEqual(len(state.away), 11)
        for player, (x, y) in zip(state.home, scenario.home_positions):
            self.assertEqual(player.position, (x, y))
        self.assertTrue(all(p.x < 0 for p in state.home))
        self.assertTrue(all(p.x > 0 for p in state.away))

    def test_invalid_scenarios(self):
        with self.assertRaises(ImproperlyConfigured):
            reset(ScenarioConfig(players_per_team=0), seed=0)
        with self.assertRaises(ImproperlyConfigured):
            reset(ScenarioConfig(opponent_strength=0.0), seed=0)
        with self.assertRaises(ImproperlyConfigured):
            reset(ScenarioConfig(pitch=FieldConfig(goal_half_width=0.5)), seed=0)

    def test_serializer_rejects_bad_strength(self):
        with self.assertRaises(ImproperlyConfigured):
            build_scenario({'opponent_strength': 1.5})

    def test_serializer_checks_position_count(self):
        with self.assertRaises(ImproperlyConfigured):
            build_scenario({'players_per_team': 2, 'home_positions': [[0.0, 0.0]]})

    def test_load_scenario_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'box.toml'
            path.write_text(
                '[scenario]\n'
                'name = "box"\n'
                'players_per_team = 2\n'
                'episode_step_limit = 50\n'
                'opponent_strength = 0.3\n'
                'home_positions = [[0.5, 0.0], [0.2, 0.1]]\n'
                'kickoff_holder = 0\n'
                '[scenario.pitch]\n'
                'width = 0.8\n'
            )
            scenario = load_scenario(path)
        self.assertEqual(scenario.name, 'box')
        self.assertEqual(scenario.home_positions, ((0.5, 0.0), (0.2, 0.1)))
        self.assertEqual(scenario.away_positions, ((-0.5, -0.0), (-0.2, -0.1)))
        self.assertEqual(scenario.pitch.width, 0.8)
        self.assertEqual(scenario.kickoff_holder, 0)

    def test_missing_scenario_file(self):
        with self.assertRaises(ImproperlyConfigured):
            load_scenario('/nonexistent/scenario.toml')


class StepTests(SimpleTestCase):

    def test_idle_step_changes_nothing(self):
        state = reset(ScenarioConfig(kickoff_holder=1), seed=3)
        result = step(state, IDLE4, IDLE4)
        self.assertEqual(result.events, [])
        self.assertFalse(result.terminated)
        self.assertEqual(result.scoring_reward_home, 0)
        np.testing.assert_array_equal(kinematics(result.next_state), kinematics(state))
        self.assertEqual(result.next_state.ball.controller, (Team.HOME, 1))
        self.assertEqual(result.next_state.step, 1)

    def test_step_does_not_mutate_input(self):
        state = reset(ScenarioConfig(kickoff_holder=1), seed=3)
        before = state.to_dict()
        step(state, [Action.RIGHT] * 4, [Action.LEFT] * 4)
        self.assertEqual(state.to_dict(), before)

    def test_shot_in_range_scores(self):
        state = reset(attacking_scenario(), seed=11)
        result = step(state, [Action.SHOT] + IDLE4[1:], IDLE4)
        kinds = [(e.kind, e.team, e.good) for e in result.events]
        self.assertIn((EventKind.SHOT_ATTEMPT, Team.HOME, True), kinds)
        self.assertIn((EventKind.GOAL, Team.HOME, None), kinds)
        self.assertEqual(result.scoring_reward_home, 1)
        self.assertTrue(result.terminated)
        self.assertEqual(result.termination_cause, TerminationCause.GOAL)
        self.assertEqual(result.next_state.score, (1, 0))

    def test_goal_restarts_when_match_continues(self):
        scenario = attacking_scenario(terminate_on_score_or_fault=False, episode_step_limit=3000)
        result = step(reset(scenario, seed=11), [Action.SHOT] + IDLE4[1:], IDLE4)
        self.assertFalse(result.terminated)
        self.assertIsNone(result.termination_cause)
        self.assertEqual(result.scoring_reward_home, 1)
        nxt = result.next_state
        self.assertEqual(nxt.score, (1, 0))
        self.assertIsNone(nxt.ball.controller)
        self.assertEqual(nxt.ball.position, (0.0, 0.0))
        self.assertEqual(nxt.home[0].position, ATTACK_HOME[0])

    def test_carrier_out_over_sideline(self):
        scenario = attacking_scenario(home_positions=((0.0, 0.41),) + ATTACK_HOME[1:])
        result = step(reset(scenario, seed=0), [Action.BOTTOM] + IDLE4[1:], IDLE4)
        self.assertIn((EventKind.OUT_OF_BOUNDS, Team.HOME), [(e.kind, e.team) for e in result.events])
        self.assertTrue(result.terminated)
        self.assertEqual(result.termination_cause, TerminationCause.OUT_OF_BOUNDS)
        self.assertGreater(abs(result.next_state.ball.y), scenario.pitch.half_width)

    def test_short_pass_reaches_teammate(self):
        home = ((0.0, 0.0), (0.2, 0.0), (-0.3, 0.2), (-0.5, 0.0))
        scenario = attacking_scenario(home_positions=home)
        state = reset(scenario, seed=0)
        result = step(state, [Action.SHORT_PASS] + IDLE4[1:], IDLE4)
        self.assertIsNone(result.next_state.ball.controller)
        passes = []
        for _ in range(20):
            passes.extend(e for e in result.events if e.kind == EventKind.PASS_ATTEMPT)
            if passes:
                break
            result = step(result.next_state, IDLE4, IDLE4)
        self.assertEqual(len(passes), 1)
        self.assertEqual(passes[0].team, Team.HOME)
        self.assertTrue(passes[0].good)
        self.assertEqual(result.next_state.ball.controller, (Team.HOME, 1))

    def test_slide_into_player_is_foul(self):
        away = ((0.01, 0.2),) + ATTACK_AWAY[1:]
        scenario = attacking_scenario(away_positions=away)
        result = step(reset(scenario, seed=0), IDLE4, [Action.SLIDE] + IDLE4[1:])
        self.assertIn((EventKind.FOUL, Team.AWAY), [(e.kind, e.team) for e in result.events])
        self.assertEqual(result.termination_cause, TerminationCause.FOUL)
        self.assertEqual(result.next_state.away[0].sliding_cooldown, 9)

    def test_step_limit(self):
        state = reset(ScenarioConfig(episode_step_limit=3), seed=0)
        for _ in range(3):
            result = step(state, IDLE4, IDLE4)
            state = result.next_state
        self.assertTrue(result.terminated)
        self.assertEqual(result.termination_cause, TerminationCause.STEP_LIMIT)
        self.assertEqual(state.step, 3)
        with self.assertRaises(MatchStateError):
            step(state, IDLE4, IDLE4)

    def test_wrong_action_count(self):
        state = reset(ScenarioConfig(), seed=0)
        with self.assertRaises(ValueError):
            step(state, IDLE4[:3], IDLE4)

    def test_same_inputs_same_result(self):
        state = reset(ScenarioConfig(kickoff_holder=2), seed=5)
        rng = np.random.default_rng(0)
        for _ in range(50):
            home = rng.integers(0, NUM_ACTIONS, size=4).tolist()
            away = rng.integers(0, NUM_ACTIONS, size=4).tolist()
            first = step(state, home, away)
            second = step(state, home, away)
            self.assertEqual(first.next_state.to_dict(), second.next_state.to_dict())
            self.assertEqual(first.events, second.events)
            if first.terminated:
                break
            state = first.next_state

    def test_ball_controller_invariants_over_random_play(self):
        scenario = ScenarioConfig(terminate_on_score_or_fault=False, episode_step_limit=400)
        state = reset(scenario, seed=9)
        rng = np.random.default_rng(9)
        while not state.terminated:
            result = step(state, rng.integers(0, NUM_ACTIONS, 4).tolist(), rng.integers(0, NUM_ACTIONS, 4).tolist())
            state = result.next_state
            goals = [e for e in result.events if e.kind == EventKind.GOAL]
            expected = sum(1 if e.team == Team.HOME else -1 for e in goals)
            self.assertEqual(result.scoring_reward_home, expected)
            self.assertFalse(state.ball.aerial and state.ball.controller is not None)
            self.assertLessEqual(state.step, scenario.episode_step_limit)
            for p in state.home + state.away:
                self.assertTrue(0.0 <= p.tiredness <= 1.0)
                self.assertGreaterEqual(p.sliding_cooldown, 0)
        self.assertEqual(state.step, 400)


class MirrorTests(SimpleTestCase):

    def test_mirror_action_is_an_involution(self):
        for action in Action:
            self.assertEqual(mirror_action(mirror_action(action)), action)
        self.assertEqual(mirror_action(Action.TOP_LEFT), Action.BOTTOM_RIGHT)
        self.assertEqual(mirror_action(Action.SHOT), Action.SHOT)

    def test_mirror_state_twice_is_identity(self):
        state = reset(ScenarioConfig(kickoff_holder=1), seed=4)
        state = step(state, [Action.RIGHT] * 4, [Action.TOP] * 4).next_state
        self.assertEqual(mirror_state(mirror_state(state)).to_dict(), state.to_dict())

    def test_stepping_commutes_with_mirroring(self):
        scenario = ScenarioConfig(kickoff_holder=1, terminate_on_score_or_fault=False)
        for seed in (2, 5, 11):
            rng = np.random.default_rng(seed)
            state = reset(scenario, seed=seed)
            for _ in range(150):
                home = [Action(int(a)) for a in rng.integers(0, NUM_ACTIONS, 4)]
                away = [Action(int(a)) for a in rng.integers(0, NUM_ACTIONS, 4)]
                result = step(state, home, away)
                mirrored = step(
                    mirror_state(state),
                    [mirror_action(a) for a in away],
                    [mirror_action(a) for a in home],
                )
                expected = mirror_state(result.next_state)
                np.testing.assert_allclose(kinematics(mirrored.next_state), kinematics(expected), atol=1e-9)
                self.assertEqual(mirrored.next_state.ball.controller, expected.ball.controller)
                self.assertEqual(mirrored.next_state.score, expected.score)
                self.assertEqual(mirrored.scoring_reward_home, -result.scoring_reward_home)
                self.assertEqual(
                    sorted((e.kind, e.team.other, e.good) for e in result.events),
                    sorted((e.kind, e.team, e.good) for e in mirrored.events),
                )
                state = result.next_state

    def assert_slides_mirror(self, scenario):
        slides = [Action.IDLE, Action.SLIDE]
        state = reset(scenario, seed=0)
        result = step(state, slides, slides)
        mirrored = step(mirror_state(state), slides, slides)
        self.assertEqual(mirrored.next_state.ball.controller, mirror_state(result.next_state).ball.controller)
        return result.next_state.ball.controller

    def test_closest_simultaneous_slider_wins_the_ball(self):
        scenario = ScenarioConfig(
            players_per_team=2,
            home_positions=((-0.8, 0.0), (0.27, 0.0)),
            away_positions=((0.8, 0.0), (0.33, 0.0)),
            ball_position=(0.3, 0.0),
        )
        self.assertIsNotNone(self.assert_slides_mirror(scenario))

        home_closer = ScenarioConfig(
            players_per_team=2,
            home_positions=((-0.8, 0.0), (0.28, 0.0)),
            away_positions=((0.8, 0.0), (0.33, 0.0)),
            ball_position=(0.3, 0.0),
        )
        self.assertEqual(self.assert_slides_mirror(home_closer), (Team.HOME, 1))
        away_closer = ScenarioConfig(
            players_per_team=2,
            home_positions=((-0.8, 0.0), (0.27, 0.0)),
            away_positions=((0.8, 0.0), (0.32, 0.0)),
            ball_position=(0.3, 0.0),
        )
        self.assertEqual(self.assert_slides_mirror(away_closer), (Team.AWAY, 1))

    def test_slides_tied_across_teams_leave_the_ball_loose(self):
        scenario = ScenarioConfig(
            players_per_team=2,
            home_positions=((-0.8, 0.0), (0.46875, 0.0)),
            away_positions=((0.8, 0.0), (0.53125, 0.0)),
            ball_position=(0.5, 0.0),
        )
        self.assertIsNone(self.assert_slides_mirror(scenario))


class HeuristicTests(SimpleTestCase):

    def test_direction_octants(self):
        self.assertEqual(direction_action(1.0, 0.0), Action.RIGHT)
        self.assertEqual(direction_action(0.0, 1.0), Action.BOTTOM)
        self.assertEqual(direction_action(-1.0, -1.0), Action.TOP_LEFT)
        self.assertEqual(direction_action(0.0, 0.0), Action.IDLE)

    def test_unmarked_carrier_in_box_shoots(self):
        state = reset(attacking_scenario(), seed=0)
        rng = np.random.default_rng(0)
        self.assertEqual(heuristic_action(state, Team.HOME, 0, 1.0, rng), Action.SHOT)

    def test_away_carrier_attacks_left(self):
        state = mirror_state(reset(attacking_scenario(), seed=0))
        rng = np.random.default_rng(0)
        self.assertEqual(heuristic_action(state, Team.AWAY, 0, 1.0, rng), Action.SHOT)

    def test_nearest_player_chases_loose_ball(self):
        home = ((0.1, 0.0), (-0.3, 0.2), (-0.3, -0.2), (-0.8, 0.0))
        scenario = ScenarioConfig(home_positions=home, away_positions=ATTACK_AWAY, ball_position=(0.3, 0.0))
        state = reset(scenario, seed=0)
        rng = np.random.default_rng(0)
        self.assertEqual(heuristic_action(state, Team.HOME, 0, 1.0, rng), Action.RIGHT)

    def test_reaction_frequency_follows_strength(self):
        home = ((0.1, 0.0), (-0.3, 0.2), (-0.3, -0.2), (-0.8, 0.0))
        scenario = ScenarioConfig(home_positions=home, away_positions=ATTACK_AWAY, ball_position=(0.3, 0.0))
        state = reset(scenario, seed=0)
        rng = np.random.default_rng(12345)
        trials = 10_000
        fresh = sum(heuristic_action(state, Team.HOME, 0, 0.05, rng) != Action.IDLE for _ in range(trials))
        sigma = np.sqrt(0.05 * 0.95 / trials)
        self.assertLess(abs(fresh / trials - 0.05), 3 * sigma)


class ReplayTests(SimpleTestCase):

    def test_replay_lines(self):
        state = reset(attacking_scenario(), seed=11)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'replay.jsonl'
            with ReplayWriter(path) as writer:
                result = step(state, [Action.SHOT] + IDLE4[1:], IDLE4)
                writer.record(state, [Action.SHOT] + IDLE4[1:], IDLE4, result)
            lines = read_replay(path)
        self.assertEqual(len(lines), 1)
        self.assertEqual(lines[0]['digest'], state_digest(state))
        self.assertEqual(lines[0]['home_actions'], [12, 0, 0, 0])
        self.assertEqual(lines[0]['cause'], 'goal')
        self.assertIn({'kind': 'goal', 'team': 'home'}, lines[0]['events'])
