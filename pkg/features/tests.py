import json
import tempfile
from pathlib import Path

import numpy as np
from django.core.exceptions import ImproperlyConfigured
from django.test import SimpleTestCase

from env.models import Action, NUM_ACTIONS, Team
from env.simulator import reset, step
from env.state import ScenarioConfig, mirror_state

from .encoders import actor_observation, critic_observation, positional_encoding, team_observations
from .layout import actor_dim, block, critic_dim, critic_layout, feature_layout, write_layout


def played_state(seed=0, steps=40, players=4):
    scenario = ScenarioConfig(players_per_team=players, kickoff_holder=0, terminate_on_score_or_fault=False)
    state = reset(scenario, seed=seed)
    rng = np.random.default_rng(seed)
    for _ in range(steps):
        state = step(
            state,
            rng.integers(0, NUM_ACTIONS, players).tolist(),
            rng.integers(0, NUM_ACTIONS, players).tolist(),
        ).next_state
    return state


class PositionalEncodingTests(SimpleTestCase):

    def test_id_zero(self):
        np.testing.assert_array_equal(positional_encoding(0, 4), [0.0, 1.0, 0.0, 1.0])

    def test_id_one(self):
        np.testing.assert_allclose(positional_encoding(1, 4), [0.84147, 0.54030, 0.01000, 0.99995], atol=1e-5)

    def test_distinct_ids(self):
        encodings = np.stack([positional_encoding(p, 16) for p in range(1000)])
        self.assertTrue(np.all(np.abs(encodings) <= 1.0))
        for p in range(1, 1000):
            self.assertGreater(np.linalg.norm(encodings[p] - encodings[p - 1]), 1e-6)

    def test_odd_width_rejected(self):
        with self.assertRaises(ImproperlyConfigured):
            positional_encoding(1, 5)

    def test_returned_vector_is_a_copy(self):
        pe = positional_encoding(3, 8)
        pe[:] = 0.0
        self.assertNotEqual(positional_encoding(3, 8)[1], 0.0)


class ActorObservationTests(SimpleTestCase):

    def test_dimension_formula(self):
        for n in (1, 4, 11):
            self.assertEqual(actor_dim(n), 8 * n + 31)
            state = played_state(players=n, steps=5)
            self.assertEqual(actor_observation(state, Team.HOME, 0).shape, (8 * n + 31,))
            self.assertEqual(actor_observation(state, Team.AWAY, n - 1).shape, (8 * n + 31,))

    def test_mirrored_away_matches_home(self):
        state = played_state(seed=3)
        mirrored = mirror_state(state)
        for i in range(4):
            np.testing.assert_array_equal(
                actor_observation(mirrored, Team.AWAY, i),
                actor_observation(state, Team.HOME, i),
            )

    def test_agents_differ_in_id_block(self):
        state = reset(ScenarioConfig(), seed=0)
        pe = block(feature_layout(4), 'player_id')
        first = actor_observation(state, Team.HOME, 1)
        second = actor_observation(state, Team.HOME, 2)
        self.assertFalse(np.array_equal(first[pe], second[pe]))

    def test_index_out_of_range(self):
        with self.assertRaises(ValueError):
            actor_observation(reset(ScenarioConfig(), seed=0), Team.HOME, 4)

    def test_ball_control_flags(self):
        state = reset(ScenarioConfig(kickoff_holder=2), seed=0)
        control = block(feature_layout(4), 'ball.controlled_by')
        np.testing.assert_array_equal(actor_observation(state, Team.HOME, 2)[control], [1, 0, 0, 0])
        np.testing.assert_array_equal(actor_observation(state, Team.HOME, 0)[control], [0, 1, 0, 0])
        np.testing.assert_array_equal(actor_observation(state, Team.AWAY, 0)[control], [0, 0, 1, 0])

    def test_team_matrix_rows(self):
        state = played_state(seed=5)
        matrix = team_observations(state, Team.AWAY)
        self.assertEqual(matrix.shape, (4, actor_dim(4)))
        np.testing.assert_array_equal(matrix[2], actor_observation(state, Team.AWAY, 2))

    def test_finite_over_random_play(self):
        state = played_state(seed=8, steps=300)
        for team in (Team.HOME, Team.AWAY):
            self.assertTrue(np.all(np.isfinite(team_observations(state, team))))
        self.assertTrue(np.all(np.isfinite(critic_observation(state))))


class CriticObservationTests(SimpleTestCase):

    def test_dimension_formula(self):
        for n in (1, 4, 11):
            self.assertEqual(critic_dim(n), 10 * n + 10)
        self.assertEqual(critic_observation(reset(ScenarioConfig(), seed=0)).shape, (50,))

    def test_kickoff_ball_block_is_zero(self):
        vec = critic_observation(reset(ScenarioConfig(), seed=0))
        np.testing.assert_array_equal(vec[block(critic_layout(4), 'ball')], np.zeros(5))

    def test_score_only_changes_score_entries(self):
        state = reset(ScenarioConfig(), seed=0)
        scored = state.copy()
        scored.score = (2, 1)
        before, after = critic_observation(state), critic_observation(scored)
        changed = np.flatnonzero(before != after)
        score = block(critic_layout(4), 'score')
        self.assertTrue(set(changed) <= set(range(score.start, score.stop)))
        self.assertEqual(len(changed), 2)

    def test_movement_changes_player_block(self):
        state = reset(ScenarioConfig(), seed=0)
        moved = step(state, [Action.RIGHT] + [Action.IDLE] * 3, [Action.IDLE] * 4).next_state
        vec = critic_observation(moved)
        home0 = block(critic_layout(4), 'home0')
        self.assertGreater(vec[home0][0], critic_observation(state)[home0][0])


class LayoutTests(SimpleTestCase):

    def test_layout_blocks_are_contiguous(self):
        table = feature_layout(4)
        for prev, entry in zip(table, table[1:]):
            self.assertEqual(prev['offset'] + prev['width'], entry['offset'])

    def test_write_layout(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = write_layout(tmp, 4)
            data = json.loads(Path(path).read_text())
        self.assertEqual(data['actor'][-1]['name'], 'player_id')
        self.assertEqual(data['actor'][-1]['width'], 16)
        self.assertEqual(data['critic'][-1]['offset'], 49)
