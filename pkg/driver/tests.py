import json
import tempfile
from dataclasses import asdict
from io import StringIO
from pathlib import Path

from django.core.exceptions import ImproperlyConfigured
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings

from league.progress import PROGRESS_FILE
from nn.checkpoints import CheckpointError, load_checkpoint
from rewards.models import RewardVariant
from rollout.exceptions import RunError
from rollout.service import RolloutService
from rollout.worker import run_worker

from .loader import load_run_config
from .serializers import build_run_config
from .trainer import CHECKPOINT, CONFIG_ECHO, MANIFEST, METRICS, Trainer

STEPS_PER_ROLLOUT = 16

# Every curriculum scenario and self-play phase is passed after one rollout
ALWAYS_ADVANCE = {
    'window_capacity': 1,
    'first_threshold': 0.0,
    'final_threshold': 0.0,
    'ramp_scenarios': 2,
    'curriculum_scenarios': 2,
    'selfplay_threshold': 0.0,
    'curriculum_step_limit': 5,
    'selfplay_step_limit': 6,
}

# Matches outlast a rollout and the phase never changes
NEVER_ADVANCE = {
    'window_capacity': 100,
    'first_threshold': 1.0,
    'final_threshold': 1.0,
    'curriculum_step_limit': 20,
}


class StepClock:
    """Deterministic clock: every reading is one second after the previous"""

    def __init__(self):
        self.now = 0.0

    def __call__(self):
        self.now += 1.0
        return self.now


def tiny_config(output_dir, rollouts=4, variant=RewardVariant.BASE, league=None, **train):
    return build_run_config({
        'run': {
            'name': 'tiny',
            'seed': 3,
            'env_step_budget': rollouts * STEPS_PER_ROLLOUT,
            'players_per_team': 2,
            'variant': str(variant),
            'output_dir': str(output_dir),
            'checkpoint_every': 2,
        },
        'workers': {'num_workers': 2, 'steps_per_worker': 8},
        'train': {'minibatch_size': 8, 'epochs_per_rollout': 1, 'warmup_rollouts': 0, 'pe_dim': 4, **train},
        'league': league if league is not None else ALWAYS_ADVANCE,
    })


def metrics(run_dir):
    lines = (Path(run_dir) / METRICS).read_text(encoding='utf-8').splitlines()
    return [json.loads(line) for line in lines if line]


def serial_service(runner=run_worker):
    return RolloutService(backend='serial', runner=runner)


class RunConfigTests(SimpleTestCase):

    def test_defaults(self):
        cfg = build_run_config({})
        self.assertEqual(cfg.players_per_team, 4)
        self.assertEqual(cfg.variant, RewardVariant.BASE)
        self.assertEqual(cfg.train.gamma, 0.99)
        self.assertEqual(cfg.workers.steps_per_rollout, 20000)

    def test_config_echo_rebuilds_the_same_config(self):
        cfg = tiny_config('/tmp/runs', variant=RewardVariant.RND)
        self.assertEqual(build_run_config(json.loads(json.dumps(cfg.to_dict()))), cfg)

    def test_invalid_tables(self):
        with self.assertRaises(ImproperlyConfigured):
            build_run_config({'run': {'variant': 'curiosity'}})
        with self.assertRaises(ImproperlyConfigured):
            build_run_config({'train': {'pe_dim': 3}})
        with self.assertRaises(ImproperlyConfigured):
            build_run_config({'league': {'first_threshold': 0.9, 'final_threshold': 0.5}})

    def test_desk_profile(self):
        cfg = load_run_config('desk', overrides=False)
        self.assertEqual(cfg.players_per_team, 4)
        self.assertEqual((cfg.workers.num_workers, cfg.workers.steps_per_worker), (8, 500))
        self.assertEqual(cfg.env_step_budget, 2_000_000)

    def test_full_profile(self):
        cfg = load_run_config('full', overrides=False)
        self.assertEqual(cfg.players_per_team, 11)
        self.assertEqual(cfg.workers.steps_per_rollout, 20000)
        self.assertEqual(cfg.env_step_budget, 170_000_000)
        self.assertEqual(cfg.train.warmup_rollouts, 700)
        self.assertEqual(cfg.rollouts, 8500)

    @override_settings(RUN_SEED=42, RUN_OUTPUT_DIR='/tmp/elsewhere')
    def test_environment_overrides(self):
        cfg = load_run_config('desk')
        self.assertEqual(cfg.seed, 42)
        self.assertEqual(cfg.output_dir, '/tmp/elsewhere')

    def test_unknown_profile(self):
        with self.assertRaises(ImproperlyConfigured):
            load_run_config('no-such-profile')


class TrainerTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)

    def train(self, cfg, run_dir, service=None):
        trainer = Trainer(cfg, run_dir, clock=StepClock(), service=service or serial_service())
        trainer.train()
        return trainer

    def test_zero_budget_writes_only_the_echo(self):
        run_dir = self.root / 'zero'
        trainer = self.train(tiny_config(self.root, rollouts=0), run_dir)
        self.assertTrue((run_dir / CONFIG_ECHO).is_file())
        self.assertEqual((run_dir / METRICS).read_text(), '')
        self.assertFalse((run_dir / CHECKPOINT).exists())
        self.assertFalse((run_dir / PROGRESS_FILE).exists())
        self.assertEqual(trainer.rollout_index, 0)

    def test_one_rollout(self):
        run_dir = self.root / 'one'
        trainer = self.train(tiny_config(self.root, rollouts=1), run_dir)
        records = metrics(run_dir)
        self.assertEqual(len(records), 1)
        self.assertEqual(records[0]['env_steps'], STEPS_PER_ROLLOUT)
        self.assertLess(records[0]['policy_version'], trainer.learner.actor.version)
        self.assertTrue((run_dir / CHECKPOINT).is_file())

    def test_budget_accounting(self):
        run_dir = self.root / 'budget'
        cfg = tiny_config(self.root, rollouts=3)
        self.train(cfg, run_dir)
        records = metrics(run_dir)
        self.assertEqual([r['rollout_index'] for r in records], [0, 1, 2])
        self.assertEqual(records[-1]['env_steps'], 3 * cfg.workers.num_workers * cfg.workers.steps_per_worker)
        self.assertEqual(len(records), cfg.rollouts)

    def test_warmup_keeps_the_bonus_out(self):
        run_dir = self.root / 'warmup'
        self.train(tiny_config(self.root, rollouts=2, variant=RewardVariant.SSIR, warmup_rollouts=5), run_dir)
        for record in metrics(run_dir):
            self.assertFalse(record['bonus_active'])
            self.assertEqual(record['intrinsic_mean'], 0.0)
            self.assertIsNotNone(record['bonus_loss'])

    def test_bonus_joins_after_warmup(self):
        run_dir = self.root / 'active'
        self.train(tiny_config(self.root, rollouts=2, variant=RewardVariant.SSIR, warmup_rollouts=1), run_dir)
        first, second = metrics(run_dir)
        self.assertFalse(first['bonus_active'])
        self.assertTrue(second['bonus_active'])
        self.assertNotEqual(second['intrinsic_mean'], 0.0)

    def test_base_run_builds_no_bonus_networks(self):
        run_dir = self.root / 'base'
        trainer = self.train(tiny_config(self.root, rollouts=1), run_dir)
        manifest = json.loads((run_dir / MANIFEST).read_text())
        self.assertEqual(manifest['networks'], ['actor', 'critic'])
        self.assertIsNone(trainer.ssir)
        self.assertIsNone(trainer.rnd)
        self.assertEqual(sorted(load_checkpoint(run_dir / CHECKPOINT).networks), ['actor', 'critic'])
        self.assertIsNone(metrics(run_dir)[0]['bonus_loss'])

    def test_rnd_run(self):
        run_dir = self.root / 'rnd'
        self.train(tiny_config(self.root, rollouts=2, variant=RewardVariant.RND), run_dir)
        manifest = json.loads((run_dir / MANIFEST).read_text())
        self.assertEqual(manifest['networks'], ['actor', 'critic', 'rnd_target', 'rnd_predictor'])
        record = metrics(run_dir)[-1]
        self.assertIn('bonus_std', record)
        self.assertGreater(record['intrinsic_mean'], 0.0)

    def test_league_advances_through_self_play(self):
        run_dir = self.root / 'league'
        with self.assertLogs('driver.signals', 'INFO') as logs:
            trainer = self.train(tiny_config(self.root, rollouts=4), run_dir)
        self.assertEqual(trainer.league.state.curriculum_passed, 2)
        self.assertEqual(trainer.league.state.challenge_passes, 1)
        self.assertEqual(trainer.league.state.generalize_passes, 1)
        self.assertEqual(len(trainer.league.pool), 4)
        self.assertEqual(len(logs.records), 4)
        opponents = [r['opponent'] for r in metrics(run_dir)]
        self.assertEqual(opponents[:2], ['heuristic', 'policy-000001'])
        self.assertTrue(opponents[2].startswith('policy-'))

    def test_separate_matches_feed_the_window(self):
        run_dir = self.root / 'window'
        league = {**NEVER_ADVANCE, 'win_rate_matches': 3}
        trainer = self.train(tiny_config(self.root, rollouts=2, league=league), run_dir)
        records = metrics(run_dir)
        self.assertEqual([r['window_matches'] for r in records], [3, 3])
        self.assertEqual(trainer.league.state.episodes, 6)
        self.assertEqual(len(trainer.league.state.window), 6)
        self.assertIsNotNone(records[0]['league']['rollout_win_rate'])

    def test_separate_matches_are_off_by_default(self):
        run_dir = self.root / 'no-window'
        self.train(tiny_config(self.root, rollouts=1, league=NEVER_ADVANCE), run_dir)
        self.assertIsNone(metrics(run_dir)[0]['window_matches'])

    def test_repeated_runs_are_identical(self):
        contents = []
        for name in ('first', 'second'):
            run_dir = self.root / name
            self.train(tiny_config(self.root, rollouts=3, variant=RewardVariant.RND), run_dir)
            contents.append([
                (run_dir / METRICS).read_bytes(),
                (run_dir / PROGRESS_FILE).read_bytes(),
                (run_dir / CHECKPOINT).read_bytes(),
            ])
        self.assertEqual(contents[0], contents[1])

    def assert_resume_equivalent(self, variant, league):
        cfg = tiny_config(self.root, rollouts=4, variant=variant, league=league)
        straight = self.train(cfg, self.root / 'straight')

        run_dir = self.root / 'resumed'
        service = serial_service()
        interrupted = Trainer(cfg, run_dir, clock=StepClock(), service=service)
        interrupted.prepare()
        interrupted.run_rollout(service)
        interrupted.run_rollout(service)
        interrupted.save_checkpoint()
        # Work done after the checkpoint is lost in the crash
        interrupted.run_rollout(service)

        resumed = Trainer.resume(run_dir, clock=StepClock(), service=serial_service())
        self.assertEqual(resumed.rollout_index, 2)
        resumed.train()

        self.assertTrue(resumed.learner.actor.identical(straight.learner.actor))
        self.assertTrue(resumed.learner.critic.identical(straight.learner.critic))
        self.assertEqual(resumed.league.state_dict(), straight.league.state_dict())
        self.assertEqual([asdict(e) for e in resumed.league.pool], [asdict(e) for e in straight.league.pool])
        for name in (METRICS, PROGRESS_FILE):
            self.assertEqual((run_dir / name).read_bytes(), (self.root / 'straight' / name).read_bytes(), name)

    def test_resume_across_phase_changes(self):
        self.assert_resume_equivalent(RewardVariant.SSIR, ALWAYS_ADVANCE)

    def test_resume_with_matches_in_progress(self):
        self.assert_resume_equivalent(RewardVariant.RND, NEVER_ADVANCE)

    def test_corrupt_checkpoint(self):
        run_dir = self.root / 'corrupt'
        self.train(tiny_config(self.root, rollouts=1), run_dir)
        (run_dir / CHECKPOINT).write_bytes(b'not a checkpoint')
        with self.assertRaises(CheckpointError):
            Trainer.resume(run_dir)

    def test_checkpoint_of_another_variant(self):
        run_dir = self.root / 'mismatch'
        self.train(tiny_config(self.root, rollouts=1), run_dir)
        echo = json.loads((run_dir / CONFIG_ECHO).read_text())
        echo['run']['variant'] = 'ssir'
        (run_dir / CONFIG_ECHO).write_text(json.dumps(echo))
        with self.assertRaises(CheckpointError):
            Trainer.resume(run_dir)

    def test_worker_failure_keeps_the_last_state(self):
        def failing_after_first(task):
            if task.rollout_index >= 1:
                raise OSError('worker lost')
            return run_worker(task)

        run_dir = self.root / 'failing'
        trainer = Trainer(tiny_config(self.root, rollouts=3), run_dir, clock=StepClock(),
                          service=serial_service(failing_after_first))
        with self.assertRaises(RunError):
            trainer.train()
        checkpoint = load_checkpoint(run_dir / CHECKPOINT)
        self.assertEqual(checkpoint.metadata['rollout_index'], 1)
        self.assertEqual(len(metrics(run_dir)), 1)


@override_settings(ROLLOUT_BACKEND='serial')
class CommandTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)

    def write_config(self, rollouts):
        cfg = tiny_config(self.root / 'runs', rollouts=rollouts)
        lines = []
        for table, values in cfg.to_dict().items():
            lines.append(f'[{table}]')
            lines += [f'{key} = {json.dumps(value)}' for key, value in values.items()]
        path = self.root / 'tiny.toml'
        path.write_text('\n'.join(lines) + '\n')
        return path

    def call(self, *args, **kwargs):
        out = StringIO()
        call_command(*args, stdout=out, **kwargs)
        return out.getvalue()

    def test_train_status_and_evaluate(self):
        path = self.write_config(rollouts=2)
        output = self.call('train', config=str(path))
        self.assertIn('Finished 2 rollouts (32 env steps)', output)
        run_dir = self.root / 'runs' / 'tiny'

        status = json.loads(self.call('league_status', run=str(run_dir), json=True))
        self.assertEqual(status['curriculum_passed'], 2)
        self.assertEqual(status['total_env_steps'], 32)
        self.assertEqual(len(status['pool']), 2)

        reports = self.root / 'reports'
        output = self.call(
            'evaluate', checkpoint=str(run_dir / CHECKPOINT), matches=2, seeds='0,1', step_limit=20,
            output=str(reports),
        )
        self.assertIn('Wrote 2 report rows', output)
        self.assertTrue((reports / 'eval_summary.csv').is_file())

        compare = self.call('compare_runs', base=[str(run_dir)], other=[str(run_dir)])
        self.assertIn('Relative progress 1.000', compare)

    def test_evaluate_a_pool_entry(self):
        self.call('train', config=str(self.write_config(rollouts=1)))
        entry = self.root / 'runs' / 'tiny' / 'pool' / 'policy-000001.npz'
        output = self.call('evaluate', checkpoint=str(entry), matches=1, seeds='3', step_limit=10)
        self.assertIn('seed group 3', output)

    def test_zero_budget(self):
        output = self.call('train', config=str(self.write_config(rollouts=0)))
        self.assertIn('No rollouts to run', output)

    def test_existing_run_needs_resume(self):
        path = self.write_config(rollouts=1)
        self.call('train', config=str(path))
        with self.assertRaises(CommandError):
            self.call('train', config=str(path))
        output = self.call('train', resume=str(self.root / 'runs' / 'tiny'))
        self.assertIn('No rollouts to run', output)

    def test_startup_errors(self):
        with self.assertRaises(CommandError):
            self.call('evaluate', checkpoint=str(self.root / 'missing.npz'))
        with self.assertRaises(CommandError):
            self.call('train', resume=str(self.root / 'nothing-here'))
        with self.assertRaises(CommandError):
            self.call('train', config='no-such-profile')
        with self.assertRaises(CommandError):
            self.call('league_status', run=str(self.root))
