import json

from django.core.exceptions import ImproperlyConfigured
from django.core.management.base import BaseCommand, CommandError

from driver.loader import load_run_config
from driver.trainer import CONFIG_ECHO, Trainer, run_directory
from nn.checkpoints import CheckpointError
from rollout.exceptions import RunError


class Command(BaseCommand):
    help = 'Train a policy with curriculum and self-play until the env-step budget is spent'

    def add_arguments(self, parser):
        parser.add_argument('--config', default='desk', help='Run config TOML file or profile name')
        parser.add_argument('--resume', metavar='RUN_DIR', help='Continue a run from its latest checkpoint')

    def handle(self, *args, **kwargs):
        try:
            if kwargs['resume']:
                trainer = Trainer.resume(kwargs['resume'])
            else:
                cfg = load_run_config(kwargs['config'])
                run_dir = run_directory(cfg)
                if (run_dir / CONFIG_ECHO).exists():
                    raise CommandError(f'{run_dir} already holds a run; pass --resume {run_dir} to continue it')
                trainer = Trainer(cfg, run_dir)
        except (ImproperlyConfigured, CheckpointError, RunError) as e:
            raise CommandError(str(e))

        cfg = trainer.cfg
        self.stdout.write(
            f'Run {cfg.name}: {cfg.variant} variant, {cfg.players_per_team}v{cfg.players_per_team}, '
            f'{cfg.rollouts} rollouts of {cfg.workers.steps_per_rollout} steps'
        )
        try:
            record = trainer.train()
        except RunError as e:
            raise CommandError(f'Run aborted at rollout {trainer.rollout_index}: {e}')
        except OSError as e:
            raise CommandError(f'Cannot write to {trainer.run_dir}: {e}')

        if record is None:
            self.stdout.write(self.style.WARNING('No rollouts to run'))
        else:
            self.stdout.write(json.dumps(record['league'], sort_keys=True))
        self.stdout.write(self.style.SUCCESS(
            f'Finished {trainer.rollout_index} rollouts ({trainer.env_steps} env steps) in {trainer.league.phase.label}'
        ))
