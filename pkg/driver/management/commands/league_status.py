import json
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from league.pool import PolicyPool
from league.progress import PROGRESS_FILE, progress_summary
from rollout.exceptions import RunError


class Command(BaseCommand):
    help = 'Show the league progress of a run: phases passed, steps and time per phase, and the pool'

    def add_arguments(self, parser):
        parser.add_argument('--run', required=True, help='Run directory')
        parser.add_argument('--json', action='store_true', help='Print the summary as JSON')

    def handle(self, *args, **kwargs):
        run_dir = Path(kwargs['run'])
        if not (run_dir / PROGRESS_FILE).is_file():
            raise CommandError(f'{run_dir} has no {PROGRESS_FILE}')
        try:
            pool = PolicyPool(run_dir / 'pool')
        except RunError as e:
            raise CommandError(str(e))
        summary = progress_summary(run_dir)

        if kwargs['json']:
            summary['pool'] = [
                {'key': e.key, 'label': e.label, 'created_step': e.created_step, 'games': e.games, 'wins': e.wins}
                for e in pool
            ]
            self.stdout.write(json.dumps(summary, indent=2, sort_keys=True))
            return

        self.stdout.write(
            f'Curriculum scenarios passed: {summary["curriculum_passed"]}; '
            f'Challenge passes: {summary["challenge_passes"]}; Generalize passes: {summary["generalize_passes"]}'
        )
        for phase, steps in summary['env_steps'].items():
            self.stdout.write(f'  {phase:<16} {steps:>12} steps {summary["elapsed_seconds"][phase]:>12.1f} s')
        for entry in pool:
            rate = '-' if entry.win_rate is None else f'{entry.win_rate:.3f}'
            self.stdout.write(f'  {entry.key} {entry.label:<16} step {entry.created_step:>12} win rate vs {rate}')
        self.stdout.write(self.style.SUCCESS(
            f'{summary["total_env_steps"]} env steps, {summary["total_elapsed_seconds"]:.1f} s, {len(pool)} pool entries'
        ))
