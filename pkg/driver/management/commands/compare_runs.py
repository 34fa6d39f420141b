import json
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from league.progress import PROGRESS_FILE, relative_progress


class Command(BaseCommand):
    help = 'Compare the mean number of curriculum scenarios and self-play phases passed by two groups of runs'

    def add_arguments(self, parser):
        parser.add_argument('--base', nargs='+', required=True, help='Run directories of the reference variant')
        parser.add_argument('--other', nargs='+', required=True, help='Run directories of the compared variant')

    def handle(self, *args, **kwargs):
        for run_dir in kwargs['base'] + kwargs['other']:
            if not (Path(run_dir) / PROGRESS_FILE).is_file():
                raise CommandError(f'{run_dir} has no {PROGRESS_FILE}')
        result = relative_progress(kwargs['base'], kwargs['other'])
        self.stdout.write(json.dumps(result, indent=2, sort_keys=True))
        if result['ratio'] is None:
            self.stdout.write(self.style.WARNING('Reference runs passed no stage; no ratio'))
        else:
            self.stdout.write(self.style.SUCCESS(f'Relative progress {result["ratio"]:.3f}'))
