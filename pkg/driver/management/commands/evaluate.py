from pathlib import Path

from django.core.exceptions import ImproperlyConfigured
from django.core.management.base import BaseCommand, CommandError

from evaluation.config import EvalConfig
from evaluation.serializers import build_eval_config
from evaluation.service import AGGREGATE_CSV, EvaluationService
from nn.checkpoints import CheckpointError, load_checkpoint


def seed_list(value):
    try:
        return tuple(int(seed) for seed in value.split(',') if seed.strip())
    except ValueError:
        raise CommandError(f'Seeds must be a comma separated list of integers, got {value!r}')


class Command(BaseCommand):
    help = 'Play evaluation matches of a checkpointed policy against the scripted AI'

    def add_arguments(self, parser):
        parser.add_argument('--checkpoint', required=True, help='Run checkpoint or pool entry (.npz)')
        parser.add_argument('--matches', type=int, default=EvalConfig.matches)
        parser.add_argument('--seeds', default=','.join(str(s) for s in EvalConfig.group_seeds))
        parser.add_argument('--strength', type=float, default=EvalConfig.opponent_strength)
        parser.add_argument('--step-limit', type=int, default=EvalConfig.match_step_limit)
        parser.add_argument('--players', type=int, help='Players per team when the checkpoint does not record it')
        parser.add_argument('--output', help='Report directory (default: next to the checkpoint)')

    def handle(self, *args, **kwargs):
        path = Path(kwargs['checkpoint'])
        try:
            checkpoint = load_checkpoint(path)
            spec, actor = checkpoint.spec('actor'), checkpoint.params('actor')
        except KeyError:
            raise CommandError(f'{path} holds no actor network')
        except CheckpointError as e:
            raise CommandError(str(e))

        players = kwargs['players'] or checkpoint.metadata.get('players_per_team')
        pe_dim = checkpoint.metadata.get('pe_dim')
        if not players or pe_dim is None:
            raise CommandError(f'{path} does not record its team size; pass --players')
        try:
            cfg = build_eval_config({
                'matches': kwargs['matches'],
                'group_seeds': list(seed_list(kwargs['seeds'])),
                'opponent_strength': kwargs['strength'],
                'match_step_limit': kwargs['step_limit'],
            })
        except ImproperlyConfigured as e:
            raise CommandError(str(e))

        out_dir = Path(kwargs['output']) if kwargs['output'] else path.parent / f'eval_{path.stem}'
        try:
            reports = EvaluationService().evaluate(spec, actor, players, out_dir, cfg, pe_dim=pe_dim)
        except (ImproperlyConfigured, ValueError) as e:
            raise CommandError(str(e))
        except OSError as e:
            raise CommandError(f'Cannot write reports to {out_dir}: {e}')

        for report in reports:
            goals, _ = report.metrics['goals_for']
            passes, _ = report.metrics['good_passes']
            self.stdout.write(f'seed group {report.group_seed}: goals {goals:.2f}, good passes {passes:.2f} (IQM)')
        self.stdout.write(self.style.SUCCESS(f'Wrote {len(reports)} report rows to {out_dir / AGGREGATE_CSV}'))
