import csv
from pathlib import Path

PROGRESS_FILE = 'league_progress.csv'
COLUMNS = ('phase', 'rollout_index', 'env_steps', 'elapsed_seconds', 'win_rate', 'threshold', 'advanced')


class ProgressLog:
    """
    One row per rollout; env_steps and elapsed_seconds are run totals
    """

    def __init__(self, run_dir):
        self.path = Path(run_dir) / PROGRESS_FILE

    def append(self, phase, rollout_index, env_steps, elapsed_seconds, win_rate, threshold, advanced):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        new = not self.path.exists()
        with self.path.open('a', newline='', encoding='utf-8') as fh:
            writer = csv.writer(fh)
            if new:
                writer.writerow(COLUMNS)
            writer.writerow([
                phase, rollout_index, env_steps, f'{elapsed_seconds:.3f}',
                f'{win_rate:.4f}', f'{threshold:.6f}', int(bool(advanced)),
            ])

    def rows(self):
        if not self.path.exists():
            return []
        with self.path.open(newline='', encoding='utf-8') as fh:
            return list(csv.DictReader(fh))

    def truncate_after(self, rollout_index):
        """Drop rows written after rollout_index (a resumed run replays them)"""
        rows = [r for r in self.rows() if int(r['rollout_index']) <= rollout_index]
        if not self.path.exists():
            return
        with self.path.open('w', newline='', encoding='utf-8') as fh:
            writer = csv.DictWriter(fh, fieldnames=COLUMNS)
            writer.writeheader()
            writer.writerows(rows)


def progress_summary(run_dir):
    """
    Stage table of one run: phases passed, plus env steps and elapsed
    seconds spent per phase label.
    """
    rows = ProgressLog(run_dir).rows()
    summary = {
        'curriculum_passed': 0,
        'challenge_passes': 0,
        'generalize_passes': 0,
        'env_steps': {},
        'elapsed_seconds': {},
        'total_env_steps': 0,
        'total_elapsed_seconds': 0.0,
    }
    last_steps, last_elapsed = 0, 0.0
    for row in rows:
        phase = row['phase']
        steps, elapsed = int(row['env_steps']), float(row['elapsed_seconds'])
        summary['env_steps'][phase] = summary['env_steps'].get(phase, 0) + steps - last_steps
        summary['elapsed_seconds'][phase] = summary['elapsed_seconds'].get(phase, 0.0) + elapsed - last_elapsed
        last_steps, last_elapsed = steps, elapsed
        if row['advanced'] == '1':
            if phase.startswith('curriculum-'):
                summary['curriculum_passed'] += 1
            elif phase == 'challenge':
                summary['challenge_passes'] += 1
            else:
                summary['generalize_passes'] += 1
    summary['total_env_steps'] = last_steps
    summary['total_elapsed_seconds'] = last_elapsed
    return summary


def stages_passed(summary):
    return summary['curriculum_passed'] + summary['challenge_passes'] + summary['generalize_passes']


def relative_progress(base_runs, other_runs):
    """
    Mean number of stages passed by two groups of runs (for instance the
    same seeds with and without an intrinsic bonus) and their ratio.
    """
    if not base_runs or not other_runs:
        raise ValueError('Both run groups need at least one run')
    base = sum(stages_passed(progress_summary(r)) for r in base_runs) / len(base_runs)
    other = sum(stages_passed(progress_summary(r)) for r in other_runs) / len(other_runs)
    return {
        'base_mean_stages': base,
        'other_mean_stages': other,
        'ratio': other / base if base else None,
    }
