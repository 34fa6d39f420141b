import csv
from pathlib import Path

from .stats import STAT_FIELDS

MATCH_COLUMNS = ('group_seed', 'match', 'seed', 'outcome') + STAT_FIELDS
AGGREGATE_COLUMNS = ('group_seed', 'matches', 'opponent') + tuple(
    f'{name}_{suffix}' for name in STAT_FIELDS for suffix in ('iqm', 'std')
)


def _write(path, columns, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='', encoding='utf-8') as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)
    return path


def write_match_csv(path, groups):
    """groups: iterable of (group_seed, seeds, stats)"""
    rows = []
    for group_seed, seeds, stats in groups:
        for index, (seed, match) in enumerate(zip(seeds, stats)):
            rows.append({
                'group_seed': group_seed, 'match': index, 'seed': seed,
                'outcome': str(match.outcome.value), **match.to_dict(),
            })
    return _write(path, MATCH_COLUMNS, rows)


def write_aggregate_csv(path, reports):
    rows = []
    for report in reports:
        row = report.row()
        for key in row:
            if key.endswith('_iqm') or key.endswith('_std'):
                row[key] = f'{row[key]:.6f}'
        rows.append(row)
    return _write(path, AGGREGATE_COLUMNS, rows)


def read_csv(path):
    with Path(path).open(newline='', encoding='utf-8') as fh:
        return list(csv.DictReader(fh))
