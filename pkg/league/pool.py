"""
Pool of frozen policy snapshots on disk.

    <root>/manifest.json          ordered entries, rewritten atomically
    <root>/policy-000001.npz      one checkpoint per entry, never modified
"""
import json
import logging
import os
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

from nn.checkpoints import Checkpoint, CheckpointError, load_checkpoint, save_checkpoint
from rollout.exceptions import RunError
from rollout.models import Outcome

logger = logging.getLogger(__name__)

MANIFEST = 'manifest.json'


@dataclass
class PoolEntry:
    id: int
    path: str  # relative to the pool root
    label: str  # phase passed when the snapshot was taken
    created_step: int
    games: float = 0  # played by the current policy against this entry, decayed on each pass
    wins: float = 0

    @property
    def key(self):
        return f'policy-{self.id:06d}'

    @property
    def win_rate(self) -> Optional[float]:
        """The current policy's win rate against this entry, None before any game"""
        if not self.games:
            return None
        return self.wins / self.games


class PolicyPool:

    def __init__(self, root):
        self.root = Path(root)
        self.entries = []
        manifest = self.root / MANIFEST
        if manifest.is_file():
            self._load_manifest(manifest)

    def _load_manifest(self, manifest):
        try:
            data = json.loads(manifest.read_text(encoding='utf-8'))
            self.entries = [PoolEntry(**entry) for entry in data['entries']]
        except (ValueError, KeyError, TypeError) as e:
            raise RunError(f'Unreadable pool manifest {manifest}: {e}')
        for entry in self.entries:
            if not (self.root / entry.path).is_file():
                raise RunError(f'Pool entry {entry.key} is missing its checkpoint {entry.path}')

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def latest(self):
        return self.entries[-1] if self.entries else None

    def get(self, key):
        for entry in self.entries:
            if entry.key == key:
                return entry
        raise KeyError(key)

    def latest_with_label(self, label):
        for entry in reversed(self.entries):
            if entry.label == label:
                return entry
        return None

    def write_manifest(self):
        self.root.mkdir(parents=True, exist_ok=True)
        path = self.root / MANIFEST
        tmp = path.with_name(MANIFEST + '.tmp')
        tmp.write_text(json.dumps({'entries': [asdict(e) for e in self.entries]}, indent=2, sort_keys=True), encoding='utf-8')
        os.replace(tmp, path)

    def load_actor(self, entry):
        """(spec, params) of an entry's actor"""
        try:
            checkpoint = load_checkpoint(self.root / entry.path)
        except CheckpointError as e:
            raise RunError(f'Cannot load pool entry {entry.key}: {e}')
        return checkpoint.spec('actor'), checkpoint.params('actor')

    def decay_statistics(self, factor):
        """Scale every entry's games and wins by factor; win rates stay as they are"""
        if factor >= 1.0 or not self.entries:
            return
        for entry in self.entries:
            entry.games *= factor
            entry.wins *= factor
        self.write_manifest()

    def record_outcomes(self, outcomes):
        """Fold finished episodes into the per-entry statistics, keyed by opponent label"""
        changed = False
        for outcome in outcomes:
            try:
                entry = self.get(outcome.opponent)
            except KeyError:
                continue
            entry.games += 1
            if Outcome(outcome.result) == Outcome.WIN:
                entry.wins += 1
            changed = True
        if changed:
            self.write_manifest()


def snapshot(pool, actor_spec, actor, label, created_step, metadata=None):
    """
    Append the actor to the pool. The file is reloaded and compared before
    the manifest lists it; on any failure the previous pool is kept.
    """
    entry_id = (pool.latest.id + 1) if pool.entries else 1
    entry = PoolEntry(id=entry_id, path=f'policy-{entry_id:06d}.npz', label=label, created_step=int(created_step))
    path = pool.root / entry.path
    meta = {'label': label, 'created_step': int(created_step)}
    meta.update(metadata or {})
    try:
        save_checkpoint(path, Checkpoint(networks={'actor': (actor_spec, actor)}, metadata=meta))
        _, reloaded = pool.load_actor(entry)
        if not reloaded.identical(actor):
            raise RunError(f'Pool entry {entry.key} did not round-trip')
        pool.entries.append(entry)
        pool.write_manifest()
    except (RunError, OSError, ValueError) as e:
        if entry in pool.entries:
            pool.entries.remove(entry)
        path.unlink(missing_ok=True)
        raise RunError(f'Snapshot {entry.key} failed: {e}') from e
    logger.info('Added %s (%s) to the pool at step %d', entry.key, label, created_step)
    return entry
