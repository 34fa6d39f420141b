"""
The training loop.

A run directory holds:
    config.json                 the validated RunConfig
    manifest.json               networks built for the run and artifact names
    feature_layout.json         observation layout of the actor and critic
    metrics.jsonl               one record per rollout, keys sorted
    league_progress.csv         one row per rollout (league)
    pool/                       frozen snapshots (league)
    checkpoints/latest.npz      everything needed to resume
    replays/                    per-worker step logs when enabled
"""
import json
import logging
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from env.state import MatchState
from evaluation.harness import match_seeds
from evaluation.service import EvaluationService
from features.layout import actor_dim, critic_dim, write_layout
from league.league import League
from league.pool import PoolEntry
from nn.checkpoints import Checkpoint, CheckpointError, load_checkpoint, save_checkpoint
from policy.learner import JrpoLearner
from policy.normalizer import RunningMeanStd, ValueNormalizer
from rewards.models import RewardVariant
from rewards.rnd import RndPair, rnd_update
from rewards.ssir import SsirNetwork, ssir_update
from rewards.variants import bonus_active, reward_decomposition
from rollout.exceptions import RunError
from rollout.merge import merge, outcome_counts
from rollout.messages import BonusSnapshot, LearnerSnapshot
from rollout.service import RolloutService

from .serializers import build_run_config

logger = logging.getLogger(__name__)

CONFIG_ECHO = 'config.json'
MANIFEST = 'manifest.json'
METRICS = 'metrics.jsonl'
CHECKPOINT = Path('checkpoints') / 'latest.npz'
REPLAYS = 'replays'
WINDOW_MATCH_STREAM = 7


def _plain(value):
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f'{type(value).__name__} is not JSON serializable')


def run_directory(cfg):
    return Path(cfg.output_dir) / cfg.name


class Trainer:
    """
    Runs rollouts until the env-step budget is spent. The learner, the
    bonus network of the variant and the league live here; workers only
    ever see frozen snapshots.
    """

    def __init__(self, cfg, run_dir=None, clock=time.monotonic, service=None):
        self.cfg = cfg
        self.run_dir = Path(run_dir) if run_dir is not None else run_directory(cfg)
        self.clock = clock
        self.service = service
        self.variant = RewardVariant(cfg.variant)

        n, pe_dim = cfg.players_per_team, cfg.train.pe_dim
        init_seq, update_seq, league_seq = np.random.SeedSequence(cfg.seed).spawn(3)
        init_rng = np.random.default_rng(init_seq)
        self.learner = JrpoLearner(actor_dim(n, pe_dim), critic_dim(n), cfg.train, init_rng)
        self.ssir = SsirNetwork.create(actor_dim(n, pe_dim), init_rng) if self.variant == RewardVariant.SSIR else None
        self.rnd = RndPair.create(critic_dim(n), init_rng) if self.variant == RewardVariant.RND else None
        self.update_rng = np.random.default_rng(update_seq)
        self.league_rng = np.random.default_rng(league_seq)

        self.league = League(
            self.run_dir, n, cfg.league, snapshot_metadata={'players_per_team': n, 'pe_dim': pe_dim},
        )
        self.rollout_index = 0
        self.env_steps = 0
        self.env_states = None

    @property
    def networks(self):
        names = ['actor', 'critic']
        if self.ssir is not None:
            names.append('ssir')
        if self.rnd is not None:
            names += ['rnd_target', 'rnd_predictor']
        return names

    @property
    def checkpoint_path(self):
        return self.run_dir / CHECKPOINT

    @property
    def metrics_path(self):
        return self.run_dir / METRICS

    # Artifacts

    def prepare(self):
        """Create the run directory and write the config echo, manifest and empty logs"""
        self.run_dir.mkdir(parents=True, exist_ok=True)
        (self.run_dir / CONFIG_ECHO).write_text(
            json.dumps(self.cfg.to_dict(), indent=2, sort_keys=True), encoding='utf-8',
        )
        manifest = {
            'name': self.cfg.name,
            'variant': str(self.variant.value),
            'networks': self.networks,
            'rollouts': self.cfg.rollouts,
            'steps_per_rollout': self.cfg.workers.steps_per_rollout,
            'artifacts': [CONFIG_ECHO, METRICS, 'feature_layout.json', 'league_progress.csv', 'pool', str(CHECKPOINT)],
        }
        (self.run_dir / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding='utf-8')
        write_layout(self.run_dir, self.cfg.players_per_team, self.cfg.train.pe_dim)
        self.metrics_path.touch()

    def _append_metrics(self, record):
        with self.metrics_path.open('a', encoding='utf-8') as fh:
            fh.write(json.dumps(record, sort_keys=True, default=_plain) + '\n')

    # Loop

    def train(self):
        """Run the remaining rollouts of the budget. Returns the last metrics record."""
        if self.rollout_index == 0:
            self.prepare()
        total = self.cfg.rollouts
        if self.rollout_index >= total:
            logger.info('Run %s has no rollouts left (%d of %d done)', self.cfg.name, self.rollout_index, total)
            return None

        service = self.service or RolloutService()
        record = None
        try:
            while self.rollout_index < total:
                try:
                    record = self.run_rollout(service)
                except RunError:
                    # The failed rollout changed nothing; keep what the run has so far
                    if self.rollout_index:
                        self.save_checkpoint()
                    raise
                if self.rollout_index % self.cfg.checkpoint_every == 0:
                    self.save_checkpoint()
        finally:
            if self.service is None:
                service.close()
        if self.rollout_index % self.cfg.checkpoint_every:
            self.save_checkpoint()
        logger.info('Run %s finished: %d rollouts, %d env steps', self.cfg.name, self.rollout_index, self.env_steps)
        return record

    def bonus_snapshot(self):
        return BonusSnapshot(
            variant=self.variant,
            active=bonus_active(self.rollout_index, self.cfg.train.warmup_rollouts),
            alpha=self.cfg.train.ssir_alpha,
            ssir=self.ssir.snapshot() if self.ssir is not None else None,
            rnd=self.rnd.snapshot() if self.rnd is not None else None,
        )

    def run_rollout(self, service):
        cfg, train = self.cfg, self.cfg.train
        index = self.rollout_index
        scenario = self.league.scenario()
        opponent = self.league.choose_opponent(self.league_rng)
        bonus = self.bonus_snapshot()

        started = self.clock()
        buffers = service.collect(
            cfg.workers, LearnerSnapshot.from_learner(self.learner), opponent, scenario, index, cfg.seed,
            bonus=bonus, reward=cfg.reward, replay_dir=self.run_dir / REPLAYS, env_states=self.env_states,
        )
        batch = merge(buffers, train.gamma, train.gae_lambda)
        update = self.learner.update(batch, self.update_rng)

        bonus_loss = None
        if self.ssir is not None:
            bonus_loss = ssir_update(self.ssir, batch, train.lr_ssir)
        elif self.rnd is not None:
            bonus_loss = rnd_update(self.rnd, batch.next_states, train.lr_rnd)

        outcomes = [outcome for buffer in buffers for outcome in buffer.outcomes]
        window_outcomes = self.window_matches(service, scenario, opponent, index)
        elapsed = self.clock() - started
        self.env_steps += len(batch)
        report = self.league.after_rollout(
            outcomes, index, len(batch), elapsed, self.learner.actor_spec, self.learner.actor,
            window_outcomes=window_outcomes,
        )
        # Matches carry over within a phase; a new phase starts from fresh kickoffs
        self.env_states = None if report.advanced else [buffer.final_state for buffer in buffers]

        record = {
            'rollout_index': index,
            'env_steps': self.env_steps,
            'policy_version': batch.policy_version,
            'opponent': opponent.label,
            'bonus_active': bonus.active,
            'bonus_loss': bonus_loss,
            'elapsed_seconds': elapsed,
            'episodes': len(outcomes),
            'window_matches': None if window_outcomes is None else len(window_outcomes),
            'outcomes': outcome_counts(outcomes),
            'league': report.to_dict(),
            **update,
            **reward_decomposition(batch, self.rnd),
        }
        self._append_metrics(record)
        self.rollout_index += 1
        logger.info(
            'Rollout %d (%s vs %s): win rate %.3f, objective %.4f',
            index, report.phase, opponent.label, report.win_rate, update['objective'],
        )
        return record

    def window_matches(self, service, scenario, opponent, rollout_index):
        """
        Separate matches of the updated actor against the rollout's opponent,
        played when league.win_rate_matches is set. None otherwise.
        """
        n = self.cfg.league.win_rate_matches
        if not n:
            return None
        seeds = match_seeds([self.cfg.seed, rollout_index, WINDOW_MATCH_STREAM], n)
        evaluator = EvaluationService(backend=service.backend, processes=service.processes)
        return evaluator.play_outcomes(
            self.learner.actor_spec, self.learner.actor, scenario, opponent, seeds, self.cfg.train.pe_dim,
        )

    # Checkpoints

    def checkpoint(self):
        learner = self.learner
        networks = {
            'actor': (learner.actor_spec, learner.actor),
            'critic': (learner.critic_spec, learner.critic),
        }
        optimizers = {'actor': learner.actor_adam, 'critic': learner.critic_adam}
        arrays = {'value_normalizer': learner.normalizer.to_array()}
        if self.ssir is not None:
            networks['ssir'] = (self.ssir.spec, self.ssir.params)
            optimizers['ssir'] = self.ssir.adam
        if self.rnd is not None:
            networks['rnd_target'] = (self.rnd.target_spec, self.rnd.target)
            networks['rnd_predictor'] = (self.rnd.predictor_spec, self.rnd.predictor)
            optimizers['rnd_predictor'] = self.rnd.adam
            arrays['rnd_input_stats'] = self.rnd.input_stats.to_array()
            arrays['rnd_bonus_stats'] = self.rnd.bonus_stats.to_array()
        metadata = {
            'name': self.cfg.name,
            'variant': str(self.variant.value),
            'players_per_team': self.cfg.players_per_team,
            'pe_dim': self.cfg.train.pe_dim,
            'rollout_index': self.rollout_index,
            'env_steps': self.env_steps,
            'league': self.league.state_dict(),
            'pool': [asdict(entry) for entry in self.league.pool],
            'rng': {
                'update': self.update_rng.bit_generator.state,
                'league': self.league_rng.bit_generator.state,
            },
            'env_states': [state.to_dict() for state in self.env_states] if self.env_states else None,
        }
        return Checkpoint(networks=networks, optimizers=optimizers, arrays=arrays, metadata=metadata)

    def save_checkpoint(self):
        path = save_checkpoint(self.checkpoint_path, self.checkpoint())
        logger.info('Checkpoint at rollout %d written to %s', self.rollout_index, path)
        return path

    def load_state(self, checkpoint):
        """Restore everything checkpoint() captured"""
        missing = [name for name in self.networks if name not in checkpoint.networks]
        if missing:
            raise CheckpointError(f'Checkpoint lacks the {", ".join(missing)} network(s) of a {self.variant.label} run')
        if checkpoint.spec('actor') != self.learner.actor_spec or checkpoint.spec('critic') != self.learner.critic_spec:
            raise CheckpointError('Checkpoint networks do not match the run config')
        try:
            self._restore(checkpoint)
        except (KeyError, TypeError, ValueError) as e:
            raise CheckpointError(f'Incomplete checkpoint: {e}')

    def _restore(self, checkpoint):
        meta = checkpoint.metadata
        learner = self.learner
        learner.actor = checkpoint.params('actor')
        learner.critic = checkpoint.params('critic')
        learner.actor_adam = checkpoint.optimizers['actor']
        learner.critic_adam = checkpoint.optimizers['critic']
        learner.normalizer = ValueNormalizer.from_array(checkpoint.arrays['value_normalizer'])
        if self.ssir is not None:
            self.ssir = SsirNetwork(checkpoint.spec('ssir'), checkpoint.params('ssir'), checkpoint.optimizers['ssir'])
        if self.rnd is not None:
            target = checkpoint.params('rnd_target')
            for array in target.arrays():
                array.setflags(write=False)
            state_dim = self.rnd.input_stats.mean.shape
            self.rnd = RndPair(
                target_spec=checkpoint.spec('rnd_target'),
                target=target,
                predictor_spec=checkpoint.spec('rnd_predictor'),
                predictor=checkpoint.params('rnd_predictor'),
                adam=checkpoint.optimizers['rnd_predictor'],
                input_stats=RunningMeanStd.from_array(checkpoint.arrays['rnd_input_stats'], state_dim),
                bonus_stats=RunningMeanStd.from_array(checkpoint.arrays['rnd_bonus_stats']),
            )

        self.rollout_index = meta['rollout_index']
        self.env_steps = meta['env_steps']
        self.update_rng.bit_generator.state = meta['rng']['update']
        self.league_rng.bit_generator.state = meta['rng']['league']
        states = meta['env_states']
        self.env_states = [MatchState.from_dict(s) for s in states] if states else None

        self.league.load_state_dict(meta['league'])
        self._restore_pool([PoolEntry(**entry) for entry in meta['pool']])
        self.league.progress.truncate_after(self.rollout_index - 1)
        self._truncate_metrics()

    def _restore_pool(self, entries):
        """Forget snapshots and statistics recorded after the checkpoint"""
        pool = self.league.pool
        keep = {entry.path for entry in entries}
        for entry in pool.entries:
            if entry.path not in keep:
                (pool.root / entry.path).unlink(missing_ok=True)
        pool.entries = entries
        pool.write_manifest()
        self.league.forget_cached_actors()

    def _truncate_metrics(self):
        if not self.metrics_path.exists():
            return
        kept = [
            line for line in self.metrics_path.read_text(encoding='utf-8').splitlines()
            if line and json.loads(line)['rollout_index'] < self.rollout_index
        ]
        self.metrics_path.write_text(''.join(line + '\n' for line in kept), encoding='utf-8')

    @classmethod
    def resume(cls, run_dir, clock=time.monotonic, service=None):
        """Rebuild a trainer from a run directory's config echo and latest checkpoint"""
        run_dir = Path(run_dir)
        try:
            data = json.loads((run_dir / CONFIG_ECHO).read_text(encoding='utf-8'))
        except (OSError, ValueError) as e:
            raise CheckpointError(f'Run {run_dir} has no readable {CONFIG_ECHO}: {e}')
        trainer = cls(build_run_config(data), run_dir, clock=clock, service=service)
        trainer.load_state(load_checkpoint(trainer.checkpoint_path))
        logger.info('Resumed %s at rollout %d (%s)', run_dir, trainer.rollout_index, trainer.league.phase.label)
        return trainer
