import logging
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, List, Optional, Sequence

from django.conf import settings

from env.state import MatchState, ScenarioConfig
from rewards.shaped import ShapedRewardConfig

from .config import WorkerConfig
from .exceptions import RunError
from .messages import BonusSnapshot, LearnerSnapshot, OpponentSnapshot, RolloutBuffer, WorkerTask
from .models import RolloutBackend
from .worker import run_worker

logger = logging.getLogger(__name__)


class RolloutService:
    """
    Service to fan rollout tasks out to workers and collect their buffers

    The learner blocks until every worker has reported. A failed rollout is
    retried once with the same tasks (hence the same seeds); a second
    failure aborts the run.
    """

    def __init__(
        self,
        backend: Optional[str] = None,
        processes: Optional[int] = None,
        runner: Callable[[WorkerTask], RolloutBuffer] = run_worker,
    ):
        self.backend = RolloutBackend(backend or settings.ROLLOUT_BACKEND)
        self.processes = processes if processes is not None else settings.ROLLOUT_PROCESSES
        self.runner = runner
        self._executor = None

    def _pool(self) -> ProcessPoolExecutor:
        if self._executor is None:
            self._executor = ProcessPoolExecutor(max_workers=self.processes or os.cpu_count())
        return self._executor

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown()
            self._executor = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False

    def build_tasks(
        self,
        worker_cfg: WorkerConfig,
        learner: LearnerSnapshot,
        opponent: OpponentSnapshot,
        scenario: ScenarioConfig,
        rollout_index: int,
        run_seed: int,
        bonus: Optional[BonusSnapshot] = None,
        reward: Optional[ShapedRewardConfig] = None,
        replay_dir=None,
        env_states: Optional[Sequence[MatchState]] = None,
    ) -> List[WorkerTask]:
        """
        One task per worker

        Args:
            worker_cfg: Worker count, steps per worker and replay switch
            learner: Frozen actor and critic the workers act with
            opponent: Away side of every match
            scenario: Scenario new episodes start from
            rollout_index: Index of the rollout in the run
            run_seed: Seed the worker streams are derived from
            bonus: Intrinsic bonus networks, none when omitted
            reward: Shaped reward constants, the defaults when omitted
            replay_dir: Directory for per-worker step logs
            env_states: Match each worker continues from

        Returns:
            Tasks in worker order
        """
        tasks = []
        for worker_index in range(worker_cfg.num_workers):
            replay_path = None
            if worker_cfg.dump_replays and replay_dir is not None:
                replay_path = str(Path(replay_dir) / f'rollout_{rollout_index:06d}_worker_{worker_index:03d}.jsonl')
            extra = {} if reward is None else {'reward': reward}
            tasks.append(WorkerTask(
                rollout_index=rollout_index,
                worker_index=worker_index,
                run_seed=run_seed,
                steps=worker_cfg.steps_per_worker,
                scenario=scenario,
                learner=learner,
                opponent=opponent,
                bonus=bonus or BonusSnapshot(),
                replay_path=replay_path,
                initial_state=env_states[worker_index] if env_states else None,
                **extra,
            ))
        return tasks

    def _run(self, tasks: Sequence[WorkerTask]) -> List[RolloutBuffer]:
        if self.backend == RolloutBackend.SERIAL:
            return [self.runner(task) for task in tasks]
        return list(self._pool().map(self.runner, tasks))

    def run_tasks(self, tasks: Sequence[WorkerTask]) -> List[RolloutBuffer]:
        """
        Run every task, retrying the whole rollout once

        Args:
            tasks: Tasks of one rollout

        Returns:
            One buffer per task, in task order

        Raises:
            RunError: When the retry fails as well
        """
        try:
            return self._run(tasks)
        except Exception as e:
            logger.warning('Rollout %d failed (%s); retrying with the same seeds', tasks[0].rollout_index, e)
            # A crashed pool cannot take new work
            self.close()
        try:
            return self._run(tasks)
        except Exception as e:
            self.close()
            raise RunError(f'Rollout {tasks[0].rollout_index} failed twice: {e}') from e

    def collect(
        self,
        worker_cfg: WorkerConfig,
        learner: LearnerSnapshot,
        opponent: OpponentSnapshot,
        scenario: ScenarioConfig,
        rollout_index: int,
        run_seed: int,
        bonus: Optional[BonusSnapshot] = None,
        reward: Optional[ShapedRewardConfig] = None,
        replay_dir=None,
        env_states: Optional[Sequence[MatchState]] = None,
    ) -> List[RolloutBuffer]:
        """
        Collect one rollout

        Args:
            worker_cfg: Worker count, steps per worker and replay switch
            learner: Frozen actor and critic the workers act with
            opponent: Away side of every match
            scenario: Scenario new episodes start from
            rollout_index: Index of the rollout in the run
            run_seed: Seed the worker streams are derived from
            bonus: Intrinsic bonus networks, none when omitted
            reward: Shaped reward constants, the defaults when omitted
            replay_dir: Directory for per-worker step logs
            env_states: Match each worker continues from

        Returns:
            One buffer per worker, in worker order
        """
        tasks = self.build_tasks(
            worker_cfg, learner, opponent, scenario, rollout_index, run_seed,
            bonus=bonus, reward=reward, replay_dir=replay_dir, env_states=env_states,
        )
        buffers = self.run_tasks(tasks)
        logger.info(
            'Rollout %d collected %d steps from %d workers',
            rollout_index, sum(len(b) for b in buffers), len(buffers),
        )
        return buffers
