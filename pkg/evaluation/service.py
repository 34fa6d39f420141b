import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

from django.conf import settings

from env.state import ScenarioConfig
from league.curriculum import selfplay_scenario
from rollout.messages import EpisodeOutcome, OpponentSnapshot
from rollout.models import RolloutBackend

from .aggregate import EvalReport, aggregate
from .config import EvalConfig
from .harness import MatchTask, match_seeds, run_match, run_outcome_match
from .reports import write_aggregate_csv, write_match_csv
from .stats import MatchStats

logger = logging.getLogger(__name__)

MATCH_CSV = 'eval_matches.csv'
AGGREGATE_CSV = 'eval_summary.csv'


class EvaluationService:
    """
    Service to play evaluation matches across worker processes and
    assemble the reports
    """

    def __init__(self, backend: Optional[str] = None, processes: Optional[int] = None):
        self.backend = RolloutBackend(backend or settings.ROLLOUT_BACKEND)
        self.processes = processes if processes is not None else settings.ROLLOUT_PROCESSES

    def play(self, tasks: Sequence[MatchTask], runner: Callable = run_match) -> list:
        """
        Play every task, in task order

        Args:
            tasks: Independent, individually seeded matches
            runner: Module-level function applied to each task

        Returns:
            The runner's result per task
        """
        if self.backend == RolloutBackend.SERIAL:
            return [runner(task) for task in tasks]
        with ProcessPoolExecutor(max_workers=self.processes or os.cpu_count()) as pool:
            return list(pool.map(runner, tasks))

    def play_outcomes(
        self,
        actor_spec,
        actor,
        scenario: ScenarioConfig,
        opponent: OpponentSnapshot,
        seeds: Sequence[int],
        pe_dim: int = 16,
    ) -> List[EpisodeOutcome]:
        """
        Play one episode per seed against a phase opponent

        Args:
            actor_spec: Spec of the home actor network
            actor: Parameters of the home actor
            scenario: Scenario the episodes start from
            opponent: Scripted AI or frozen pool policy on the away side
            seeds: One match seed per episode
            pe_dim: Positional encoding width of the observations

        Returns:
            Episode outcomes labelled with the opponent, in seed order
        """
        tasks = [
            MatchTask(actor_spec, actor, scenario, seed, opponent.strength, pe_dim, opponent)
            for seed in seeds
        ]
        outcomes = self.play(tasks, runner=run_outcome_match)
        logger.debug('Played %d matches against %s', len(outcomes), opponent.label)
        return outcomes

    def run_evaluation(
        self,
        actor_spec,
        actor,
        players_per_team: int,
        group_seed: int,
        cfg: EvalConfig = EvalConfig(),
        pe_dim: int = 16,
        scenario: Optional[ScenarioConfig] = None,
    ) -> Tuple[EvalReport, List[MatchStats]]:
        """
        One seed group: cfg.matches independent matches and their report

        Args:
            actor_spec: Spec of the evaluated actor network
            actor: Parameters of the evaluated actor
            players_per_team: Team size of the full-match scenario
            group_seed: Seed the match seeds are derived from
            cfg: Match count, opponent strength and step limit
            pe_dim: Positional encoding width of the observations
            scenario: Replaces the full-match scenario when given

        Returns:
            The aggregate report and the per-match statistics
        """
        scenario = scenario or replace(selfplay_scenario(players_per_team), episode_step_limit=cfg.match_step_limit)
        seeds = match_seeds(group_seed, cfg.matches)
        tasks = [MatchTask(actor_spec, actor, scenario, seed, cfg.opponent_strength, pe_dim) for seed in seeds]
        stats = self.play(tasks)
        report = aggregate(stats, opponent=f'heuristic@{cfg.opponent_strength:g}', seeds=seeds, group_seed=group_seed)
        logger.info('Evaluated %d matches for seed group %d', len(stats), group_seed)
        return report, stats

    def evaluate(
        self,
        actor_spec,
        actor,
        players_per_team: int,
        out_dir,
        cfg: EvalConfig = EvalConfig(),
        pe_dim: int = 16,
    ) -> List[EvalReport]:
        """
        Every seed group of cfg, written as a per-match and an aggregate CSV

        Args:
            actor_spec: Spec of the evaluated actor network
            actor: Parameters of the evaluated actor
            players_per_team: Team size of the full-match scenario
            out_dir: Directory the two CSV files are written to
            cfg: Seed groups and per-group match settings
            pe_dim: Positional encoding width of the observations

        Returns:
            One report per seed group
        """
        reports, groups = [], []
        for group_seed in cfg.group_seeds:
            report, stats = self.run_evaluation(actor_spec, actor, players_per_team, group_seed, cfg, pe_dim)
            reports.append(report)
            groups.append((group_seed, report.seeds, stats))
        out_dir = Path(out_dir)
        write_match_csv(out_dir / MATCH_CSV, groups)
        write_aggregate_csv(out_dir / AGGREGATE_CSV, reports)
        return reports
