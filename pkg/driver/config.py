from dataclasses import dataclass, field

from evaluation.config import EvalConfig
from league.config import LeagueConfig
from policy.config import TrainConfig
from rewards.models import RewardVariant
from rewards.shaped import ShapedRewardConfig
from rollout.config import WorkerConfig


@dataclass(frozen=True)
class RunConfig:
    """Everything a training run needs; echoed to config.json"""
    name: str = 'run'
    seed: int = 0
    env_step_budget: int = 2_000_000
    players_per_team: int = 4
    variant: str = RewardVariant.BASE
    output_dir: str = 'runs'
    checkpoint_every: int = 10  # rollouts
    workers: WorkerConfig = field(default_factory=WorkerConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    reward: ShapedRewardConfig = field(default_factory=ShapedRewardConfig)
    league: LeagueConfig = field(default_factory=LeagueConfig)
    evaluation: EvalConfig = field(default_factory=EvalConfig)

    @property
    def rollouts(self):
        """Whole rollouts that fit in the budget"""
        return self.env_step_budget // self.workers.steps_per_rollout

    def to_dict(self):
        return {
            'run': {
                'name': self.name,
                'seed': self.seed,
                'env_step_budget': self.env_step_budget,
                'players_per_team': self.players_per_team,
                'variant': str(RewardVariant(self.variant).value),
                'output_dir': self.output_dir,
                'checkpoint_every': self.checkpoint_every,
            },
            'workers': self.workers.to_dict(),
            'train': self.train.to_dict(),
            'reward': self.reward.to_dict(),
            'league': self.league.to_dict(),
            'evaluation': self.evaluation.to_dict(),
        }
