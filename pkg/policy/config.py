from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class TrainConfig:
    """Learner hyper-parameters"""
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_epsilon: float = 0.2
    entropy_coef: float = 0.01
    lr_actor: float = 5e-4
    lr_critic: float = 5e-4
    minibatch_size: int = 1024
    epochs_per_rollout: int = 4
    max_grad_norm: float = 10.0
    ssir_alpha: float = 0.1
    lr_ssir: float = 5e-4
    lr_rnd: float = 5e-4
    warmup_rollouts: int = 700
    pe_dim: int = 16

    def to_dict(self):
        return asdict(self)
