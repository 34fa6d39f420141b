from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class WorkerConfig:
    num_workers: int = 40
    steps_per_worker: int = 500
    dump_replays: bool = False

    @property
    def steps_per_rollout(self):
        return self.num_workers * self.steps_per_worker

    def to_dict(self):
        return asdict(self)
