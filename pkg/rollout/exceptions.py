class RunError(RuntimeError):
    """A training run cannot continue (failed rollout, empty opponent pool, broken pool manifest)"""
