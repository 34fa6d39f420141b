from django.dispatch import Signal

# Sent by League after a phase is passed.
# kwargs: previous (Phase), current (Phase), entry (PoolEntry), rollout_index (int), env_steps (int)
phase_advanced = Signal()
