import logging

from django.dispatch import receiver

from league.signals import phase_advanced

logger = logging.getLogger(__name__)


@receiver(phase_advanced)
def log_phase_advance(sender, previous, current, entry, rollout_index, env_steps, **kwargs):
    """
    Report every phase transition of a run
    """
    logger.info(
        'Phase %s passed at rollout %d after %d env steps; snapshot %s; next phase %s',
        previous.label, rollout_index, env_steps, entry.key if entry else '-', current.label,
    )
