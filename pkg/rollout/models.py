from django.db import models
from django.utils.translation import gettext_lazy as _


class Outcome(models.TextChoices):
    WIN = 'win', _('Win')
    DRAW = 'draw', _('Draw')
    LOSS = 'loss', _('Loss')


class OpponentKind(models.TextChoices):
    HEURISTIC = 'heuristic', _('Scripted heuristic')
    POLICY = 'policy', _('Frozen policy snapshot')


class RolloutBackend(models.TextChoices):
    PROCESS = 'process', _('Process pool')
    SERIAL = 'serial', _('In-process, one worker after the other')
