from django.db import models
from django.utils.translation import gettext_lazy as _


class PhaseKind(models.TextChoices):
    CURRICULUM = 'curriculum', _('Curriculum scenario')
    CHALLENGE = 'challenge', _('Challenge self-play')
    GENERALIZE = 'generalize', _('Generalize self-play')


class Decision(models.TextChoices):
    STAY = 'stay', _('Stay')
    ADVANCE = 'advance', _('Advance')
