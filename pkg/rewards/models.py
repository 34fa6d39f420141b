from django.db import models
from django.utils.translation import gettext_lazy as _


class RewardVariant(models.TextChoices):
    BASE = 'base', _('Shaped reward only')
    SSIR = 'ssir', _('Shaped reward with self-supervised intrinsic reward')
    RND = 'rnd', _('Shaped reward with random network distillation bonus')
