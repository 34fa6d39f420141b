from django.db import models
from django.utils.translation import gettext_lazy as _


class Activation(models.TextChoices):
    RELU = 'relu', _('ReLU')
    IDENTITY = 'identity', _('Identity')
    TANH = 'tanh', _('Tanh')
