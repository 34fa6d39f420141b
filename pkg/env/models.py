from django.db import models
from django.utils.translation import gettext_lazy as _


class Team(models.TextChoices):
    HOME = 'home', _('Home')
    AWAY = 'away', _('Away')

    @property
    def other(self):
        return Team.AWAY if self == Team.HOME else Team.HOME

    @property
    def sign(self):
        """Attacking direction along x: home attacks +x, away attacks -x"""
        return 1.0 if self == Team.HOME else -1.0


class Action(models.IntegerChoices):
    """
    Per-player discrete action set (the builtin-AI action is not part of it)
    """
    IDLE = 0, _('Idle')
    LEFT = 1, _('Left')
    TOP_LEFT = 2, _('Top left')
    TOP = 3, _('Top')
    TOP_RIGHT = 4, _('Top right')
    RIGHT = 5, _('Right')
    BOTTOM_RIGHT = 6, _('Bottom right')
    BOTTOM = 7, _('Bottom')
    BOTTOM_LEFT = 8, _('Bottom left')
    LONG_PASS = 9, _('Long pass')
    HIGH_PASS = 10, _('High pass')
    SHORT_PASS = 11, _('Short pass')
    SHOT = 12, _('Shot')
    SPRINT = 13, _('Sprint')
    RELEASE_DIRECTION = 14, _('Release direction')
    RELEASE_SPRINT = 15, _('Release sprint')
    SLIDE = 16, _('Slide')
    DRIBBLE = 17, _('Dribble')


NUM_ACTIONS = len(Action)

PASS_ACTIONS = frozenset({Action.LONG_PASS, Action.HIGH_PASS, Action.SHORT_PASS})


class EventKind(models.TextChoices):
    PASS_ATTEMPT = 'pass', _('Pass attempt')
    SHOT_ATTEMPT = 'shot', _('Shot attempt')
    GOAL = 'goal', _('Goal')
    INTERCEPTION = 'interception', _('Interception')
    OUT_OF_BOUNDS = 'out_of_bounds', _('Out of bounds')
    FOUL = 'foul', _('Foul')


class TerminationCause(models.TextChoices):
    GOAL = 'goal', _('Goal')
    FOUL = 'foul', _('Foul')
    OUT_OF_BOUNDS = 'out_of_bounds', _('Out of bounds')
    STEP_LIMIT = 'step_limit', _('Step limit')
