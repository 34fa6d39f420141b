from django.apps import AppConfig


class LeagueAppConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'league'
    verbose_name = 'Curriculum and self-play league'
