from django.apps import AppConfig


class EnvConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'env'
    verbose_name = 'Football simulator'
