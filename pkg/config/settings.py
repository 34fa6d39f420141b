from pathlib import Path
from decouple import config

BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = config('SECRET_KEY', default='pitchlab-local-only')

# Application definition
INSTALLED_APPS = [
    # Third party apps
    'rest_framework',

    # Local apps
    'env',
    'features',
    'nn',
    'policy',
    'rewards',
    'rollout',
    'league',
    'evaluation',
    'driver',
]

# Database (Django needs one configured; no app defines tables)
DATABASES = {
    'default': {
        'ENGINE': config('DB_ENGINE', default='django.db.backends.sqlite3'),
        'NAME': config('DB_NAME', default=str(BASE_DIR / 'pitchlab.sqlite3')),
    }
}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Rollout workers
ROLLOUT_BACKEND = config('ROLLOUT_BACKEND', default='process')  # 'process' or 'serial'
ROLLOUT_PROCESSES = config('ROLLOUT_PROCESSES', default=0, cast=int)  # 0 = one per CPU

# Run overrides (take precedence over the TOML run config)
RUN_SEED = config('RUN_SEED', default=None, cast=lambda v: None if v in (None, '') else int(v))
RUN_OUTPUT_DIR = config('RUN_OUTPUT_DIR', default='')

# Profiles shipped with the driver
PROFILES_DIR = BASE_DIR / 'driver' / 'profiles'

# Logging
LOG_LEVEL = config('LOG_LEVEL', default='INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': LOG_LEVEL,
    },
}
