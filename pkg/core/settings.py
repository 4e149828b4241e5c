"""
Django settings for the VLC precoding simulator.

Everything here is process-level configuration read from the environment
(or a ``.env`` file next to ``manage.py``). Experiment parameters live in
the experiment config files handled by the ``experiments`` app.
"""

import os
from pathlib import Path

import dj_database_url
import environ

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

env = environ.Env(DEBUG=(bool, False))
environ.Env.read_env(os.path.join(BASE_DIR, '.env'))

SECRET_KEY = env('SECRET_KEY', default='vlcsim-local-only-key')

DEBUG = env.bool('DEBUG', default=False)

ALLOWED_HOSTS = []


# Application definition

LOCAL_APPS = [
    'channel',
    'noise',
    'precoding',
    'csi',
    'analytic',
    'montecarlo',
    'experiments',
]

INSTALLED_APPS = LOCAL_APPS


# Database
# Run provenance is stored here; SQLite unless DATABASE_URL says otherwise.

DATABASES = {
    'default': dj_database_url.config(default=f'sqlite:///{BASE_DIR / "db.sqlite3"}', conn_max_age=600)
}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = env('TIME_ZONE', default='UTC')

USE_I18N = False

USE_TZ = True


# Simulation runtime knobs

# 0 means "use every available core"
SIMULATION_THREADS = env.int('SIMULATION_THREADS', default=0)
SIMULATION_BLOCK_SIZE = env.int('SIMULATION_BLOCK_SIZE', default=65536)
SIMULATION_DEFAULT_SYMBOLS = env.int('SIMULATION_DEFAULT_SYMBOLS', default=2_000_000)
SIMULATION_DEFAULT_SEED = env.int('SIMULATION_DEFAULT_SEED', default=1)
SIMULATION_OUTPUT_DIR = Path(env('SIMULATION_OUTPUT_DIR', default=str(BASE_DIR / 'results')))
SIMULATION_PINV_TOLERANCE = env.float('SIMULATION_PINV_TOLERANCE', default=1e-12)
SIMULATION_ENERGY_CHECKS = env.bool('SIMULATION_ENERGY_CHECKS', default=DEBUG)


# Logging
# Console output goes to stderr so that stdout stays clean for command reports.

LOG_LEVEL = env('LOG_LEVEL', default='INFO').upper()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'loggers': {
        app: {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        }
        for app in LOCAL_APPS
    },
}
