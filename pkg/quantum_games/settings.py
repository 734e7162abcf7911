import os
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()

BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.getenv('SECRET_KEY', 'django-insecure-quantum-games-local-only')

DEBUG = os.getenv('DEBUG', 'True').lower() == 'true'

ALLOWED_HOSTS = ['localhost', '127.0.0.1']

DJANGO_APPS = [
    'django.contrib.auth',
    'django.contrib.contenttypes',
]

THIRD_PARTY_APPS = [
    'rest_framework',
]

LOCAL_APPS = [
    'qmatrix',
    'game_engine',
    'game_a',
    'oracle',
    'reductions',
    'cli',
]

INSTALLED_APPS = DJANGO_APPS + THIRD_PARTY_APPS + LOCAL_APPS

# Nothing is persisted; the database only satisfies Django's startup checks.
DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': os.getenv('DB_NAME', BASE_DIR / 'db.sqlite3'),
    }
}

LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = True
USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


def _env_number(key, default):
    """Read a QG_<KEY> override, keeping the default's type."""
    raw = os.getenv(f'QG_{key}')
    if raw is None:
        return default
    return type(default)(raw)


# Numerical contract shared by every app
QUANTUM_GAMES = {
    key: _env_number(key, default)
    for key, default in {
        'VALIDATION_TOL': 1e-10,
        'PAYOFF_IMAG_TOL': 1e-10,
        'PSI_EQUALITY_TOL': 1e-9,
        'DEGENERATE_Q_TOL': 1e-12,
        'ADMISSIBLE_ALPHA_TOL': 1e-12,
        'SINUSOID_RESIDUAL_TOL': 1e-9,
        'SUM_DEPENDENCE_TOL': 1e-12,
        'OFFSET_IDENTITY_TOL': 1e-12,
        'CERTIFICATE_EPSILON': 1e-6,
        'CERTIFICATE_GRID': 500,
        'SCAN_MAX_GRID': 2000,
        'FIT_SAMPLES': 1000,
        'CYCLE_WINDOW': 8,
        'MAX_ITERATIONS': 100,
        'SEED': 20240917,
        'SWEEP_N': 101,
    }.items()
}

# Logging
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'handlers': {
        'file': {
            'level': 'INFO',
            'class': 'logging.FileHandler',
            'filename': os.getenv('QG_LOG_FILE', 'quantum_games.log'),
        },
        'console': {
            'level': os.getenv('QG_CONSOLE_LOG_LEVEL', 'WARNING'),
            'class': 'logging.StreamHandler',
        },
    },
    'loggers': {
        'django': {
            'handlers': ['file', 'console'],
            'level': 'INFO',
            'propagate': True,
        },
        **{
            app: {
                'handlers': ['file', 'console'],
                'level': 'DEBUG',
                'propagate': False,
            }
            for app in LOCAL_APPS
        },
    },
}
