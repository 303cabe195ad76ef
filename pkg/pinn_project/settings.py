"""
Django settings for pinn_project.

The project hosts two apps: `pinns` (the numerical library) and
`experiments` (sweep harness, result records and the CLI commands).
Environment overrides are read from the process environment and, if
present, from `pinn.env` in the project root.
"""

import os
from pathlib import Path

from dotenv import load_dotenv

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

load_dotenv(BASE_DIR / 'pinn.env')


def _env_flag(name: str, default: str = '') -> bool:
    return os.environ.get(name, default).strip().lower() in ('1', 'true', 'yes')


# Only used to sign admin sessions; override in pinn.env outside a workstation.
SECRET_KEY = os.environ.get(
    'DJANGO_SECRET_KEY', 'django-insecure-pinn-benchmarks-local-only-5q2@w!r8c#z0k'
)

# Set DJANGO_DEBUG=1 to force DEBUG=True (e.g. when inspecting recorded sweeps in the admin).
DEBUG = _env_flag('DJANGO_DEBUG', '1')

ALLOWED_HOSTS = ['localhost', '127.0.0.1']


# Application definition

INSTALLED_APPS = [
    'django.contrib.admin',
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'django.contrib.sessions',
    'django.contrib.messages',
    'django.contrib.staticfiles',
    # Third party apps
    'rest_framework',
    # Local apps
    'pinns',
    'experiments',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.contrib.sessions.middleware.SessionMiddleware',
    'django.middleware.common.CommonMiddleware',
    'django.middleware.csrf.CsrfViewMiddleware',
    'django.contrib.auth.middleware.AuthenticationMiddleware',
    'django.contrib.messages.middleware.MessageMiddleware',
    'django.middleware.clickjacking.XFrameOptionsMiddleware',
]

ROOT_URLCONF = 'pinn_project.urls'

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [
                'django.template.context_processors.request',
                'django.contrib.auth.context_processors.auth',
                'django.contrib.messages.context_processors.messages',
            ],
        },
    },
]


# Database: sweep records (`sweep --record`) live here

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True


STATIC_URL = 'static/'

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# PINN benchmark settings

# Default directory for sweep CSVs, checkpoints and reference trajectories
PINN_OUTPUT_DIR = Path(os.environ.get('PINN_OUTPUT_DIR', BASE_DIR / 'results'))

# Minutes-to-hours acceptance runs are skipped unless this is set
PINN_RUN_SLOW_TESTS = _env_flag('PINN_RUN_SLOW_TESTS')

PINN_DEFAULTS = {
    'probes': int(os.environ.get('PINN_PROBES', 64)),
    'rtol': float(os.environ.get('PINN_RTOL', 1e-8)),
    'atol': float(os.environ.get('PINN_ATOL', 1e-10)),
}

PINN_LOG_LEVEL = os.environ.get('PINN_LOG_LEVEL', 'INFO').upper()

# Console output for the library and harness; errors also go to a file
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
        'file': {
            'level': 'ERROR',
            'class': 'logging.FileHandler',
            'filename': BASE_DIR / 'pinn_error.log',
            'delay': True,
        },
    },
    'loggers': {
        'django': {
            'handlers': ['file'],
            'level': 'ERROR',
        },
        'pinns': {
            'handlers': ['console', 'file'],
            'level': PINN_LOG_LEVEL,
        },
        'experiments': {
            'handlers': ['console', 'file'],
            'level': PINN_LOG_LEVEL,
        },
    },
}
