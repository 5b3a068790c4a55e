"""
Django settings for the criticality project.

Numerical defaults are module constants; the numeric ones can be
overridden from the environment (or a .env file) under the same name.
"""

import os
from pathlib import Path
from typing import Union

from dotenv import load_dotenv

load_dotenv()  # take environment variables from .env.

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


def str2bool(arg: Union[int, str]) -> bool:
    return str(arg).lower() in ("1", "true")


def env_float(name: str, default: float) -> float:
    return float(os.environ.get(name, default))


def env_int(name: str, default: int) -> int:
    return int(os.environ.get(name, default))


SECRET_KEY = os.environ.get("SECRET_KEY", "criticality-local-only")

DEBUG = str2bool(os.environ.get("DEBUG", "true"))

ALLOWED_HOSTS: list[str] = []

INSTALLED_APPS = [
    # 3rd-party
    "rest_framework",
    # Local
    "criticality",
]

# Nothing is persisted in a database; sweeps and analyses live in files.
DATABASES: dict = {}

if os.environ.get("REDIS_URL"):
    CACHES = {
        "default": {
            "BACKEND": "django_redis.cache.RedisCache",
            "LOCATION": os.environ["REDIS_URL"],
            "OPTIONS": {
                "CLIENT_CLASS": "django_redis.client.DefaultClient",
            },
        }
    }
else:
    CACHES = {
        "default": {
            "BACKEND": "django.core.cache.backends.locmem.LocMemCache",
            "LOCATION": "criticality-points",
        }
    }

POINT_CACHE_TIMEOUT = env_int("POINT_CACHE_TIMEOUT", 86400)  # 24 hours in seconds

LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = False

USE_TZ = True

# Eigensolver
EIGEN_REQUESTED_PAIRS = env_int("EIGEN_REQUESTED_PAIRS", 24)
EIGEN_BLOCK_SIZE = env_int("EIGEN_BLOCK_SIZE", 8)
EIGEN_MAX_ITERATIONS = env_int("EIGEN_MAX_ITERATIONS", 10_000)
EIGEN_RESIDUAL_TOLERANCE = env_float("EIGEN_RESIDUAL_TOLERANCE", 1e-9)
DEGENERACY_TOLERANCE = env_float("DEGENERACY_TOLERANCE", 1e-7)
RETAINED_LEVELS = env_int("RETAINED_LEVELS", 5)

# Mixed state and measures
MIXTURE_K_MAX = env_int("MIXTURE_K_MAX", 4)
OPTIMIZER_RESTARTS = env_int("OPTIMIZER_RESTARTS", 20)
OPTIMIZER_TOLERANCE = env_float("OPTIMIZER_TOLERANCE", 1e-10)
OPTIMIZER_MAX_ALTERNATIONS = env_int("OPTIMIZER_MAX_ALTERNATIONS", 10_000)
DEFAULT_SEED = env_int("DEFAULT_SEED", 1234)

# Sweeps and analysis
SWEEP_THREADS = env_int("SWEEP_THREADS", os.cpu_count() or 1)
JUMP_THRESHOLD_FACTOR = env_float("JUMP_THRESHOLD_FACTOR", 5.0)
REFINE_TOLERANCE = env_float("REFINE_TOLERANCE", 1e-6)

# (lo, hi, kind) per model and measure
FIT_WINDOWS = {
    "tfim": {
        "concurrence": (0.95, 1.15, "min"),
        "sp": (0.85, 1.05, "max"),
    },
    "j1j2-2d": {
        "sp": (0.55, 0.68, "min"),
    },
}

# Where the near/far (1-D) or drop (2-D) discontinuities are looked for
DISCONTINUITY_REGION = {
    "j1j2-1d": (0.2, 0.35),
    "j1j2-2d": (0.35, 0.45),
}

ASYMPTOTIC_CRITICAL_POINTS = {
    "j1j2-1d": 0.2412,
    "tfim": 1.0,
}

LOG_LEVEL = os.environ.get("LOG_LEVEL", "INFO").upper()

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "simple": {
            "format": "%(asctime)s %(levelname)s %(name)s: %(message)s",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "simple",
        },
    },
    "loggers": {
        "criticality": {
            "handlers": ["console"],
            "level": LOG_LEVEL,
        },
    },
}
