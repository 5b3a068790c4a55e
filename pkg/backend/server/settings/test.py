from .base import *

SWEEP_THREADS = 1

CACHES = {
    "default": {
        "BACKEND": "django.core.cache.backends.locmem.LocMemCache",
        "LOCATION": "criticality-tests",
    }
}

LOGGING["loggers"]["criticality"]["level"] = "WARNING"
