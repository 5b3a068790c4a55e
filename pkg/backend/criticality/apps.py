from django.apps import AppConfig


class CriticalityConfig(AppConfig):
    """App configuration for criticality"""

    default_auto_field = "django.db.models.BigAutoField"
    name = "criticality"
    verbose_name = "Quantum criticality from low-lying mixtures"
