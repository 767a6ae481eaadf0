from django.apps import AppConfig


class RhplabConfig(AppConfig):
    name = "rhplab"
    verbose_name = "Robust hyperproperty preservation lab"

    def ready(self):
        try:
            from .conf import apply_lab_settings
            apply_lab_settings()
        except Exception:
            pass
