default_app_config = "rhplab.apps.RhplabConfig"

__version__ = "0.1.0"
