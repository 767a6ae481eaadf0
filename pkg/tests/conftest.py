import os
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))
os.environ.setdefault("DJANGO_SETTINGS_MODULE", "tests.test_settings")


def pytest_configure(config):
    import django

    django.setup()
    config.addinivalue_line(
        "markers",
        "slow: exhaustive sweeps over the fixture universe (4096 stores)",
    )
