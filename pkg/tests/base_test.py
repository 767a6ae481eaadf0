"""
Base test classes for the rhplab unit tests
"""

import os
import django
from django.conf import settings
from django.test import SimpleTestCase

if not settings.configured:
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'tests.test_settings')
    django.setup()

from rhplab.syntax import Lang, Level, Universe, parse, make_store  # noqa: E402


class RHPLabTestCase(SimpleTestCase):
    """Base test case with the universes the suite runs on"""

    def tiny_universe(self, **overrides):
        """h high, l low, values {0, 1}: small enough for every exhaustive loop."""
        fields = dict(
            vars=(("h", Level.HIGH), ("l", Level.LOW)),
            vmax=1,
            fuel=8,
            term_depth=2,
            ctx_depth=2,
            literal_pool=(0, 1),
        )
        fields.update(overrides)
        return Universe(**fields)

    def fixture_universe(self, **overrides):
        """The fixture bounds; only for single-program examples."""
        fields = dict(vars=(("h", Level.HIGH), ("l", Level.LOW)))
        fields.update(overrides)
        return Universe(**fields)

    def term(self, text, universe, lang=Lang.SOURCE):
        return parse(text, lang, "term", universe)

    def store(self, universe, **values):
        return make_store(universe, values)
