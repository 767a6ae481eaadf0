#!/usr/bin/env python3
"""
Django test runner for rhplab.
Runs the suite under Django's DiscoverRunner (pytest works as well).
"""

import os
import sys
import django
from django.conf import settings
from django.test.utils import get_runner


def run_tests():
    project_root = os.path.dirname(os.path.abspath(__file__))
    sys.path.insert(0, project_root)

    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'tests.test_settings')
    django.setup()

    TestRunner = get_runner(settings)
    test_runner = TestRunner()

    failures = test_runner.run_tests(sys.argv[1:] or ["tests"])

    if failures:
        print(f"\n{failures} test(s) failed")
        sys.exit(1)
    print("\nAll tests passed")
    sys.exit(0)


if __name__ == "__main__":
    run_tests()
