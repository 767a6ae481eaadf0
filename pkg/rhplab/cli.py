"""
Console entry point: ``rhplab run|beh|check|tau-tilde|repro ...``.

Each subcommand is the matching ``rhplab_*`` management command, so the same
checks are reachable through ``manage.py`` inside a Django project.
"""

import logging
import sys

from django.core.management import call_command, load_command_class
from django.core.management.base import CommandError

from .conf import configure_standalone
from .exceptions import LabError
from .management.base import VerdictFailed
from .reporting import Report

logger = logging.getLogger("rhplab.cli")

SUBCOMMANDS = {
    "run": "rhplab_run",
    "beh": "rhplab_beh",
    "check": "rhplab_check",
    "tau-tilde": "rhplab_tau_tilde",
    "repro": "rhplab_repro",
}

USAGE = "usage: rhplab {" + ",".join(SUBCOMMANDS) + "} [options]"


def run_command(argv, stdout=None, stderr=None):
    """Dispatch ``argv`` and return ``(report, exit_code)``: 0 holds, 1 fails, 2 usage or config error."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = list(argv)
    if not argv or argv[0] not in SUBCOMMANDS:
        stderr.write(USAGE + "\n")
        return Report(argv[0] if argv else ""), 2

    configure_standalone()
    command = load_command_class("rhplab", SUBCOMMANDS[argv[0]])
    try:
        call_command(command, *argv[1:], stdout=stdout)
    except VerdictFailed as exc:
        stderr.write(f"{exc}\n")
        return command.report, 1
    except (CommandError, LabError) as exc:
        stderr.write(f"error: {exc}\n")
        return getattr(command, "report", None) or Report(argv[0]), 2
    return command.report, 0


def main(argv=None):
    _, code = run_command(sys.argv[1:] if argv is None else argv)
    sys.exit(code)


if __name__ == "__main__":
    main()
