import logging
import time

from django.core.management.base import BaseCommand, CommandError

from rhplab.conf import get_config
from rhplab.exceptions import LabError
from rhplab.reporting import Report
from rhplab.syntax import Lang, parse
from rhplab.workers import using_n_jobs

logger = logging.getLogger("rhplab.commands")


class VerdictFailed(CommandError):
    """A check ran to completion and found a counterexample."""

    def __init__(self, message):
        super().__init__(message, returncode=1)


class LabCommand(BaseCommand):
    """Shared flags, configuration loading and report output for the lab commands."""

    report_name = "lab"
    default_config = None

    def add_arguments(self, parser):
        parser.add_argument("--config", help="JSON config file (lower-case universe keys).")
        parser.add_argument("--json", action="store_true", help="Print the report as JSON.")
        parser.add_argument("--timing", action="store_true", help="Include wall time in the JSON report.")
        parser.add_argument("--fuel", type=int, help="Override the step budget.")
        parser.add_argument("--vmax", type=int, help="Override the largest value.")
        parser.add_argument("--term-depth", type=int, help="Override the term size bound.")
        parser.add_argument("--ctx-depth", type=int, help="Override the context depth bound.")
        self.add_lab_arguments(parser)

    def add_lab_arguments(self, parser):
        pass

    def build(self, report, config, options):
        raise NotImplementedError

    def parse_input(self, text, lang, kind, universe, flag):
        if text is None:
            raise CommandError(f"{flag} is required", returncode=2)
        return parse(text, Lang.coerce(lang), kind, universe)

    def handle(self, *args, **options):
        started = time.perf_counter()
        self.report = None
        try:
            config = get_config(
                options.get("config") or self.default_config,
                fuel=options.get("fuel"),
                vmax=options.get("vmax"),
                term_depth=options.get("term_depth"),
                ctx_depth=options.get("ctx_depth"),
            )
            self.report = Report(self.report_name, config.universe.bounds())
            with using_n_jobs(config.n_jobs):
                self.build(self.report, config, options)
        except LabError as exc:
            logger.debug("%s stopped: %s", self.report_name, exc)
            raise CommandError(f"{type(exc).__name__}: {exc}", returncode=2) from exc
        self.report.wall_time = time.perf_counter() - started

        if options.get("json") or config.output_format == "json":
            self.stdout.write(self.report.to_json(timing=options.get("timing", False)))
        else:
            self.stdout.write(self.report.render_text())

        if not self.report.holds:
            failed = ", ".join(v["name"] for v in self.report.verdicts if not v["holds"])
            raise VerdictFailed(f"check failed: {failed}")
