from rhplab.conf import FIXTURE
from rhplab.management.base import LabCommand
from rhplab.repro import run_repro


class Command(LabCommand):
    help = "Run the reproduction suite and print a pass/fail table."
    report_name = "repro"
    default_config = FIXTURE

    def add_lab_arguments(self, parser):
        parser.add_argument("scope", nargs="?", default="all", help="all, or one result id (e.g. lemma-identity-ni).")

    def build(self, report, config, options):
        table, verdicts = run_repro(options["scope"], config.universe)
        report.command = f"repro {options['scope']}"
        # rows may run on a shallower term depth than configured; keep both
        report.bounds = {
            "configured": config.universe.bounds(),
            "rows": {name: verdict.details["universes"] for name, verdict in verdicts},
        }
        for name, verdict in verdicts:
            report.add_verdict(name, verdict)
        report.lines.extend(table.to_string(index=False).splitlines())
        report.payload = {"rows": table.to_dict("records")}
