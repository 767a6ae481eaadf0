from rhplab.management.base import LabCommand
from rhplab.syntax import Lang
from rhplab.traces import run


class Command(LabCommand):
    help = "Run one program from one store and print its trace."
    report_name = "run"

    def add_lab_arguments(self, parser):
        parser.add_argument("--lang", choices=["source", "target"], default="source", help="Language of --term.")
        parser.add_argument("--term", help="Program text, e.g. 'h := 42'.")
        parser.add_argument("--store", help="Initial store, e.g. 'h=1,l=0'.")

    def build(self, report, config, options):
        universe = config.universe
        lang = Lang.coerce(options["lang"])
        p = self.parse_input(options.get("term"), lang, "term", universe, "--term")
        s0 = self.parse_input(options.get("store"), lang, "store", universe, "--store")
        trace = run(lang, s0, p, universe.fuel, universe, record_rules=True)
        report.fuel_limited = trace.end.value == "TIMEOUT"
        report.lines.append(str(trace))
        report.payload = {
            "lang": lang.value,
            "trace": str(trace),
            "tokens": trace.tokens(),
            "rules": list(trace.rules),
            "steps": trace.steps,
        }
