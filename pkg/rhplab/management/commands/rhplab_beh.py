from rhplab.management.base import LabCommand
from rhplab.syntax import Lang
from rhplab.traces import beh, behavior_json, is_fuel_limited


class Command(LabCommand):
    help = "Print the behavior of a program plugged into a context, one trace per initial store."
    report_name = "beh"

    def add_lab_arguments(self, parser):
        parser.add_argument("--lang", choices=["source", "target"], default="source", help="Language of --term and --ctx.")
        parser.add_argument("--term", help="Program text.")
        parser.add_argument("--ctx", default="hole", help="Context text (default: hole).")

    def build(self, report, config, options):
        universe = config.universe
        lang = Lang.coerce(options["lang"])
        p = self.parse_input(options.get("term"), lang, "term", universe, "--term")
        c = self.parse_input(options.get("ctx"), lang, "ctx", universe, "--ctx")
        behavior = beh(lang, c, p, universe)
        traces = behavior_json(behavior, universe)
        report.fuel_limited = is_fuel_limited(behavior)
        report.lines.extend(traces)
        report.payload = {"lang": lang.value, "traces": traces, "size": len(traces)}
