from django.core.management.base import CommandError

from rhplab.compilers import check_preservation, check_rhp, get_compiler
from rhplab.gsos import check_layered, check_mmodl, check_modl
from rhplab.hyperprops import Verdict, check_fac, ctx_equiv, parse_hyperprop, robust_sat
from rhplab.management.base import LabCommand
from rhplab.syntax import Lang
from rhplab.traces import TraceSpace, insertion_counterexamples, two_store_space

CHECKS = ("ni-robust", "ctxeq", "fac", "modl", "mmodl", "rhp", "preserve", "layered", "insertion")


class Command(LabCommand):
    help = "Run one of the lab's checks and report the verdict with its witness."
    report_name = "check"

    def add_lab_arguments(self, parser):
        parser.add_argument("check", choices=CHECKS, help="Which check to run.")
        parser.add_argument("--lang", choices=["source", "target"], default="source")
        parser.add_argument("--term", help="Program text (ni-robust, ctxeq).")
        parser.add_argument("--term2", help="Second program text (ctxeq).")
        parser.add_argument("--compiler", default="sandbox", help="identity or sandbox.")
        parser.add_argument("--hyperprop", default="ni", help="ni, top, never:H, never:! or explicit:<file>.")
        parser.add_argument("--mode", choices=["search", "backtranslation"], default="search", help="RHP mode.")
        parser.add_argument("--direction", choices=["preserve", "reflect", "both"], default="preserve")
        parser.add_argument("--s", dest="s_name", help="Syntax map (modl); defaults to the compiler's.")
        parser.add_argument("--b", dest="b_name", help="Behavior map; defaults to the compiler's.")
        parser.add_argument("--t", dest="t_name", default="t_id", help="Context map (mmodl).")
        parser.add_argument("--samples", type=int, default=1000, help="Sampled hyperproperties (insertion).")
        parser.add_argument("--seed", type=int, default=0, help="Sampling seed (insertion).")
        parser.add_argument("--exhaustive", action="store_true", help="insertion: also check every trace set of a two-store space.")

    def build(self, report, config, options):
        name = options["check"]
        report.command = f"check {name}"
        verdict = getattr(self, "check_" + name.replace("-", "_"))(config.universe, options)
        report.add_verdict(name, verdict)

    def check_ni_robust(self, universe, options):
        lang = Lang.coerce(options["lang"])
        p = self.parse_input(options.get("term"), lang, "term", universe, "--term")
        return robust_sat(lang, p, parse_hyperprop(options["hyperprop"], universe), universe)

    def check_ctxeq(self, universe, options):
        lang = Lang.coerce(options["lang"])
        p1 = self.parse_input(options.get("term"), lang, "term", universe, "--term")
        p2 = self.parse_input(options.get("term2"), lang, "term", universe, "--term2")
        return ctx_equiv(lang, p1, p2, universe)

    def check_fac(self, universe, options):
        return check_fac(get_compiler(options["compiler"]).name, universe, options["direction"])

    def check_modl(self, universe, options):
        compiler = get_compiler(options["compiler"])
        return check_modl(options.get("s_name") or compiler.s_name, options.get("b_name") or compiler.b_name, universe)

    def check_mmodl(self, universe, options):
        compiler = get_compiler(options["compiler"])
        return check_mmodl(options["t_name"], options.get("b_name") or compiler.b_name, universe)

    def check_rhp(self, universe, options):
        return check_rhp(options["compiler"], universe, options["mode"])

    def check_preserve(self, universe, options):
        return check_preservation(options["compiler"], parse_hyperprop(options["hyperprop"], universe), universe)

    def check_layered(self, universe, options):
        if options["compiler"] != "sandbox":
            raise CommandError("the layered check is defined for the sandbox compiler", returncode=2)
        return check_layered(universe, fuel=options.get("fuel") or 16, b_name=options.get("b_name") or "b_erase")

    def check_insertion(self, universe, options):
        space = TraceSpace(universe, Lang.TARGET, fuel=options.get("fuel") or 8)
        failures = insertion_counterexamples(space, samples=options["samples"], seed=options["seed"])
        checked = {"samples": options["samples"], "seed": options["seed"], "fuel": space.fuel}
        if options["exhaustive"]:
            failures += insertion_counterexamples(two_store_space(), exhaustive=True)
            checked["exhaustive"] = True
        if failures:
            witness = {"hyperproperty": [sorted(str(t) for t in b) for b in failures[0]]}
            return Verdict(False, witness, details=dict(checked, failures=len(failures)))
        return Verdict(True, details=checked)
