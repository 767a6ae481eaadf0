from rhplab.hyperprops import parse_hyperprop
from rhplab.management.base import LabCommand
from rhplab.syntax import render
from rhplab.tau_tilde import check_corollary, comprel_build, tau_tilde


class Command(LabCommand):
    help = "Build the target hyperproperty induced by a compiler and check it against preservation."
    report_name = "tau-tilde"

    def add_lab_arguments(self, parser):
        parser.add_argument("--compiler", default="sandbox", help="identity or sandbox.")
        parser.add_argument("--hyperprop", default="ni", help="ni, top, never:H, never:! or explicit:<file>.")

    def build(self, report, config, options):
        universe = config.universe
        h = parse_hyperprop(options["hyperprop"], universe)
        induced = tau_tilde(options["compiler"], h, universe)
        relation = comprel_build(options["compiler"], universe)
        verdict = report.add_verdict("corollary", check_corollary(options["compiler"], h, universe, induced=induced))

        report.payload = {"tau_tilde": induced.to_dict(universe), "comprel": relation.to_dict()}
        report.lines.append(f"{induced.name} for {options['compiler']}: {len(induced.behaviors)} behavior(s)")
        for p, c in induced.realizers.values():
            report.lines.append(f"  {render(c)} around {render(p)}")
        report.lines.append(
            f"preserves: {verdict.details['preserves']}  included: {verdict.details['included']}  "
            f"functional: {relation.functional}  injective: {relation.injective}"
        )
