#!/usr/bin/env python3
"""
Django Unit Test for the lab commands

Drives the rhplab_* management commands through the console dispatcher and
checks reports, witnesses and exit codes (0 holds, 1 fails, 2 usage or
configuration error).
"""

import json
import os
import sys
import tempfile
from io import StringIO
from pathlib import Path

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'tests.test_settings')

import django
django.setup()

from django.core.management import call_command

from tests.base_test import RHPLabTestCase
from rhplab.cli import SUBCOMMANDS, main, run_command
from rhplab.hyperprops import NI
from rhplab.syntax import Lang, parse
from rhplab.traces import beh

TINY = {
    "vars": [["h", "high"], ["l", "low"]],
    "vmax": 1,
    "fuel": 8,
    "term_depth": 2,
    "ctx_depth": 2,
    "literal_pool": [0, 1],
}


class CommandTestCase(RHPLabTestCase):
    def setUp(self):
        super().setUp()
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.config = str(Path(tmp.name) / "tiny.json")
        Path(self.config).write_text(json.dumps(TINY), encoding="utf-8")

    def dispatch(self, *argv):
        out, err = StringIO(), StringIO()
        report, code = run_command(list(argv), stdout=out, stderr=err)
        return report, code, out.getvalue(), err.getvalue()


class RunCommandTestCase(CommandTestCase):
    """run and beh"""

    def test_observed_assignment(self):
        report, code, out, _ = self.dispatch("run", "--lang", "target", "--term", "obs(h := 42)", "--store", "h=1,l=0")
        self.assertEqual(code, 0)
        self.assertEqual(out.splitlines()[0], "{h=1,l=0} ! {h=42,l=0} OK")
        self.assertEqual(report.payload["rules"], ["bang1"])
        assert "wall time:" in out

    def test_json_report(self):
        _, code, out, _ = self.dispatch("run", "--term", "h := 42", "--store", "h=1,l=0", "--json")
        data = json.loads(out)
        self.assertEqual(code, 0)
        self.assertEqual(data["output"]["trace"], "{h=1,l=0} #H {h=42,l=0} OK")
        self.assertEqual(data["bounds"]["vmax"], 63)
        assert "wall_time" not in data
        _, _, timed, _ = self.dispatch("run", "--term", "skip", "--store", "h=0,l=0", "--json", "--timing")
        assert "wall_time" in json.loads(timed)

    def test_management_command(self):
        out = StringIO()
        call_command("rhplab_run", "--term", "l := 2", "--store", "h=0,l=0", "--fuel", "3", stdout=out)
        assert out.getvalue().startswith("{h=0,l=0} {h=0,l=2} OK")

    def test_behavior(self):
        report, code, out, _ = self.dispatch("beh", "--config", self.config, "--term", "l := 1", "--json")
        self.assertEqual(code, 0)
        data = json.loads(out)
        self.assertEqual(data["output"]["size"], 4)
        self.assertEqual(data["lines"], data["output"]["traces"])
        assert not report.fuel_limited

    def test_behavior_under_observer(self):
        _, code, out, _ = self.dispatch(
            "beh", "--config", self.config, "--lang", "target", "--ctx", "obs(hole)", "--term", "h := 1"
        )
        self.assertEqual(code, 0)
        assert "{h=0,l=0} ! {h=1,l=0} OK" in out.splitlines()


class CheckCommandTestCase(CommandTestCase):
    """check and tau-tilde verdicts"""

    def test_sandbox_preserves_noninterference(self):
        report, code, out, _ = self.dispatch("check", "preserve", "--config", self.config)
        self.assertEqual(code, 0)
        assert report.holds
        assert "preserve: HOLDS" in out

    def test_identity_fails_with_witness(self):
        report, code, _, err = self.dispatch("check", "preserve", "--compiler", "identity", "--config", self.config)
        self.assertEqual(code, 1)
        self.assertEqual(report.witnesses[0]["witness"]["program"], "h := 0")
        assert "check failed: preserve" in err

    def test_robust_witness_replays(self):
        universe = self.tiny_universe()
        report, code, _, _ = self.dispatch(
            "check", "ni-robust", "--lang", "target", "--term", "h := 1", "--config", self.config
        )
        self.assertEqual(code, 1)
        w = report.witnesses[0]["witness"]
        b = beh(
            Lang.TARGET,
            parse(w["context"], Lang.TARGET, "ctx", universe),
            parse(w["program"], Lang.TARGET, "term", universe),
            universe,
        )
        assert NI().violation(b, universe) is not None

    def test_context_equivalence(self):
        _, code, _, _ = self.dispatch("check", "ctxeq", "--term", "h := h", "--term2", "skip", "--config", self.config)
        self.assertEqual(code, 0)

    def test_diagrams(self):
        self.assertEqual(self.dispatch("check", "modl", "--config", self.config)[1], 0)
        self.assertEqual(self.dispatch("check", "modl", "--b", "b_incl", "--config", self.config)[1], 1)
        self.assertEqual(self.dispatch("check", "mmodl", "--compiler", "identity", "--config", self.config)[1], 1)

    def test_json_is_deterministic(self):
        argv = ("check", "rhp", "--compiler", "identity", "--config", self.config, "--json")
        first = self.dispatch(*argv)
        second = self.dispatch(*argv)
        self.assertEqual(first[1], 1)
        self.assertEqual(first[2], second[2])
        self.assertEqual(json.loads(first[2])["command"], "check rhp")

    def test_tau_tilde(self):
        report, code, out, _ = self.dispatch("tau-tilde", "--compiler", "identity", "--config", self.config, "--json")
        self.assertEqual(code, 0)
        data = json.loads(out)
        self.assertEqual(data["output"]["tau_tilde"]["label"], "tau-tilde(ni)")
        assert data["output"]["comprel"]["functional"]
        assert not report.verdicts[0]["details"]["included"]


class ExitCodeTestCase(CommandTestCase):
    """Usage and configuration errors exit with 2"""

    def assert_usage_error(self, *argv):
        report, code, _, err = self.dispatch(*argv)
        self.assertEqual(code, 2, err)
        assert err
        return report

    def test_unknown_subcommand(self):
        self.assert_usage_error()
        self.assert_usage_error("bogus")
        assert sorted(SUBCOMMANDS) == ["beh", "check", "repro", "run", "tau-tilde"]

    def test_bad_arguments(self):
        self.assert_usage_error("check", "secrecy", "--config", self.config)
        self.assert_usage_error("check", "ni-robust", "--config", self.config)
        self.assert_usage_error("check", "preserve", "--compiler", "optimizing", "--config", self.config)
        self.assert_usage_error("check", "layered", "--compiler", "identity", "--config", self.config)
        self.assert_usage_error("run", "--term", "h := 2", "--store", "h=0,l=0", "--config", self.config)

    def test_bad_configuration(self):
        self.assert_usage_error("check", "fac", "--config", self.config + ".missing")
        self.assert_usage_error("run", "--term", "skip", "--store", "h=0,l=0", "--fuel", "0")

    def test_main_exits_with_code(self):
        with self.assertRaises(SystemExit) as cm:
            main(["bogus"])
        self.assertEqual(cm.exception.code, 2)


class ReproCommandTestCase(CommandTestCase):
    """Single rows of the reproduction suite"""

    def test_identity_noninterference_counterexample(self):
        report, code, out, _ = self.dispatch("repro", "lemma-identity-ni")
        self.assertEqual(code, 0)
        self.assertEqual([v["name"] for v in report.verdicts], ["lemma-identity-ni"])
        row = report.payload["rows"][0]
        self.assertEqual((row["expected"], row["status"]), ("fails", "PASS"))
        assert "obs(hole)" in row["observed"]
        assert "PASS" in out
        ran_on = report.verdicts[0]["details"]["universes"][0]
        self.assertEqual((ran_on["vmax"], ran_on["fuel"], ran_on["term_depth"]), (63, 64, 3))
        self.assertEqual(ran_on["literal_pool"], [0, 1, 2, 42])

    def test_mmodl_sandbox(self):
        report, code, _, _ = self.dispatch("repro", "mmodl-sandbox", "--config", self.config)
        self.assertEqual(code, 0)
        row = report.payload["rows"][0]
        self.assertEqual((row["observed"], row["universe"]), ("holds", "vmax=1 fuel=8 depth=2"))
        self.assertEqual(report.bounds["configured"]["vmax"], 1)
        self.assertEqual(report.bounds["rows"]["mmodl-sandbox"][0]["term_depth"], 2)

    def test_unknown_row(self):
        _, code, _, _ = self.dispatch("repro", "lemma-unknown")
        self.assertEqual(code, 2)


if __name__ == "__main__":
    import unittest
    unittest.main()
