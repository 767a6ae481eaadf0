#!/usr/bin/env python3
"""
Django Unit Test for the reproduction suite
"""

import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'tests.test_settings')

import django
django.setup()

import pytest

from tests.base_test import RHPLabTestCase
from rhplab.exceptions import UnknownName
from rhplab.repro import COLUMNS, ROW_IDS, ROWS, run_repro, select_rows, universe_label


class ReproTestCase(RHPLabTestCase):
    def setUp(self):
        super().setUp()
        self.u = self.fixture_universe()

    def test_row_selection(self):
        assert len(select_rows("all")) == len(ROW_IDS) == len(set(ROW_IDS))
        self.assertEqual([r.result for r in select_rows("rhp")], ["rhp"])
        with self.assertRaises(UnknownName):
            select_rows("lemma-42")

    def test_rows_only_lower_the_depth(self):
        for row in ROWS:
            ran_on = row.universe(self.u)
            assert ran_on.problems() == []
            self.assertEqual(
                (ran_on.vars, ran_on.vmax, ran_on.fuel, ran_on.literal_pool),
                (self.u.vars, self.u.vmax, self.u.fuel, self.u.literal_pool),
            )
            assert ran_on.term_depth in (3, 4)
        shallow = self.tiny_universe()
        assert all(row.universe(shallow) is shallow for row in ROWS)
        self.assertEqual(universe_label(self.u), "vmax=63 fuel=64 depth=4")

    def test_behavior_row(self):
        table, verdicts = run_repro("behaviors-h42", self.u)
        self.assertEqual(list(table.columns), COLUMNS)
        self.assertEqual(table.loc[0, "status"], "PASS")
        self.assertEqual(table.loc[0, "observed"], "4096 source and 4096 target traces match")
        self.assertEqual(table.loc[0, "universe"], "vmax=63 fuel=64 depth=4")
        assert verdicts[0][1].holds
        self.assertEqual(verdicts[0][1].details["universes"], [self.u.bounds()])

    def test_identity_noninterference_row_searches(self):
        table, verdicts = run_repro("lemma-identity-ni", self.u)
        self.assertEqual(table.loc[0, "status"], "PASS")
        observed = table.loc[0, "observed"]
        assert observed.startswith("fails at h := 0 in obs(hole)"), observed
        assert observed.endswith("h := 42 fails"), observed
        self.assertEqual(verdicts[0][1].details["universes"][0]["term_depth"], 3)

    @pytest.mark.slow
    def test_identity_layer_square_row(self):
        table, _ = run_repro("mmodl-identity", self.u)
        self.assertEqual(table.loc[0, "observed"], "fails at h := 0: upper #H vs lower !")
        self.assertEqual(table.loc[0, "status"], "PASS")

    def test_identity_layer_square_row_on_a_small_universe(self):
        u = self.tiny_universe(vmax=63, literal_pool=(0, 1, 2, 42), term_depth=1)
        table, _ = run_repro("mmodl-identity", u)
        self.assertEqual(table.loc[0, "observed"], "fails at h := 0: upper #H vs lower !")
        self.assertEqual(table.loc[0, "status"], "PASS")

    def test_insertion_row(self):
        table, verdicts = run_repro("insertion", self.u)
        self.assertEqual(table.loc[0, "observed"], "0 counterexample(s)")
        self.assertEqual(table.loc[0, "universe"], "vmax=1 fuel=8 depth=4; vmax=1 fuel=1 depth=4")
        self.assertEqual(len(verdicts[0][1].details["universes"]), 2)

    @pytest.mark.slow
    def test_every_row_passes(self):
        table, verdicts = run_repro("all", self.u)
        self.assertEqual(list(table["result"]), ROW_IDS)
        failing = table[table["status"] != "PASS"]
        assert failing.empty, failing.to_string(index=False)
        assert all(v.holds for _, v in verdicts)
        assert any("expr_depth=1" in label for label in table["universe"])


if __name__ == "__main__":
    import unittest
    unittest.main()
