#!/usr/bin/env python3
"""
Django Unit Test for whole-universe execution

The array runner must agree with the single-store interpreter, trace for
trace, on every enumerated program of both languages.
"""

import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'tests.test_settings')

import django
django.setup()

import numpy as np

from tests.base_test import RHPLabTestCase
from rhplab.batch import (
    EV_BANG,
    BatchRun,
    applicable_counts,
    encode,
    identity_codes,
    run_batch,
    store_matrix,
)
from rhplab.exceptions import ForbiddenConstruct
from rhplab.hyperprops import NI
from rhplab.opsem import derive
from rhplab.syntax import Lang, enumerate_contexts, enumerate_stores, enumerate_terms, plug, render
from rhplab.traces import beh_run, run


class StoreCodeTestCase(RHPLabTestCase):
    def test_codes_follow_the_enumeration(self):
        u = self.fixture_universe()
        np.testing.assert_array_equal(encode(store_matrix(u), u), identity_codes(u))
        s = self.store(u, h=42, l=7)
        row = enumerate_stores(u).index(s)
        assert store_matrix(u)[row].tolist() == [42, 7]


class BatchRunTestCase(RHPLabTestCase):
    """Array runs against the reference interpreter"""

    def setUp(self):
        super().setUp()
        self.u = self.tiny_universe(term_depth=3)

    def test_runs_match_the_interpreter(self):
        for lang in (Lang.SOURCE, Lang.TARGET):
            for c in enumerate_contexts(self.u, lang):
                for p in enumerate_terms(self.u, lang):
                    program = plug(c, p)
                    expected = {run(lang, s, program, self.u.fuel, self.u) for s in enumerate_stores(self.u)}
                    self.assertEqual(run_batch(lang, program, self.u).traces(), expected, render(program))

    def test_rule_counts_match_derivations(self):
        for lang in (Lang.SOURCE, Lang.TARGET):
            for p in enumerate_terms(self.u, lang):
                counts = applicable_counts(lang, self.u, p)
                expected = [len(derive(lang, self.u, s, p)) for s in enumerate_stores(self.u)]
                self.assertEqual(counts.tolist(), expected, render(p))

    def test_noninterference_matches_the_trace_check(self):
        for c in enumerate_contexts(self.u, Lang.TARGET):
            for p in enumerate_terms(self.u, Lang.TARGET):
                found = beh_run(Lang.TARGET, c, p, self.u)
                expected = NI().violation(found.traces(), self.u)
                self.assertEqual(NI().violation_run(found, self.u), expected, render(plug(c, p)))

    def test_rebuilt_from_traces(self):
        p = self.term("obs(h := 1) ; while l { l := 0 }", self.u, Lang.TARGET)
        found = run_batch(Lang.TARGET, p, self.u)
        assert found.has_event(EV_BANG)
        rebuilt = BatchRun.from_traces(found.traces(), self.u, self.u.fuel)
        assert rebuilt == found
        self.assertEqual(rebuilt.key, found.key)
        assert BatchRun.from_traces(frozenset(list(found.traces())[:1]), self.u, self.u.fuel) is None

    def test_timeouts_are_marked(self):
        found = run_batch(Lang.SOURCE, self.term("while 1 { skip }", self.u), self.u, fuel=3)
        assert found.fuel_limited
        assert found.length.tolist() == [3] * len(enumerate_stores(self.u))

    def test_runs_of_different_fuel_do_not_compare(self):
        p = self.term("h := 1", self.u)
        with self.assertRaises(ValueError):
            run_batch(Lang.SOURCE, p, self.u, fuel=2).first_difference(run_batch(Lang.SOURCE, p, self.u, fuel=3))

    def test_foreign_constructs_are_rejected(self):
        with self.assertRaises(ForbiddenConstruct):
            run_batch(Lang.SOURCE, self.term("obs(skip)", self.u, Lang.TARGET), self.u)


if __name__ == "__main__":
    import unittest
    unittest.main()
