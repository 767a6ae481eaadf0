#!/usr/bin/env python3
"""
Django Unit Test for the compilers

Compilation, behavior translation, back-translation and the robust
preservation checkers for the identity and sandbox compilers.
"""

import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'tests.test_settings')

import django
django.setup()

from tests.base_test import RHPLabTestCase
from rhplab.compilers import (
    COMPILERS,
    backtranslate,
    check_preservation,
    check_rhp,
    compile,
    extend,
    get_compiler,
    rhp_witness,
    tau,
    translate_behavior,
)
from rhplab.exceptions import IllFormedTerm, TraceError, UnknownName
from rhplab.hyperprops import NI, NeverEvent, Top, low_eq
from rhplab.opsem import Event
from rhplab.syntax import (
    Hole,
    Lang,
    Obs,
    ObsCtx,
    Seq,
    Skip,
    While,
    enumerate_contexts,
    enumerate_exprs,
    enumerate_terms,
    parse,
    render,
)
from rhplab.traces import alpha, beh


class CompileTestCase(RHPLabTestCase):
    """Syntax translation"""

    def setUp(self):
        super().setUp()
        self.u = self.fixture_universe()
        self.p = self.term("h := 1 ; while l { l := 0 }", self.u)

    def test_identity(self):
        assert compile("identity", self.p) == self.p

    def test_sandbox_wraps_every_assignment(self):
        compiled = compile("sandbox", self.p)
        self.assertEqual(render(compiled), "sandbox{ h := 1 } ; while l { sandbox{ l := 0 } }")
        assert parse(render(compiled), Lang.TARGET, "term", self.u) == compiled

    def test_registry(self):
        assert sorted(COMPILERS) == ["identity", "sandbox"]
        assert get_compiler("sandbox").b_name == "b_erase"
        assert get_compiler("identity").b_name == "b_incl"
        with self.assertRaises(UnknownName):
            get_compiler("optimizing")

    def test_only_source_terms_compile(self):
        with self.assertRaises(IllFormedTerm):
            extend("s_sandbox", Obs(Skip()))

    def test_backtranslation_is_the_empty_context(self):
        assert backtranslate(ObsCtx(ObsCtx(Hole()))) == Hole()


class TranslationTestCase(RHPLabTestCase):
    """Behavior translation"""

    def setUp(self):
        super().setUp()
        self.u = self.tiny_universe()

    def test_tau_erases_internal_events(self):
        b = beh(Lang.SOURCE, Hole(), self.term("h := 1", self.u), self.u)
        erased = tau(b)
        assert len(erased) == len(b)
        assert not any(t.contains(Event.H) for t in erased)
        assert translate_behavior("b_erase", b) == erased
        assert translate_behavior("b_incl", b) == b

    def test_tau_rejects_outputs(self):
        observed = beh(Lang.TARGET, ObsCtx(Hole()), self.term("h := 1", self.u, Lang.TARGET), self.u)
        with self.assertRaises(TraceError):
            tau(observed)

    def test_unknown_behavior_map(self):
        with self.assertRaises(UnknownName):
            translate_behavior("b_magic", frozenset())


class RobustPreservationTestCase(RHPLabTestCase):
    """RHP and hyperproperty preservation"""

    def setUp(self):
        super().setUp()
        self.u = self.tiny_universe()

    def test_sandbox_backtranslation(self):
        verdict = check_rhp("sandbox", self.u, mode="backtranslation")
        assert verdict.holds
        self.assertEqual(verdict.details["programs"], 45)

    def test_sandbox_search(self):
        assert check_rhp("sandbox", self.u).holds

    def test_identity_has_no_matching_source_context(self):
        verdict = check_rhp("identity", self.u)
        assert not verdict.holds
        self.assertEqual(verdict.witness["program"], "h := 0")
        self.assertEqual(verdict.witness["context"], "obs(hole)")
        self.assertEqual(verdict.witness["unmatched_trace"], "{h=1,l=0} ! {h=0,l=0} OK")

    def test_unknown_mode(self):
        with self.assertRaises(UnknownName):
            check_rhp("sandbox", self.u, mode="guess")

    def test_sandbox_preserves_noninterference(self):
        verdict = check_preservation("sandbox", NI(), self.u)
        assert verdict.holds
        assert verdict.details["robust_sources"] > 0

    def test_identity_breaks_noninterference(self):
        verdict = check_preservation("identity", NI(), self.u)
        assert not verdict.holds
        w = verdict.witness
        self.assertEqual(w["program"], "h := 0")
        self.assertEqual(w["compiled"], "h := 0")
        self.assertEqual(w["context"], "obs(hole)")

    def test_identity_breaks_noninterference_for_h42(self):
        u = self.fixture_universe()
        verdict = check_preservation("identity", NI(), u, programs=[self.term("h := 42", u)])
        assert not verdict.holds
        first, second = (parse(s, Lang.TARGET, "store", u) for s in verdict.witness["stores"])
        assert low_eq(first, second, u)
        assert {first.get("h"), second.get("h")} == {0, 42}

    def test_other_hyperproperties(self):
        assert check_preservation("identity", Top(), self.u).holds
        assert not check_preservation("identity", NeverEvent(Event.BANG), self.u).holds
        assert check_preservation("sandbox", NeverEvent(Event.BANG), self.u).holds


class CompilerLawTestCase(RHPLabTestCase):
    """Structural and behavioral laws of both compilers over enumerated programs"""

    def setUp(self):
        super().setUp()
        self.u = self.tiny_universe(term_depth=3)
        self.programs = enumerate_terms(self.u, Lang.SOURCE)

    def test_tau_is_erasure_on_source_behaviors(self):
        for p in self.programs:
            b = beh(Lang.SOURCE, Hole(), p, self.u)
            self.assertEqual(tau(b), alpha(b), render(p))

    def test_sandboxed_programs_show_no_event(self):
        for p in self.programs:
            compiled = compile("sandbox", p)
            for c in enumerate_contexts(self.u, Lang.TARGET):
                for t in beh(Lang.TARGET, c, compiled, self.u):
                    assert not t.contains(Event.H) and not t.contains(Event.BANG), (render(c), render(p), str(t))

    def test_compilation_is_homomorphic(self):
        small = enumerate_terms(self.tiny_universe(term_depth=1), Lang.SOURCE)
        guards = enumerate_exprs(self.u)[:4]
        for name in COMPILERS:
            for p in small:
                for q in small:
                    self.assertEqual(compile(name, Seq(p, q)), Seq(compile(name, p), compile(name, q)))
                for e in guards:
                    self.assertEqual(compile(name, While(e, p)), While(e, compile(name, p)))

    def test_backtranslation_success_implies_search_success(self):
        for name in COMPILERS:
            for p in self.programs:
                by_backtranslation, _ = rhp_witness(name, self.u, "backtranslation", p)
                if by_backtranslation is None:
                    by_search, _ = rhp_witness(name, self.u, "search", p)
                    assert by_search is None, (name, render(p))


if __name__ == "__main__":
    import unittest
    unittest.main()
