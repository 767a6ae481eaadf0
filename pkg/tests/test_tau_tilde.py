#!/usr/bin/env python3
"""
Django Unit Test for the induced target hyperproperty

Builds the compilation relation between behavior families and checks that
preservation of a hyperproperty agrees with inclusion of its induced
counterpart, for both compilers.
"""

import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'tests.test_settings')

import django
django.setup()

from tests.base_test import RHPLabTestCase
from rhplab.compilers import compile
from rhplab.hyperprops import NI, Top, family_digests
from rhplab.syntax import Hole, Lang, ObsCtx, parse
from rhplab.tau_tilde import check_corollary, comprel_build, tau_tilde
from rhplab.traces import beh, beh_run


class ComprelTestCase(RHPLabTestCase):
    """Source families against compiled target families"""

    def setUp(self):
        super().setUp()
        self.u = self.tiny_universe()

    def test_identity_relation(self):
        relation = comprel_build("identity", self.u)
        self.assertEqual(len(relation.pairs), 45)
        assert relation.functional
        assert relation.injective
        summary = relation.to_dict()
        assert summary["source_classes"] == summary["target_classes"]
        assert summary["functional_witness"] is None

    def test_equal_programs_share_their_families(self):
        skip = self.term("skip", self.u)
        relation = comprel_build("sandbox", self.u, programs=[skip, self.term("h := h", self.u)])
        (_, source_a, target_a), (_, source_b, target_b) = relation.pairs
        self.assertEqual((source_a, target_a), (source_b, target_b))
        self.assertEqual(source_a, family_digests(Lang.SOURCE, skip, self.u))
        self.assertEqual(target_a, family_digests(Lang.TARGET, compile("sandbox", skip), self.u))
        assert relation.functional and relation.injective


class InducedHyperpropertyTestCase(RHPLabTestCase):
    """Members of the induced hyperproperty and the agreement check"""

    def setUp(self):
        super().setUp()
        self.u = self.tiny_universe()

    def test_members_are_realized(self):
        induced = tau_tilde("identity", NI(), self.u)
        assert induced.name == "tau-tilde(ni)"
        assert induced.behaviors
        for key, (p, c) in list(induced.realizers.items())[:10]:
            realized = beh_run(Lang.TARGET, c, compile("identity", p), self.u)
            self.assertEqual(realized.key, key)
            assert induced.contains(realized.traces(), self.u)
        leaky = self.term("h := 1", self.u, Lang.TARGET)
        outside = beh(Lang.TARGET, ObsCtx(Hole()), leaky, self.u)
        assert induced.contains(outside, self.u)
        assert not tau_tilde("sandbox", NI(), self.u).contains(outside, self.u)
        assert induced.violation(frozenset(), self.u) is not None

    def test_to_dict(self):
        skip = self.term("skip", self.u)
        payload = tau_tilde("sandbox", NI(), self.u, programs=[skip]).to_dict(self.u)
        self.assertEqual(payload["bounds"], self.u.bounds())
        contexts = [m["context"] for m in payload["members"]]
        self.assertEqual(contexts, ["hole"])
        assert parse(payload["members"][0]["program"], Lang.SOURCE, "term", self.u) == skip

    def test_sandbox_agreement(self):
        verdict = check_corollary("sandbox", NI(), self.u)
        assert verdict.holds
        assert verdict.details["preserves"]
        assert verdict.details["included"]

    def test_identity_agreement(self):
        verdict = check_corollary("identity", NI(), self.u)
        assert verdict.holds
        assert not verdict.details["preserves"]
        assert not verdict.details["included"]
        assert "outside_member" in verdict.details

    def test_top_is_trivially_preserved(self):
        verdict = check_corollary("identity", Top(), self.u)
        assert verdict.holds
        assert verdict.details["included"]


if __name__ == "__main__":
    import unittest
    unittest.main()
