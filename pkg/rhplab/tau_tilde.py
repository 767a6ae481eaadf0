"""
The compilation relation between context-indexed behavior families, the
explicit smallest target hyperproperty induced by a compiler, and the
agreement check between preservation and inclusion.

Behaviors are identified by the digest of their ``BatchRun``; each member of
the induced hyperproperty keeps a (program, context) pair that realizes it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import partial
from typing import Optional

from .batch import BatchRun
from .compilers import check_preservation, get_compiler
from .hyperprops import Hyperproperty, Verdict, program_families, robust_sat
from .syntax import Lang, enumerate_contexts, enumerate_terms, render
from .traces import behavior_json, beh_run
from .workers import parallel_map

logger = logging.getLogger("rhplab.tau_tilde")


@dataclass
class Comprel:
    compiler: str
    pairs: list
    functional_witness: Optional[dict] = None
    injective_witness: Optional[dict] = None

    @property
    def functional(self):
        return self.functional_witness is None

    @property
    def injective(self):
        return self.injective_witness is None

    def to_dict(self):
        return {
            "compiler": self.compiler,
            "pairs": len(self.pairs),
            "source_classes": len({s for _, s, _ in self.pairs}),
            "target_classes": len({t for _, _, t in self.pairs}),
            "functional": self.functional,
            "injective": self.injective,
            "functional_witness": self.functional_witness,
            "injective_witness": self.injective_witness,
        }


def _first_clash(pairs, key, other):
    seen = {}
    for program, *families in pairs:
        known = seen.setdefault(families[key], (program, families[other]))
        if known[1] != families[other]:
            return {"programs": [render(known[0]), render(program)]}
    return None


def comprel_build(compiler, universe, programs=None):
    compiler = get_compiler(compiler)
    rows = program_families(compiler.name, universe, programs)
    pairs = [(p, source, target) for p, (source, target), _ in rows]
    relation = Comprel(compiler.name, pairs, _first_clash(pairs, 0, 1), _first_clash(pairs, 1, 0))
    logger.info(
        "compilation relation for %s: %d pairs, functional=%s, injective=%s",
        compiler.name, len(pairs), relation.functional, relation.injective,
    )
    return relation


class InducedHyperprop(Hyperproperty):
    """Target behaviors of compiled robust sources, each with a (program, context) realizing it."""

    def __init__(self, compiler, source_property, universe, realizers, violations, fuel_limited=False):
        self.compiler = get_compiler(compiler)
        self.source_property = source_property
        self.universe = universe
        self.realizers = dict(realizers)
        self.violations = dict(violations)
        self.fuel_limited = fuel_limited
        self.name = f"tau-tilde({source_property.name})"

    @property
    def behaviors(self):
        return frozenset(self.realizers)

    def realize(self, key):
        p, c = self.realizers[key]
        return beh_run(Lang.TARGET, c, self.compiler.compile(p), self.universe)

    def violation_run(self, run, universe):
        if run.key in self.realizers:
            return None
        return {"reason": f"behavior is not one of the {len(self.realizers)} induced behaviors"}

    def violation(self, behavior, universe):
        run = BatchRun.from_traces(behavior, universe, universe.fuel)
        if run is None:
            return {"reason": "not the behavior of a program: it needs one trace per initial store"}
        return self.violation_run(run, universe)

    def outside(self, h):
        """The first member that ``h`` rejects, as ``(digest, witness)``, or ``None``."""
        for key in self.realizers:
            if h is self.source_property:
                found = self.violations[key]
            else:
                found = h.violation_run(self.realize(key), self.universe)
            if found is not None:
                return key, found
        return None

    def to_dict(self, universe):
        return {
            "label": self.name,
            "bounds": universe.bounds(),
            "members": [
                {"program": render(p), "context": render(c), "behavior": behavior_json(self.realize(key).traces(), universe)}
                for key, (p, c) in self.realizers.items()
            ],
        }


def _realized(compiler, h, universe, p):
    if not robust_sat(Lang.SOURCE, p, h, universe).holds:
        return []
    compiled = compiler.compile(p)
    found = []
    for c in enumerate_contexts(universe, Lang.TARGET):
        run = beh_run(Lang.TARGET, c, compiled, universe)
        found.append((run.key, p, c, h.violation_run(run, universe), run.fuel_limited))
    return found


def tau_tilde(compiler, h, universe, programs=None):
    compiler = get_compiler(compiler)
    if programs is None:
        programs = enumerate_terms(universe, Lang.SOURCE)
    realizers = {}
    violations = {}
    limited = False
    for found in parallel_map(partial(_realized, compiler, h, universe), programs):
        for key, p, c, violation, fuel_limited in found:
            if key not in realizers:
                realizers[key] = (p, c)
                violations[key] = violation
            limited = limited or fuel_limited
    logger.info("tau-tilde(%s) for %s has %d member(s)", h.name, compiler.name, len(realizers))
    return InducedHyperprop(compiler, h, universe, realizers, violations, limited)


def check_corollary(compiler, h, universe, programs=None, induced=None):
    compiler = get_compiler(compiler)
    preservation = check_preservation(compiler, h, universe, programs)
    if induced is None:
        induced = tau_tilde(compiler, h, universe, programs)
    outside = induced.outside(h)
    included = outside is None
    details = {
        "compiler": compiler.name,
        "hyperproperty": h.name,
        "preserves": preservation.holds,
        "included": included,
        "members": len(induced.realizers),
        "bounds": universe.bounds(),
    }
    if outside is not None:
        p, c = induced.realizers[outside[0]]
        details["outside_member"] = {"program": render(p), "context": render(c)}
    limited = preservation.fuel_limited or induced.fuel_limited
    if preservation.holds == included:
        return Verdict(True, fuel_limited=limited, details=details)
    witness = {"discrepancy": "preservation and inclusion disagree", "preservation_witness": preservation.witness}
    witness.update(details.get("outside_member", {}))
    return Verdict(False, witness, limited, details)
