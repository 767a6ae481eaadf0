"""
The reproduction suite: one row per headline result of the lab, each with
the outcome it is expected to have. Counterexample rows pass when the
underlying check fails with the expected witness.

Every row runs on the configured universe. Exhaustive rows whose cost grows
with the number of programs may lower the term depth, and nothing else; each
row reports the universes it actually ran on.
"""

import logging
import time
from dataclasses import dataclass, replace
from typing import Callable, Optional

import pandas as pd

from .compilers import check_preservation, check_rhp, rhp_witness
from .exceptions import UnknownName
from .gsos import check_bridges, check_law_agreement, check_layered, check_mmodl, check_modl
from .hyperprops import NI, NeverEvent, Top, Verdict, check_fac, low_eq
from .opsem import Event, determinacy_violations
from .syntax import (
    Hole,
    Lang,
    ObsCtx,
    enumerate_contexts,
    enumerate_exprs,
    enumerate_stores,
    enumerate_terms,
    parse,
    render,
)
from .tau_tilde import check_corollary
from .traces import Terminator, Trace, TraceSpace, beh, insertion_counterexamples, two_store_space

logger = logging.getLogger("rhplab.repro")

COLUMNS = ["result", "description", "expected", "observed", "universe", "status"]

LEAKY_ASSIGNMENT = "h := 42"


def _leaky(universe):
    return parse(LEAKY_ASSIGNMENT, Lang.SOURCE, "term", universe)


def _status(verdict):
    return "holds" if verdict.holds else "fails"


def universe_label(universe):
    label = f"vmax={universe.vmax} fuel={universe.fuel} depth={universe.term_depth}"
    if universe.expr_depth:
        label += f" expr_depth={universe.expr_depth}"
    return label


@dataclass(frozen=True)
class ReproRow:
    result: str
    description: str
    expected: str
    run: Callable
    term_depth: Optional[int] = None

    def universe(self, configured):
        if self.term_depth is None or self.term_depth >= configured.term_depth:
            return configured
        return replace(configured, term_depth=self.term_depth)


@dataclass
class Outcome:
    observed: str
    ok: bool
    witness: Optional[dict]
    fuel_limited: bool
    universes: tuple


# ─────────── Rows ───────────

def _assignment_behavior(universe, event):
    traces = set()
    for s in enumerate_stores(universe):
        if s.get("h") == 42:
            traces.add(Trace((s, s), Terminator.TICK))
        else:
            traces.add(Trace((s, event, s.set("h", 42)), Terminator.TICK))
    return frozenset(traces)


def _behaviors(universe):
    p = _leaky(universe)
    source = beh(Lang.SOURCE, Hole(), p, universe)
    target = beh(Lang.TARGET, ObsCtx(Hole()), p, universe)
    ok = source == _assignment_behavior(universe, Event.H) and target == _assignment_behavior(universe, Event.BANG)
    observed = f"{len(source)} source and {len(target)} target traces {'match' if ok else 'differ'}"
    return Outcome(observed, ok, None if ok else {"program": LEAKY_ASSIGNMENT}, False, (universe,))


def _identity_fac(universe):
    v = check_fac("identity", universe, "preserve")
    return Outcome(_status(v), v.holds, v.witness, v.fuel_limited, (universe,))


def _ni_counterexample(v, universe):
    w = v.witness
    stores = [parse(s, Lang.TARGET, "store", universe) for s in w["stores"]]
    return w["context"] == "obs(hole)" and low_eq(*stores, universe)


def _identity_ni(universe):
    found = check_preservation("identity", NI(), universe)
    if found.holds:
        return Outcome("holds", False, {"searched": found.details["programs"]}, found.fuel_limited, (universe,))
    named = check_preservation("identity", NI(), universe, programs=[_leaky(universe)])
    w = found.witness
    ok = _ni_counterexample(found, universe) and not named.holds and _ni_counterexample(named, universe)
    observed = (
        f"fails at {w['program']} in {w['context']} with {w['stores'][0]} vs {w['stores'][1]};"
        f" {LEAKY_ASSIGNMENT} {_status(named)}"
    )
    return Outcome(observed, ok, w, found.fuel_limited or named.fuel_limited, (universe,))


def _sandbox_ni(universe):
    v = check_preservation("sandbox", NI(), universe)
    return Outcome(_status(v), v.holds, v.witness, v.fuel_limited, (universe,))


def _modl(universe):
    squares = [("s_sandbox", "b_erase"), ("s_embed", "b_incl"), ("s_sandbox", "b_incl")]
    verdicts = [check_modl(s, b, universe) for s, b in squares]
    mismatch = verdicts[2].witness or {}
    ok = verdicts[0].holds and verdicts[1].holds and not verdicts[2].holds and mismatch.get("node", "").startswith("h :=")
    observed = ", ".join(_status(v) for v in verdicts)
    witness = None if ok else next((v.witness for v in verdicts[:2] if not v.holds), mismatch)
    return Outcome(observed, ok, witness, False, (universe,))


def _mmodl_sandbox(universe):
    v = check_mmodl("t_id", "b_erase", universe)
    return Outcome(_status(v), v.holds, v.witness, v.fuel_limited, (universe,))


def _layer_mismatch(v):
    w = v.witness
    return w["context"] == "obs(hole)" and w["upper"]["event"] == "#H" and w["lower"]["event"] == "!"


def _mmodl_identity(universe):
    found = check_mmodl("t_id", "b_incl", universe)
    if found.holds:
        return Outcome("holds", False, {"searched": found.details["nodes"]}, False, (universe,))
    named = check_mmodl("t_id", "b_incl", universe, programs=[_leaky(universe)])
    w = found.witness
    ok = _layer_mismatch(found) and not named.holds and _layer_mismatch(named)
    observed = f"fails at {w['program']}: upper {w['upper']['event']} vs lower {w['lower']['event']}"
    return Outcome(observed, ok, w, False, (universe,))


def _rhp(universe):
    sandbox = check_rhp("sandbox", universe, mode="backtranslation")
    identity = check_rhp("identity", universe, mode="search")
    named, named_limited = rhp_witness("identity", universe, "search", _leaky(universe))
    w = identity.witness or {}
    ok = (
        sandbox.holds
        and not identity.holds
        and w.get("context") == "obs(hole)"
        and named is not None
        and named["context"] == "obs(hole)"
    )
    observed = f"sandbox {_status(sandbox)}, identity {_status(identity)} at {w.get('program', '-')} in {w.get('context', '-')}"
    limited = sandbox.fuel_limited or identity.fuel_limited or named_limited
    return Outcome(observed, ok, sandbox.witness or (None if ok else w), limited, (universe,))


def _corollary(universe):
    disagreements = []
    inclusion = {}
    limited = False
    for compiler in ("identity", "sandbox"):
        for h in (NI(), Top(), NeverEvent(Event.BANG)):
            v = check_corollary(compiler, h, universe)
            inclusion[(compiler, h.name)] = v.details["included"]
            limited = limited or v.fuel_limited
            if not v.holds:
                disagreements.append(v.witness)
    ok = not disagreements and not inclusion[("identity", "ni")] and inclusion[("sandbox", "ni")]
    observed = f"{6 - len(disagreements)}/6 agree; identity leaks: {not inclusion[('identity', 'ni')]}"
    return Outcome(observed, ok, disagreements[0] if disagreements else None, limited, (universe,))


def _bridges(universe):
    v = check_bridges(universe)
    return Outcome(_status(v), v.holds, v.witness, False, (universe,))


def _insertion(universe):
    tiny = replace(universe, vmax=1, fuel=8, literal_pool=(0, 1))
    space = two_store_space()
    sampled = insertion_counterexamples(TraceSpace(tiny, Lang.TARGET, fuel=8), samples=1000, seed=0)
    exhaustive = insertion_counterexamples(space, exhaustive=True)
    failures = sampled + exhaustive
    witness = None
    if failures:
        witness = {"hyperproperty": [sorted(str(t) for t in b) for b in failures[0]]}
    return Outcome(f"{len(failures)} counterexample(s)", not failures, witness, False, (tiny, space.universe))


def _layered(universe):
    v = check_layered(universe, fuel=16)
    return Outcome(_status(v), v.holds, v.witness, False, (universe,))


def _hygiene_problems(universe):
    stores = enumerate_stores(universe)
    problems = []
    for lang in (Lang.SOURCE, Lang.TARGET):
        terms = enumerate_terms(universe, lang)
        for s, p, count in determinacy_violations(universe, lang, terms, stores)[:1]:
            problems.append({"check": "determinacy", "store": render(s), "program": render(p), "rules": count})
        law = check_law_agreement(universe, lang)
        if not law.holds:
            problems.append(law.witness)
        kinds = [("term", terms), ("ctx", enumerate_contexts(universe, lang)), ("store", stores)]
        kinds.append(("expr", enumerate_exprs(universe)))
        for kind, items in kinds:
            bad = next((x for x in items if parse(render(x), lang, kind, universe) != x), None)
            if bad is not None:
                problems.append({"check": "round-trip", "kind": kind, "text": render(bad)})
    return problems


def _hygiene(universe):
    # shallow programs again, this time with operators in guards and right-hand sides
    operators = replace(universe, term_depth=min(2, universe.term_depth), expr_depth=max(1, universe.expr_depth))
    problems = _hygiene_problems(universe) + _hygiene_problems(operators)
    return Outcome(f"{len(problems)} problem(s)", not problems, problems[0] if problems else None, False, (universe, operators))


ROWS = [
    ReproRow("behaviors-h42", "behaviors of h := 42 in Source and under one observer", "exact", _behaviors),
    ReproRow("lemma-identity-fac", "identity compiler preserves contextual equivalence", "holds", _identity_fac, 3),
    ReproRow("lemma-identity-ni", "identity compiler does not preserve robust NI", "fails", _identity_ni, 3),
    ReproRow("sandbox-ni", "sandbox compiler preserves robust NI", "holds", _sandbox_ni, 3),
    ReproRow("modl", "syntax/behavior squares: two commute, sandbox with inclusion does not", "holds, holds, fails", _modl),
    ReproRow("mmodl-sandbox", "observer-layer square with erasure", "holds", _mmodl_sandbox),
    ReproRow("mmodl-identity", "observer-layer square with inclusion", "fails", _mmodl_identity),
    ReproRow("rhp", "back-translation works for sandbox, no context works for identity", "sandbox holds, identity fails", _rhp),
    ReproRow("corollary", "preservation agrees with inclusion of the induced target property", "6/6 agree", _corollary, 3),
    ReproRow("bridges", "trace semantics agrees with the unfolded coalgebra", "holds", _bridges, 3),
    ReproRow("insertion", "abstraction after concretization is the identity", "0 counterexample(s)", _insertion),
    ReproRow("layered", "layered coalgebra: compile/collapse, back-translation and bisimulation", "holds", _layered),
    ReproRow("hygiene", "determinacy, rule-format agreement and parser round-trip", "0 problem(s)", _hygiene),
]

ROW_IDS = [row.result for row in ROWS]


def select_rows(scope="all"):
    if scope == "all":
        return list(ROWS)
    for row in ROWS:
        if row.result == scope:
            return [row]
    raise UnknownName(f"unknown repro row {scope!r} (choose all or one of {', '.join(ROW_IDS)})")


def run_repro(scope, universe):
    """Run the selected rows and return the result table plus one verdict per row."""
    records = []
    verdicts = []
    for row in select_rows(scope):
        started = time.perf_counter()
        outcome = row.run(row.universe(universe))
        status = "PASS" if outcome.ok else "FAIL"
        logger.info("repro %s: %s (%.2fs)", row.result, status, time.perf_counter() - started)
        label = "; ".join(universe_label(u) for u in outcome.universes)
        records.append([row.result, row.description, row.expected, outcome.observed, label, status])
        details = {
            "expected": row.expected,
            "observed": outcome.observed,
            "universes": [u.bounds() for u in outcome.universes],
        }
        if outcome.ok:
            verdicts.append((row.result, Verdict(True, fuel_limited=outcome.fuel_limited, details=details)))
        else:
            witness = {"expected": row.expected, "observed": outcome.observed, "detail": outcome.witness}
            verdicts.append((row.result, Verdict(False, witness, outcome.fuel_limited, details)))
    return pd.DataFrame(records, columns=COLUMNS), verdicts
