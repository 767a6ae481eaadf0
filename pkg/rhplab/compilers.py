"""
The identity and sandbox compilers, behavior translation, context
back-translation and the robust-preservation checkers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import partial

from .batch import EV_BANG
from .exceptions import IllFormedTerm, TraceError, UnknownName
from .hyperprops import Verdict, robust_sat
from .opsem import Event
from .syntax import (
    Assign,
    Hole,
    Lang,
    Leaf,
    Sandbox,
    Seq,
    Skip,
    While,
    enumerate_contexts,
    enumerate_terms,
    render,
)
from .traces import beh_run
from .workers import parallel_first

logger = logging.getLogger("rhplab.compilers")


# ─────────── Syntax translations (one constructor layer) ───────────

def s_embed(node):
    return node


def s_sandbox(node):
    if isinstance(node, Assign):
        return Sandbox(node)
    return node


SYNTAX_MAPS = {"s_embed": s_embed, "s_sandbox": s_sandbox}


def extend(s_name, term):
    """Apply the one-layer map ``s_name`` at every Source constructor of ``term``; leaves are kept."""
    s = SYNTAX_MAPS[s_name]
    if isinstance(term, Leaf):
        return term
    if isinstance(term, (Skip, Assign)):
        return s(term)
    if isinstance(term, Seq):
        return s(Seq(extend(s_name, term.first), extend(s_name, term.second)))
    if isinstance(term, While):
        return s(While(term.guard, extend(s_name, term.body)))
    raise IllFormedTerm(f"{type(term).__name__} is not a Source constructor")


@dataclass(frozen=True)
class Compiler:
    name: str
    s_name: str
    b_name: str

    def compile(self, p):
        return extend(self.s_name, p)

    def translate(self, behavior):
        return translate_behavior(self.b_name, behavior)

    def translate_run(self, run):
        return translate_run(self.b_name, run)


COMPILERS = {
    "identity": Compiler("identity", "s_embed", "b_incl"),
    "sandbox": Compiler("sandbox", "s_sandbox", "b_erase"),
}


def get_compiler(name):
    if isinstance(name, Compiler):
        return name
    try:
        return COMPILERS[name]
    except KeyError:
        raise UnknownName(f"unknown compiler {name!r} (choose from {', '.join(sorted(COMPILERS))})")


def compile(c, p):  # noqa: A001
    return get_compiler(c).compile(p)


# ─────────── Behavior translation ───────────

def tau(behavior):
    """Delete every H from every trace of a Source behavior."""
    for t in behavior:
        if Event.BANG in t.items:
            raise TraceError(f"'!' found in a Source behavior: {t}")
    return frozenset(t.erase_h() for t in behavior)


def translate_behavior(b_name, behavior):
    # trace-level extension of the one-step behavior maps
    if b_name == "b_incl":
        return behavior
    if b_name == "b_erase":
        return tau(behavior)
    raise UnknownName(f"unknown behavior map {b_name!r}")


def translate_run(b_name, run):
    """``translate_behavior`` on a behavior held as a ``BatchRun``."""
    if run.has_event(EV_BANG):
        raise TraceError(f"'!' found in a Source behavior: {run.trace_at(int(run.rows_with_event(EV_BANG)[0]))}")
    if b_name == "b_incl":
        return run
    if b_name == "b_erase":
        return run.erase_h()
    raise UnknownName(f"unknown behavior map {b_name!r}")


def backtranslate(c):
    return Hole()


# ─────────── Robust preservation ───────────

def rhp_witness(compiler, universe, mode, p):
    """The first target context whose behavior around compiled ``p`` no source context matches."""
    compiler = get_compiler(compiler)
    target_program = compiler.compile(p)
    source_contexts = enumerate_contexts(universe, Lang.SOURCE)
    limited = False
    for ct in enumerate_contexts(universe, Lang.TARGET):
        target = beh_run(Lang.TARGET, ct, target_program, universe)
        limited = limited or target.fuel_limited
        candidates = [backtranslate(ct)] if mode == "backtranslation" else source_contexts
        images = [compiler.translate_run(beh_run(Lang.SOURCE, cs, p, universe)) for cs in candidates]
        if target in images:
            continue
        unmatched = target.trace_at(target.first_difference(images[0]))
        return {
            "program": render(p),
            "compiled": render(target_program),
            "context": render(ct),
            "mode": mode,
            "unmatched_trace": str(unmatched),
        }, limited
    return None, limited


def check_rhp(compiler, universe, mode="search", programs=None):
    if mode not in ("search", "backtranslation"):
        raise UnknownName(f"unknown RHP mode {mode!r}")
    compiler = get_compiler(compiler)
    if programs is None:
        programs = enumerate_terms(universe, Lang.SOURCE)
    programs = list(programs)
    results = parallel_first(
        partial(rhp_witness, compiler, universe, mode), programs, lambda result: result[0] is not None
    )
    limited = any(flag for _, flag in results)
    details = {
        "compiler": compiler.name,
        "mode": mode,
        "behavior_map": compiler.b_name,
        "programs": len(programs),
        "checked": len(results),
        "bounds": universe.bounds(),
    }
    witness = results[-1][0] if results else None
    if witness is not None:
        logger.info("RHP (%s, %s) fails at %s", compiler.name, mode, witness["program"])
        return Verdict(False, witness, limited, details)
    logger.info("RHP (%s, %s) holds over %d programs", compiler.name, mode, len(results))
    return Verdict(True, fuel_limited=limited, details=details)


def _preservation_row(compiler, h, universe, p):
    source = robust_sat(Lang.SOURCE, p, h, universe)
    if not source.holds:
        return False, None, source.fuel_limited
    target = robust_sat(Lang.TARGET, compiler.compile(p), h, universe)
    return True, target, source.fuel_limited or target.fuel_limited


def check_preservation(compiler, h, universe, programs=None):
    compiler = get_compiler(compiler)
    if programs is None:
        programs = enumerate_terms(universe, Lang.SOURCE)
    programs = list(programs)
    rows = parallel_first(
        partial(_preservation_row, compiler, h, universe), programs, lambda row: row[0] and not row[1].holds
    )
    robust = sum(1 for is_robust, _, _ in rows if is_robust)
    limited = any(flag for _, _, flag in rows)
    details = {
        "compiler": compiler.name,
        "hyperproperty": h.name,
        "programs": len(programs),
        "checked": len(rows),
        "robust_sources": robust,
        "bounds": universe.bounds(),
    }
    is_robust, target, _ = rows[-1] if rows else (False, None, False)
    if is_robust and not target.holds:
        witness = dict(target.witness)
        witness["compiled"] = witness.pop("program")
        witness["program"] = render(programs[len(rows) - 1])
        logger.info("preservation of %s by %s fails at %s", h.name, compiler.name, witness["program"])
        return Verdict(False, witness, limited, details)
    logger.info("preservation of %s by %s holds (%d robust sources)", h.name, compiler.name, robust)
    return Verdict(True, fuel_limited=limited, details=details)
