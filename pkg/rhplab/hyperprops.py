"""
Low-equivalence, hyperproperty membership, robust satisfaction,
contextual equivalence and the full-abstraction checker.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Optional

from .batch import EV_BANG, EV_H
from .exceptions import ConfigError, UniverseMismatch, UnknownName
from .opsem import Event
from .syntax import Lang, Store, enumerate_contexts, enumerate_terms, plug, render
from .traces import Terminator, Trace, beh_run, canonical, parse_trace
from .workers import parallel_map

logger = logging.getLogger("rhplab.hyperprops")


@dataclass
class Verdict:
    holds: bool
    witness: Optional[dict] = None
    fuel_limited: bool = False
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.holds and self.witness is None:
            raise ValueError("a failing verdict needs a witness")

    def to_dict(self):
        return {
            "holds": self.holds,
            "witness": self.witness,
            "fuel_limited": self.fuel_limited,
            "details": self.details,
        }


# ─────────── Low-equivalence ───────────

def _check_store(s, universe):
    if s.names != universe.names:
        raise UniverseMismatch(f"store over {s.names} compared in universe over {universe.names}")


def _low_view(item, low):
    if isinstance(item, Store):
        return tuple(item.values[i] for i in low)
    return item


def low_signature(t, universe):
    """The H-free sequence of observables of ``t`` with stores cut down to their low part."""
    _check_store(t.initial, universe)
    low = universe.low_indices
    return tuple(_low_view(i, low) for i in t.items if i is not Event.H) + (t.end,)


def low_eq(a, b, universe):
    if isinstance(a, Store) and isinstance(b, Store):
        _check_store(a, universe)
        _check_store(b, universe)
        low = universe.low_indices
        return _low_view(a, low) == _low_view(b, low)
    if isinstance(a, Trace) and isinstance(b, Trace):
        return low_signature(a, universe) == low_signature(b, universe)
    if isinstance(a, (Event, Terminator)) or isinstance(b, (Event, Terminator)):
        return a == b
    if isinstance(a, Store) or isinstance(b, Store):
        return False
    raise TypeError(f"cannot compare {type(a).__name__} with {type(b).__name__}")


# ─────────── Hyperproperties ───────────

class Hyperproperty:
    name = "hyperproperty"

    def violation(self, behavior, universe):
        """``None`` when ``behavior`` is a member, otherwise a witness dict."""
        raise NotImplementedError

    def violation_run(self, run, universe):
        """``violation`` for a behavior held as a ``BatchRun``."""
        return self.violation(run.traces(), universe)

    def contains(self, behavior, universe):
        return self.violation(behavior, universe) is None

    def __repr__(self):
        return self.name


class NI(Hyperproperty):
    name = "ni"

    def violation(self, behavior, universe):
        first_by_class = {}
        for t in canonical(behavior, universe):
            start = _low_view(t.initial, universe.low_indices)
            reference = first_by_class.setdefault(start, t)
            if low_signature(reference, universe) != low_signature(t, universe):
                return {
                    "stores": [render(reference.initial), render(t.initial)],
                    "traces": [str(reference), str(t)],
                }
        return None

    def violation_run(self, run, universe):
        found = run.ni_violation()
        if found is None:
            return None
        reference, t = (run.trace_at(row) for row in found)
        return {
            "stores": [render(reference.initial), render(t.initial)],
            "traces": [str(reference), str(t)],
        }


class Top(Hyperproperty):
    name = "top"

    def violation(self, behavior, universe):
        return None

    def violation_run(self, run, universe):
        return None


class NeverEvent(Hyperproperty):
    def __init__(self, event):
        self.event = event
        self.name = f"never:{'H' if event is Event.H else '!'}"

    def violation(self, behavior, universe):
        for t in canonical(behavior, universe):
            if t.contains(self.event):
                return {"trace": str(t)}
        return None

    def violation_run(self, run, universe):
        rows = run.rows_with_event(EV_H if self.event is Event.H else EV_BANG)
        if len(rows) == 0:
            return None
        return {"trace": str(run.trace_at(int(rows[0])))}


class Explicit(Hyperproperty):
    def __init__(self, behaviors, label="explicit"):
        self.behaviors = frozenset(behaviors)
        self.name = label

    def violation(self, behavior, universe):
        if behavior in self.behaviors:
            return None
        return {"reason": f"behavior is not one of the {len(self.behaviors)} listed behaviors"}

    def extended(self, more):
        return Explicit(self.behaviors | frozenset(more), self.name)


def sat(b, h, universe):
    return h.contains(b, universe)


def load_explicit(path, universe, lang=Lang.TARGET):
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read explicit hyperproperty {path}: {exc}")
    if not isinstance(raw, list) or not all(isinstance(b, list) for b in raw):
        raise ConfigError(f"{path} must hold a JSON list of behaviors (lists of trace strings)")
    behaviors = [frozenset(parse_trace(t, universe, lang) for t in b) for b in raw]
    return Explicit(behaviors, f"explicit:{path.name}")


def parse_hyperprop(text, universe):
    text = (text or "").strip()
    if text == "ni":
        return NI()
    if text == "top":
        return Top()
    if text == "never:H":
        return NeverEvent(Event.H)
    if text == "never:!":
        return NeverEvent(Event.BANG)
    if text.startswith("explicit:"):
        return load_explicit(text[len("explicit:"):], universe)
    raise UnknownName(f"unknown hyperproperty {text!r} (use ni, top, never:H, never:! or explicit:<file>)")


# ─────────── Robust satisfaction and equivalence ───────────

def robust_sat(lang, p, h, universe):
    lang = Lang.coerce(lang)
    limited = False
    for c in enumerate_contexts(universe, lang):
        run = beh_run(lang, c, p, universe)
        limited = limited or run.fuel_limited
        found = h.violation_run(run, universe)
        if logger.isEnabledFor(logging.DEBUG):
            logger.debug("%s in %s: %s", h.name, render(plug(c, p)), "violated" if found else "ok")
        if found is not None:
            witness = {"context": render(c), "program": render(p), "lang": lang.value}
            witness.update(found)
            return Verdict(False, witness, limited)
    return Verdict(True, fuel_limited=limited)


def ctx_equiv(lang, p1, p2, universe):
    lang = Lang.coerce(lang)
    limited = False
    for c in enumerate_contexts(universe, lang):
        b1 = beh_run(lang, c, p1, universe)
        b2 = beh_run(lang, c, p2, universe)
        limited = limited or b1.fuel_limited or b2.fuel_limited
        if b1 != b2:
            return Verdict(False, _distinguish(lang, c, p1, p2, b1, b2), limited)
    return Verdict(True, fuel_limited=limited)


def _distinguish(lang, c, p1, p2, b1, b2):
    row = b1.first_difference(b2)
    one, two = b1.trace_at(row), b2.trace_at(row)
    return {
        "lang": lang.value,
        "context": render(c),
        "programs": [render(p1), render(p2)],
        "store": render(one.initial),
        "traces": [str(one), str(two)],
    }


def family_digests(lang, p, universe):
    """Digests of ``p``'s behaviors under every enumerated context of ``lang``, in context order."""
    return tuple(beh_run(lang, c, p, universe).key for c in enumerate_contexts(universe, lang))


def _family_limited(lang, p, universe):
    return any(beh_run(lang, c, p, universe).fuel_limited for c in enumerate_contexts(universe, lang))


def _compiled_families(compiler_name, universe, p):
    from .compilers import get_compiler

    compiled = get_compiler(compiler_name).compile(p)
    families = family_digests(Lang.SOURCE, p, universe), family_digests(Lang.TARGET, compiled, universe)
    limited = _family_limited(Lang.SOURCE, p, universe) or _family_limited(Lang.TARGET, compiled, universe)
    return families, limited


def program_families(compiler_name, universe, programs=None):
    """``(program, (source digests, target digests), fuel_limited)`` for every program."""
    if programs is None:
        programs = enumerate_terms(universe, Lang.SOURCE)
    programs = list(programs)
    rows = parallel_map(partial(_compiled_families, compiler_name, universe), programs)
    return [(p, families, limited) for p, (families, limited) in zip(programs, rows)]


def _fac_direction(rows, direction, universe, compiler_name):
    # preserve: equal source families must have equal target families; reflect: the converse
    key_side, other_side, lang = (0, 1, Lang.TARGET) if direction == "preserve" else (1, 0, Lang.SOURCE)
    representative = {}
    for p, families, _ in rows:
        first = representative.setdefault(families[key_side], (p, families))
        q, q_families = first
        if q_families[other_side] != families[other_side]:
            contexts = enumerate_contexts(universe, lang)
            index = next(i for i, (x, y) in enumerate(zip(q_families[other_side], families[other_side])) if x != y)
            return {
                "direction": direction,
                "compiler": compiler_name,
                "programs": [render(q), render(p)],
                "context": render(contexts[index]),
                "context_lang": lang.value,
            }, len(representative)
    return None, len(representative)


def check_fac(compiler, universe, direction="preserve", programs=None):
    if direction not in ("preserve", "reflect", "both"):
        raise UnknownName(f"unknown FAC direction {direction!r}")
    rows = program_families(compiler, universe, programs)
    limited = any(flag for _, _, flag in rows)
    directions = ("preserve", "reflect") if direction == "both" else (direction,)
    details = {"compiler": compiler, "direction": direction, "programs": len(rows), "bounds": universe.bounds()}
    for d in directions:
        witness, classes = _fac_direction(rows, d, universe, compiler)
        details[f"{d}_classes"] = classes
        logger.info("FAC %s for %s over %d programs: %s", d, compiler, len(rows), "fails" if witness else "holds")
        if witness is not None:
            return Verdict(False, witness, limited, details)
    return Verdict(True, fuel_limited=limited, details=details)
