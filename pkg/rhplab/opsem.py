"""
Small-step semantics of Source and Target.

Every rule is a premise check plus a conclusion.  ``derive`` collects the
conclusion of every rule whose premise holds, so ``step`` can insist on
exactly one derivation per configuration.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Union

from .exceptions import IllFormedTerm
from .syntax import (
    DONE,
    Assign,
    Done,
    Lang,
    Level,
    Obs,
    Sandbox,
    Seq,
    Skip,
    While,
    eval_expr,
    reads_high,
    store_index,
)

logger = logging.getLogger("rhplab.opsem")


class Event(Enum):
    SILENT = "silent"
    H = "H"
    BANG = "!"


@dataclass(frozen=True)
class StepOutcome:
    store: object
    event: Event
    residual: Union[object, Done]
    rule: str

    @property
    def terminated(self):
        return self.residual is DONE or isinstance(self.residual, Done)


RULES = (
    "skip", "asnL", "asnL-hi", "asnH", "asnH-eq",
    "seq1", "seq2", "while1", "while2",
    "bang1", "bang2", "obs-silent", "obs-pass",
    "sb1", "sb2", "sb-silent",
)


def _assign_rules(universe, s, a) -> List[StepOutcome]:
    value = eval_expr(a.expr, s)
    level = universe.level_of(a.var)
    leaky = reads_high(a.expr, universe)
    changed = s.get(a.var) != value
    updated = s.set(a.var, value)
    found = []
    if level is Level.LOW and not leaky:
        found.append(StepOutcome(updated, Event.SILENT, DONE, "asnL"))
    if level is Level.LOW and leaky:
        found.append(StepOutcome(updated, Event.SILENT, DONE, "asnL-hi"))
    if level is Level.HIGH and changed:
        found.append(StepOutcome(updated, Event.H, DONE, "asnH"))
    if level is Level.HIGH and not changed:
        found.append(StepOutcome(s, Event.SILENT, DONE, "asnH-eq"))
    return found


def _seq_rules(lang, universe, s, p) -> List[StepOutcome]:
    found = []
    for inner in derive(lang, universe, s, p.first):
        if inner.terminated:
            found.append(StepOutcome(inner.store, inner.event, p.second, "seq1"))
        else:
            found.append(StepOutcome(inner.store, inner.event, Seq(inner.residual, p.second), "seq2"))
    return found


def _while_rules(s, p) -> List[StepOutcome]:
    guard = eval_expr(p.guard, s)
    found = []
    if guard == 0:
        found.append(StepOutcome(s, Event.SILENT, Skip(), "while1"))
    if guard != 0:
        found.append(StepOutcome(s, Event.SILENT, Seq(p.body, p), "while2"))
    return found


def _obs_rules(lang, universe, s, p) -> List[StepOutcome]:
    found = []
    for inner in derive(lang, universe, s, p.body):
        residual = DONE if inner.terminated else Obs(inner.residual)
        if inner.event is Event.H:
            found.append(StepOutcome(inner.store, Event.BANG, residual, "bang1" if inner.terminated else "bang2"))
        elif inner.event is Event.SILENT:
            found.append(StepOutcome(inner.store, Event.SILENT, residual, "obs-silent"))
        else:
            found.append(StepOutcome(inner.store, inner.event, residual, "obs-pass"))
    return found


def _sandbox_rules(lang, universe, s, p) -> List[StepOutcome]:
    found = []
    for inner in derive(lang, universe, s, p.assign):
        if inner.event is Event.H:
            rule = "sb1" if inner.terminated else "sb2"
            found.append(StepOutcome(inner.store, Event.SILENT, inner.residual, rule))
        else:
            found.append(StepOutcome(inner.store, inner.event, inner.residual, "sb-silent"))
    return found


def derive(lang, universe, s, p) -> List[StepOutcome]:
    """All conclusions derivable for ``<s, p>``; a deterministic semantics yields one."""
    if isinstance(p, Skip):
        return [StepOutcome(s, Event.SILENT, DONE, "skip")]
    if isinstance(p, Assign):
        return _assign_rules(universe, s, p)
    if isinstance(p, Seq):
        return _seq_rules(lang, universe, s, p)
    if isinstance(p, While):
        return _while_rules(s, p)
    if lang is Lang.TARGET and isinstance(p, Obs):
        return _obs_rules(lang, universe, s, p)
    if lang is Lang.TARGET and isinstance(p, Sandbox):
        return _sandbox_rules(lang, universe, s, p)
    if isinstance(p, Done):
        raise IllFormedTerm("a terminated configuration cannot step")
    raise IllFormedTerm(f"{type(p).__name__} is not a {lang.value} term")


def step(lang, s, p, universe) -> StepOutcome:
    lang = Lang.coerce(lang)
    outcomes = derive(lang, universe, s, p)
    if len(outcomes) != 1:
        rules = ", ".join(o.rule for o in outcomes) or "none"
        raise IllFormedTerm(f"expected exactly one applicable rule, found {len(outcomes)} ({rules})")
    return outcomes[0]


def determinacy_violations(universe, lang, terms, stores):
    """Configurations where the number of applicable rules is not exactly one."""
    from .batch import applicable_counts
    lang = Lang.coerce(lang)
    index = store_index(universe)
    rows = [index[s] for s in stores]
    violations = []
    for p in terms:
        counts = applicable_counts(lang, universe, p)[rows]
        for i in (counts != 1).nonzero()[0]:
            violations.append((stores[i], p, int(counts[i])))
    logger.info(
        "determinacy over %d %s terms x %d stores: %d violation(s)",
        len(terms), lang.value, len(stores), len(violations),
    )
    return violations
