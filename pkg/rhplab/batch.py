"""
Whole-universe execution: a program run from every enumerated store at once.

Stores are identified by their enumeration index.  A ``BatchRun`` holds one
row per run: the index of the store after every step, the event of every
step, the number of steps taken and whether the run terminated within fuel.
Past the last step, store cells hold -1 and event cells hold 0.

``step_columns`` is the one-step counterpart used by the behavior tables:
for every store, the store after one step, its event and the continuation.
"""

from __future__ import annotations

import hashlib
import logging
from functools import cached_property, lru_cache

import numpy as np

from .exceptions import IllFormedTerm
from .opsem import Event
from .syntax import (
    DONE,
    Assign,
    Bin,
    Done,
    Lang,
    Level,
    Lit,
    Obs,
    Sandbox,
    Seq,
    Skip,
    Store,
    Un,
    Var,
    While,
    check_term,
    enumerate_stores,
    reads_high,
    store_index,
)

logger = logging.getLogger("rhplab.batch")

EV_SILENT, EV_H, EV_BANG = 0, 1, 2
EVENT_CODES = {Event.H: EV_H, Event.BANG: EV_BANG}
EVENTS = {EV_H: Event.H, EV_BANG: Event.BANG}

EVENT_DTYPE = np.int8
SLOT_DTYPE = np.int32


def code_dtype(universe):
    return np.int16 if len(enumerate_stores(universe)) < 2 ** 15 else np.int32


@lru_cache(maxsize=32)
def store_matrix(universe):
    """Values of every enumerated store, one row per store, in enumeration order."""
    n = len(enumerate_stores(universe))
    base = universe.vmax + 1
    codes = np.arange(n, dtype=np.int64)
    width = len(universe.vars)
    columns = [(codes // base ** (width - 1 - i)) % base for i in range(width)]
    matrix = np.stack(columns, axis=1)
    matrix.setflags(write=False)
    return matrix


@lru_cache(maxsize=32)
def _weights(universe):
    width = len(universe.vars)
    return (universe.vmax + 1) ** np.arange(width - 1, -1, -1, dtype=np.int64)


def encode(values, universe):
    """Enumeration indices of the stores whose values are the rows of ``values``."""
    return (values @ _weights(universe)).astype(code_dtype(universe))


def identity_codes(universe):
    return np.arange(len(enumerate_stores(universe)), dtype=code_dtype(universe))


def eval_batch(e, values, universe):
    """Evaluate ``e`` in every store of ``values`` at once; same arithmetic as ``eval_expr``."""
    if isinstance(e, Lit):
        return np.full(len(values), e.value, dtype=np.int64)
    if isinstance(e, Var):
        return values[:, universe.names.index(e.name)]
    if isinstance(e, Un):
        return (eval_batch(e.operand, values, universe) == 0).astype(np.int64)
    if isinstance(e, Bin):
        left = eval_batch(e.left, values, universe)
        right = eval_batch(e.right, values, universe)
        if e.op == "add":
            return (left + right) % (universe.vmax + 1)
        if e.op == "mul":
            return (left * right) % (universe.vmax + 1)
        return np.maximum(left - right, 0)
    raise IllFormedTerm(f"not an expression: {e!r}")


# ─────────── Runs ───────────

class BatchRun:
    """One fuel-bounded trace per row, as arrays."""

    def __init__(self, universe, fuel, codes, events, length, tick):
        self.universe = universe
        self.fuel = fuel
        self.codes = codes
        self.events = events
        self.length = length
        self.tick = tick

    @cached_property
    def key(self):
        """A digest of the run; equal runs have equal keys."""
        digest = hashlib.blake2b(digest_size=16)
        digest.update(str(self.fuel).encode())
        for array in (self.codes, self.events, self.length, self.tick):
            digest.update(np.ascontiguousarray(array).tobytes())
        return digest.hexdigest()

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, BatchRun) or self.fuel != other.fuel:
            return False
        return (
            np.array_equal(self.codes, other.codes)
            and np.array_equal(self.events, other.events)
            and np.array_equal(self.length, other.length)
            and np.array_equal(self.tick, other.tick)
        )

    def __hash__(self):
        return hash(self.key)

    def __len__(self):
        return len(self.length)

    @property
    def fuel_limited(self):
        return not bool(self.tick.all())

    def erase_h(self):
        if not (self.events == EV_H).any():
            return self
        events = np.where(self.events == EV_H, EV_SILENT, self.events).astype(EVENT_DTYPE)
        return BatchRun(self.universe, self.fuel, self.codes, events, self.length, self.tick)

    def has_event(self, code):
        return bool((self.events == code).any())

    def rows_with_event(self, code):
        return np.flatnonzero((self.events == code).any(axis=1))

    def first_difference(self, other):
        """Index of the first row where the two runs disagree, or ``None``."""
        if self.fuel != other.fuel:
            raise ValueError(f"runs of {self.fuel} and {other.fuel} steps are not comparable row by row")
        differs = (
            (self.codes != other.codes).any(axis=1)
            | (self.events != other.events).any(axis=1)
            | (self.length != other.length)
            | (self.tick != other.tick)
        )
        if not differs.any():
            return None
        return int(np.argmax(differs))

    def trace_at(self, row):
        from .traces import Terminator, Trace

        stores = enumerate_stores(self.universe)
        codes = self.codes[row].tolist()
        events = self.events[row].tolist()
        items = [stores[codes[0]]]
        for j in range(int(self.length[row])):
            if events[j]:
                items.append(EVENTS[events[j]])
            items.append(stores[codes[j + 1]])
        return Trace(tuple(items), Terminator.TICK if self.tick[row] else Terminator.TIMEOUT)

    def traces(self):
        return frozenset(self.trace_at(i) for i in range(len(self)))

    def low_signatures(self):
        """Per row: the low part of every store, the ``!`` steps and the terminator; H is dropped."""
        low = list(self.universe.low_indices)
        matrix = store_matrix(self.universe)
        if low:
            low_key = matrix[:, low] @ ((self.universe.vmax + 1) ** np.arange(len(low), dtype=np.int64))
        else:
            low_key = np.zeros(len(matrix), dtype=np.int64)
        padded = np.append(low_key, -1)
        return np.concatenate(
            [padded[self.codes], (self.events == EV_BANG).astype(np.int64), self.tick[:, None].astype(np.int64)],
            axis=1,
        ), padded[self.codes[:, 0]]

    def ni_violation(self):
        """``(reference, offender)`` rows of two low-equal starts with different signatures, or ``None``.

        Rows are scanned in order; the reference is the first row of the
        offender's low-equivalence class.
        """
        signatures, starts = self.low_signatures()
        _, first, inverse = np.unique(starts, return_index=True, return_inverse=True)
        reference = first[np.asarray(inverse).reshape(-1)]
        bad = (signatures != signatures[reference]).any(axis=1)
        if not bad.any():
            return None
        offender = int(np.argmax(bad))
        return int(reference[offender]), offender

    @classmethod
    def from_traces(cls, behavior, universe, fuel):
        """The run whose rows are ``behavior``'s traces, one per initial store; ``None`` if there is none."""
        from .traces import Terminator

        index = store_index(universe)
        n = len(index)
        if len(behavior) != n:
            return None
        codes = np.full((n, fuel + 1), -1, dtype=code_dtype(universe))
        events = np.zeros((n, fuel), dtype=EVENT_DTYPE)
        length = np.zeros(n, dtype=np.int64)
        tick = np.zeros(n, dtype=bool)
        seen = set()
        for t in behavior:
            row = index.get(t.initial)
            if row is None or row in seen:
                return None
            seen.add(row)
            codes[row, 0] = row
            j = 0
            for item in t.items[1:]:
                if isinstance(item, Store):
                    j += 1
                    if j > fuel or item not in index:
                        return None
                    codes[row, j] = index[item]
                else:
                    events[row, j] = EVENT_CODES[item]
            length[row] = j
            tick[row] = t.end is Terminator.TICK
        return cls(universe, fuel, codes, events, length, tick)


class _Runner:
    def __init__(self, lang, universe, fuel):
        self.lang = lang
        self.universe = universe
        self.fuel = fuel
        self.values = store_matrix(universe).copy()
        n = len(self.values)
        self.pos = np.zeros(n, dtype=np.int64)
        self.spent = np.zeros(n, dtype=bool)
        self.codes = np.full((n, fuel + 1), -1, dtype=code_dtype(universe))
        self.codes[:, 0] = np.arange(n)
        self.events = np.zeros((n, fuel), dtype=EVENT_DTYPE)

    def take(self, mask):
        """Stores of ``mask`` that may take a step; the ones out of fuel drop out for good."""
        live = mask & ~self.spent
        out = live & (self.pos >= self.fuel)
        self.spent |= out
        return live & ~out

    def record(self, live, events=None):
        rows = np.flatnonzero(live)
        if events is not None:
            self.events[rows, self.pos[rows]] = events[rows]
        self.pos[rows] += 1
        self.codes[rows, self.pos[rows]] = encode(self.values[rows], self.universe)

    def tick(self, mask):
        live = self.take(mask)
        self.record(live)
        return live

    def exec(self, p, mask, observed=False, sandboxed=False):
        """Run ``p`` on the stores of ``mask``; return the ones that finished it."""
        if isinstance(p, Skip):
            return self.tick(mask)
        if isinstance(p, Assign):
            live = self.take(mask)
            column = self.universe.names.index(p.var)
            value = eval_batch(p.expr, self.values, self.universe)
            events = None
            if self.universe.is_high(p.var) and not sandboxed:
                changed = self.values[:, column] != value
                events = np.where(changed, EV_BANG if observed else EV_H, EV_SILENT)
            self.values[live, column] = value[live]
            self.record(live, events)
            return live
        if isinstance(p, Seq):
            return self.exec(p.second, self.exec(p.first, mask, observed), observed)
        if isinstance(p, While):
            finished = np.zeros_like(mask)
            active = mask
            while active.any():
                live = self.take(active)
                if not live.any():
                    break
                guard = eval_batch(p.guard, self.values, self.universe) != 0
                self.record(live)
                # a false guard steps to skip, which takes one more step
                finished |= self.tick(live & ~guard)
                active = self.exec(p.body, live & guard, observed)
            return finished
        if isinstance(p, Obs) and self.lang is Lang.TARGET:
            return self.exec(p.body, mask, True)
        if isinstance(p, Sandbox) and self.lang is Lang.TARGET:
            return self.exec(p.assign, mask, observed, True)
        if isinstance(p, Done):
            raise IllFormedTerm("a terminated configuration cannot step")
        raise IllFormedTerm(f"{type(p).__name__} is not a {self.lang.value} term")

    def finish(self):
        return BatchRun(self.universe, self.fuel, self.codes, self.events, self.pos, ~self.spent)


@lru_cache(maxsize=128)
def run_batch(lang, p, universe, fuel=None):
    """Run ``p`` from every store of ``universe`` for at most ``fuel`` steps each."""
    lang = Lang.coerce(lang)
    check_term(p, lang, universe)
    fuel = universe.fuel if fuel is None else fuel
    runner = _Runner(lang, universe, fuel)
    runner.exec(p, np.ones(len(runner.values), dtype=bool))
    return runner.finish()


# ─────────── One step ───────────

def _one(lang, p, values, universe):
    n = len(values)
    silent = np.zeros(n, dtype=EVENT_DTYPE)
    first = np.zeros(n, dtype=SLOT_DTYPE)
    if isinstance(p, Skip):
        return values, silent, first, (DONE,)
    if isinstance(p, Assign):
        column = universe.names.index(p.var)
        value = eval_batch(p.expr, values, universe)
        events = silent
        if universe.is_high(p.var):
            events = np.where(values[:, column] != value, EV_H, EV_SILENT).astype(EVENT_DTYPE)
        updated = values.copy()
        updated[:, column] = value
        return updated, events, first, (DONE,)
    if isinstance(p, Seq):
        updated, events, slots, nexts = _one(lang, p.first, values, universe)
        return updated, events, slots, tuple(p.second if isinstance(x, Done) else Seq(x, p.second) for x in nexts)
    if isinstance(p, While):
        guard = eval_batch(p.guard, values, universe) != 0
        return values, silent, guard.astype(SLOT_DTYPE), (Skip(), Seq(p.body, p))
    if isinstance(p, Obs) and lang is Lang.TARGET:
        updated, events, slots, nexts = _one(lang, p.body, values, universe)
        events = np.where(events == EV_H, EV_BANG, events).astype(EVENT_DTYPE)
        return updated, events, slots, tuple(x if isinstance(x, Done) else Obs(x) for x in nexts)
    if isinstance(p, Sandbox) and lang is Lang.TARGET:
        updated, events, slots, nexts = _one(lang, p.assign, values, universe)
        return updated, np.where(events == EV_H, EV_SILENT, events).astype(EVENT_DTYPE), slots, nexts
    if isinstance(p, Done):
        raise IllFormedTerm("a terminated configuration cannot step")
    raise IllFormedTerm(f"{type(p).__name__} is not a {lang.value} term")


def step_columns(lang, p, universe):
    """One step of ``p`` from every store: (store indices, event codes, continuation slots, continuations)."""
    lang = Lang.coerce(lang)
    updated, events, slots, nexts = _one(lang, p, store_matrix(universe), universe)
    return encode(updated, universe), events, slots, nexts


def applicable_counts(lang, universe, p):
    """Number of rules whose premise holds at ``<s, p>``, for every store ``s`` at once."""
    lang = Lang.coerce(lang)
    values = store_matrix(universe)
    n = len(values)
    if isinstance(p, Skip):
        return np.ones(n, dtype=np.int64)
    if isinstance(p, Assign):
        changed = values[:, universe.names.index(p.var)] != eval_batch(p.expr, values, universe)
        low = universe.level_of(p.var) is Level.LOW
        leaky = reads_high(p.expr, universe)
        counts = np.full(n, int(low and not leaky) + int(low and leaky), dtype=np.int64)
        if not low:
            counts += changed.astype(np.int64) + (~changed).astype(np.int64)
        return counts
    if isinstance(p, Seq):
        return applicable_counts(lang, universe, p.first)
    if isinstance(p, While):
        guard = eval_batch(p.guard, values, universe)
        return (guard == 0).astype(np.int64) + (guard != 0).astype(np.int64)
    if isinstance(p, Obs) and lang is Lang.TARGET:
        return applicable_counts(lang, universe, p.body)
    if isinstance(p, Sandbox) and lang is Lang.TARGET:
        return applicable_counts(lang, universe, p.assign)
    if isinstance(p, Done):
        raise IllFormedTerm("a terminated configuration cannot step")
    raise IllFormedTerm(f"{type(p).__name__} is not a {lang.value} term")
