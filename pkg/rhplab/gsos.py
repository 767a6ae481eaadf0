"""
One-step behavior tables and the rule-format view of both languages.

A ``BehaviorTable`` lists, for every store of the universe, the store after
one step, the optional event and the continuation.  ``rho_apply`` computes
the table of a composite term from the tables of its children only, which
is what makes the diagram checks (syntax/behavior translations commuting
with the two semantics) meaningful.  ``CoalgElem`` is the fuel-bounded
unfolding of tables, with ``CUT`` marking the frontier.

Tables are held as columns indexed by store: ``stores`` and ``events`` are
arrays, ``slots`` picks each store's continuation out of ``nexts``.  The
continuations are kept distinct and in order of first use, so two tables
describe the same step exactly when their columns are equal.
"""

from __future__ import annotations

import hashlib
import logging
import weakref
from dataclasses import dataclass
from functools import lru_cache, partial
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .batch import (
    EV_BANG,
    EV_H,
    EV_SILENT,
    EVENT_CODES,
    EVENT_DTYPE,
    EVENTS,
    SLOT_DTYPE,
    BatchRun,
    code_dtype,
    eval_batch,
    identity_codes,
    step_columns,
    store_matrix,
)
from .compilers import SYNTAX_MAPS, backtranslate, extend, get_compiler, translate_run
from .exceptions import BridgeError, ShapeMismatch, UnknownName
from .hyperprops import Verdict
from .opsem import Event
from .syntax import (
    DONE,
    Assign,
    Done,
    Hole,
    Lang,
    Leaf,
    Obs,
    ObsCtx,
    Sandbox,
    Seq,
    Skip,
    Store,
    While,
    ctx_depth,
    enumerate_contexts,
    enumerate_stores,
    enumerate_terms,
    plug,
    render,
    store_index,
)
from .traces import Terminator, beh_run
from .workers import parallel_first

logger = logging.getLogger("rhplab.gsos")


class Row(NamedTuple):
    store: Store
    event: Optional[Event]
    next: object

    def to_dict(self):
        return {
            "store": render(self.store),
            "event": "-" if self.event is None else ("#H" if self.event is Event.H else "!"),
            "next": render_next(self.next),
        }


def render_next(x):
    if isinstance(x, Done):
        return "OK"
    if x is CUT:
        return "CUT"
    if isinstance(x, CoalgElem):
        return f"elem#{x.digest}"
    if isinstance(x, LayeredTerm):
        return x.render()
    return render(x)


def _canonical(slots, nexts):
    """Distinct continuations in order of first use, with ``slots`` renumbered to match."""
    ids = {}
    remap = [ids.setdefault(x, len(ids)) for x in nexts]
    merged = tuple(ids)
    slots = np.asarray(slots)
    if len(merged) != len(nexts):
        slots = np.asarray(remap, dtype=SLOT_DTYPE)[slots]
    used, first = np.unique(slots, return_index=True)
    order = used[np.argsort(first, kind="stable")]
    if len(order) == len(merged) and (order == np.arange(len(merged))).all():
        return slots.astype(SLOT_DTYPE, copy=False), merged
    rank = np.zeros(len(merged), dtype=SLOT_DTYPE)
    rank[order] = np.arange(len(order), dtype=SLOT_DTYPE)
    return rank[slots], tuple(merged[i] for i in order)


def _merged(slots, nexts):
    # slots already in first-use order stay so when equal continuations merge
    ids = {}
    remap = [ids.setdefault(x, len(ids)) for x in nexts]
    if len(ids) == len(nexts):
        return slots, tuple(nexts)
    return np.asarray(remap, dtype=SLOT_DTYPE)[slots], tuple(ids)


class BehaviorTable:
    """One step from every store of ``universe``, as columns."""

    def __init__(self, lang, universe, stores, events, slots, nexts):
        self.lang = lang
        self.universe = universe
        self.stores = stores
        self.events = events
        self.slots = slots
        self.nexts = tuple(nexts)

    @classmethod
    def build(cls, lang, universe, stores, events, slots, nexts):
        slots, nexts = _canonical(slots, nexts)
        return cls(lang, universe, stores, events, slots, nexts)

    def row(self, i):
        stores = enumerate_stores(self.universe)
        return Row(stores[int(self.stores[i])], EVENTS.get(int(self.events[i])), self.nexts[int(self.slots[i])])

    @property
    def rows(self):
        return tuple(self.row(i) for i in range(len(self.stores)))

    def __getitem__(self, store):
        return self.row(store_index(self.universe)[store])

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, BehaviorTable):
            return NotImplemented
        return (
            self.lang is other.lang
            and self.universe == other.universe
            and self.nexts == other.nexts
            and np.array_equal(self.stores, other.stores)
            and np.array_equal(self.events, other.events)
            and np.array_equal(self.slots, other.slots)
        )

    def __hash__(self):
        return hash((self.lang, self.nexts, self.stores.tobytes(), self.events.tobytes(), self.slots.tobytes()))

    def map_next(self, fn):
        """Apply ``fn`` to every continuation that is not the terminal marker."""
        nexts = [x if isinstance(x, Done) else fn(x) for x in self.nexts]
        return BehaviorTable(self.lang, self.universe, self.stores, self.events, *_merged(self.slots, nexts))

    def relabel(self, lang, events=None):
        events = self.events if events is None else events
        return BehaviorTable(lang, self.universe, self.stores, events, self.slots, self.nexts)


# ─────────── One-step tables and the rule format ───────────

@lru_cache(maxsize=4096)
def one_step(lang, p, universe):
    lang = Lang.coerce(lang)
    return BehaviorTable.build(lang, universe, *step_columns(lang, p, universe))


def child_slots(term):
    if isinstance(term, Seq):
        return (term.first, term.second)
    if isinstance(term, (While, Obs)):
        return (term.body,)
    if isinstance(term, Sandbox):
        return (term.assign,)
    return ()


def with_children(term, children):
    if isinstance(term, Seq):
        return Seq(*children)
    if isinstance(term, While):
        return While(term.guard, children[0])
    if isinstance(term, Obs):
        return Obs(children[0])
    if isinstance(term, Sandbox):
        return Sandbox(children[0])
    return term


@dataclass(frozen=True)
class GsosNode:
    lang: Lang
    term: object
    tables: Tuple[BehaviorTable, ...]

    def __post_init__(self):
        if len(child_slots(self.term)) != len(self.tables):
            raise ShapeMismatch(f"{type(self.term).__name__} needs {len(child_slots(self.term))} child table(s)")
        universes = {t.universe for t in self.tables}
        if len(universes) > 1:
            raise ShapeMismatch("child tables range over different universes")


def node_of(lang, p, universe):
    lang = Lang.coerce(lang)
    return GsosNode(lang, p, tuple(one_step(lang, c, universe) for c in child_slots(p)))


def _wrap(table, lang, events, fn):
    return BehaviorTable(lang, table.universe, table.stores, events, table.slots, table.nexts).map_next(fn)


def rho_apply(lang, node, universe):
    """One-step table of ``node.term`` computed from its children's tables."""
    lang = Lang.coerce(lang)
    term = node.term
    n = len(enumerate_stores(universe))
    silent = np.zeros(n, dtype=EVENT_DTYPE)
    if isinstance(term, Skip):
        return BehaviorTable.build(lang, universe, identity_codes(universe), silent, np.zeros(n, SLOT_DTYPE), (DONE,))
    if isinstance(term, Assign):
        return BehaviorTable.build(lang, universe, *step_columns(lang, term, universe))
    if isinstance(term, Seq):
        first = node.tables[0]
        nexts = [term.second if isinstance(x, Done) else Seq(x, term.second) for x in first.nexts]
        return BehaviorTable(lang, universe, first.stores, first.events, *_merged(first.slots, nexts))
    if isinstance(term, While):
        guard = eval_batch(term.guard, store_matrix(universe), universe) != 0
        return BehaviorTable.build(
            lang, universe, identity_codes(universe), silent, guard.astype(SLOT_DTYPE), (Skip(), Seq(term.body, term))
        )
    if isinstance(term, Obs) and lang is Lang.TARGET:
        inner = node.tables[0]
        events = np.where(inner.events == EV_H, EV_BANG, inner.events).astype(EVENT_DTYPE)
        return _wrap(inner, lang, events, Obs)
    if isinstance(term, Sandbox) and lang is Lang.TARGET:
        inner = node.tables[0]
        events = np.where(inner.events == EV_H, EV_SILENT, inner.events).astype(EVENT_DTYPE)
        return inner.relabel(lang, events)
    raise ShapeMismatch(f"{type(term).__name__} is not a {lang.value} constructor")


def evaluate(lang, term, leaf_tables, universe):
    """Table of a free term whose leaves already carry tables (structural induction)."""
    if isinstance(term, Leaf):
        return leaf_tables[term]
    tables = tuple(evaluate(lang, child, leaf_tables, universe) for child in child_slots(term))
    return rho_apply(lang, GsosNode(Lang.coerce(lang), term, tables), universe)


def leafed(node):
    """Replace the node's children and table continuations by opaque leaves."""
    children = child_slots(node.term)
    term = with_children(node.term, [Leaf(c) for c in children])
    tables = tuple(t.map_next(Leaf) for t in node.tables)
    return GsosNode(node.lang, term, tables)


# ─────────── Natural transformations ───────────

def b_incl(table):
    _expect_source_table(table)
    return table.relabel(Lang.TARGET)


def b_erase(table):
    _expect_source_table(table)
    return table.relabel(Lang.TARGET, np.where(table.events == EV_H, EV_SILENT, table.events).astype(EVENT_DTYPE))


def _expect_source_table(table):
    if not isinstance(table, BehaviorTable) or table.lang is not Lang.SOURCE:
        raise ShapeMismatch("behavior maps apply to Source behavior tables")


def t_id(layer):
    """Send one observer layer to the identity source layer."""
    if isinstance(layer, ObsCtx):
        return layer.inner
    if isinstance(layer, Obs):
        return layer.body
    raise ShapeMismatch("t_id applies to an observer context layer")


def t_star(term):
    while isinstance(term, Obs):
        term = t_id(term)
    return term


BEHAVIOR_MAPS = {"b_incl": b_incl, "b_erase": b_erase}
CONTEXT_MAPS = {"t_id": t_id}


def nat_apply(name, x):
    if name in SYNTAX_MAPS:
        if not isinstance(x, (Skip, Assign, Seq, While)):
            raise ShapeMismatch(f"{name} applies to Source constructors, not {type(x).__name__}")
        return SYNTAX_MAPS[name](x)
    if name in BEHAVIOR_MAPS:
        return BEHAVIOR_MAPS[name](x)
    if name in CONTEXT_MAPS:
        return CONTEXT_MAPS[name](x)
    raise UnknownName(f"unknown transformation {name!r}")


def _lookup(registry, name, kind):
    try:
        return registry[name]
    except KeyError:
        raise UnknownName(f"unknown {kind} {name!r} (choose from {', '.join(sorted(registry))})")


def map_leaves(term, fn):
    if isinstance(term, Leaf):
        return fn(term)
    children = child_slots(term)
    if not children:
        return term
    return with_children(term, [map_leaves(c, fn) for c in children])


# ─────────── Diagram checks ───────────

def _first_difference(upper, lower, universe):
    same_next = np.array([[a == b for b in lower.nexts] for a in upper.nexts], dtype=bool)
    differs = (
        (upper.stores != lower.stores)
        | (upper.events != lower.events)
        | ~same_next[upper.slots, lower.slots]
    )
    if not differs.any():
        return None
    i = int(np.argmax(differs))
    return enumerate_stores(universe)[i], upper.row(i), lower.row(i)


def _diagram_failure(label, universe, upper, lower, **context):
    found = _first_difference(upper, lower, universe)
    if found is None:
        return None
    s, a, b = found
    witness = dict(context)
    witness.update({"diagram": label, "store": render(s), "upper": a.to_dict(), "lower": b.to_dict()})
    return witness


def modl_paths(s_name, b_name, p, universe):
    """Both composites of the syntax/behavior square at the node of ``p``."""
    b = _lookup(BEHAVIOR_MAPS, b_name, "behavior map")
    node = leafed(node_of(Lang.SOURCE, p, universe))
    upper = b(rho_apply(Lang.SOURCE, node, universe).map_next(lambda r: extend(s_name, r)))
    leaf_tables = {leaf: b(t) for leaf, t in zip(child_slots(node.term), node.tables)}
    lower = evaluate(Lang.TARGET, SYNTAX_MAPS[s_name](node.term), leaf_tables, universe)
    return upper, lower


def check_modl(s_name, b_name, universe, programs=None):
    _lookup(SYNTAX_MAPS, s_name, "syntax map")
    _lookup(BEHAVIOR_MAPS, b_name, "behavior map")
    if programs is None:
        programs = enumerate_terms(universe, Lang.SOURCE)
    count = 0
    for p in programs:
        count += 1
        upper, lower = modl_paths(s_name, b_name, p, universe)
        witness = _diagram_failure("modl", universe, upper, lower, node=render(p), s=s_name, b=b_name)
        if witness is not None:
            logger.info("MoDL square (%s, %s) fails at %s", s_name, b_name, witness["node"])
            return Verdict(False, witness, details={"nodes": count, "bounds": universe.bounds()})
    logger.info("MoDL square (%s, %s) commutes on %d nodes", s_name, b_name, count)
    return Verdict(True, details={"nodes": count, "s": s_name, "b": b_name, "bounds": universe.bounds()})


def _observer_layers(table, inner, layers, universe):
    # apply the observer rule once per layer, innermost first
    for _ in range(layers):
        table = rho_apply(Lang.TARGET, GsosNode(Lang.TARGET, Obs(inner), (table,)), universe)
        inner = Obs(inner)
    return table


def mmodl_paths(t_name, b_name, c, p, universe):
    """Upper and lower composites of the context-layer square for ``c`` around ``p``."""
    b = _lookup(BEHAVIOR_MAPS, b_name, "behavior map")
    t = _lookup(CONTEXT_MAPS, t_name, "context map")
    shared = one_step(Lang.SOURCE, p, universe).map_next(Leaf)
    layer = c
    while isinstance(layer, ObsCtx):
        layer = t(layer)
    if not isinstance(layer, Hole):
        raise ShapeMismatch(f"{t_name} left a non-identity source context")
    # the identity source context has no rule of its own: the shared table passes through
    upper = b(shared)
    lower = _observer_layers(b(shared), Leaf(p), ctx_depth(c), universe).map_next(t_star)
    return upper, lower


def check_mmodl(t_name, b_name, universe, programs=None):
    _lookup(CONTEXT_MAPS, t_name, "context map")
    _lookup(BEHAVIOR_MAPS, b_name, "behavior map")
    if programs is None:
        programs = enumerate_terms(universe, Lang.SOURCE)
    programs = list(programs)
    contexts = [c for c in enumerate_contexts(universe, Lang.TARGET) if isinstance(c, ObsCtx)]
    count = 0
    for c in contexts:
        for p in programs:
            count += 1
            upper, lower = mmodl_paths(t_name, b_name, c, p, universe)
            witness = _diagram_failure(
                "mmodl", universe, upper, lower, context=render(c), program=render(p), t=t_name, b=b_name
            )
            if witness is not None:
                logger.info("MMoDL square (%s, %s) fails at %s", t_name, b_name, render(plug(c, p)))
                return Verdict(False, witness, details={"nodes": count, "bounds": universe.bounds()})
    logger.info("MMoDL square (%s, %s) commutes on %d nodes", t_name, b_name, count)
    return Verdict(True, details={"nodes": count, "t": t_name, "b": b_name, "bounds": universe.bounds()})


def check_law_agreement(universe, lang):
    """The rule format reproduces the interpreter on every enumerated term."""
    lang = Lang.coerce(lang)
    terms = enumerate_terms(universe, lang)
    for p in terms:
        via_law = rho_apply(lang, node_of(lang, p, universe), universe)
        direct = one_step(lang, p, universe)
        witness = _diagram_failure("law", universe, via_law, direct, program=render(p), lang=lang.value)
        if witness is not None:
            return Verdict(False, witness, details={"bounds": universe.bounds()})
    return Verdict(True, details={"terms": len(terms), "lang": lang.value, "bounds": universe.bounds()})


RELABELLINGS = {
    "append-skip": lambda leaf: Leaf(Seq(leaf.value, Skip())),
    "collapse-to-skip": lambda leaf: Leaf(Skip()),
}


def check_naturality(universe, programs=None):
    """Transform-then-relabel equals relabel-then-transform for every registered map."""
    if programs is None:
        programs = enumerate_terms(universe, Lang.SOURCE)
    for p in programs:
        node = leafed(node_of(Lang.SOURCE, p, universe))
        table = one_step(Lang.SOURCE, p, universe).map_next(Leaf)
        for label, g in RELABELLINGS.items():
            for name, s in SYNTAX_MAPS.items():
                if s(map_leaves(node.term, g)) != map_leaves(s(node.term), g):
                    return Verdict(False, {"map": name, "relabel": label, "node": render(node.term)})
            for name, b in BEHAVIOR_MAPS.items():
                if b(table.map_next(g)) != b(table).map_next(g):
                    return Verdict(False, {"map": name, "relabel": label, "program": render(p)})
            layer = Obs(Leaf(p))
            if t_id(map_leaves(layer, g)) != g(t_id(layer)):
                return Verdict(False, {"map": "t_id", "relabel": label, "program": render(p)})
    return Verdict(True)


# ─────────── Fuel-bounded unfolding ───────────

class _Cut:
    def __repr__(self):
        return "CUT"

    def __reduce__(self):
        return "CUT"


CUT = _Cut()


class ZRow(NamedTuple):
    store: Store
    event: Optional[Event]
    next: object


def _space(universe):
    # stores, and so elements, depend on the variables and the value range only
    return universe.names, universe.vmax


def _token(x):
    if isinstance(x, Done):
        return "OK"
    if x is CUT:
        return "CUT"
    return x.digest


class CoalgElem:
    """A hash-consed, fuel-bounded unfolding; equal elements are the same object.

    An element is a one-step table whose continuations are further elements,
    ``DONE`` or ``CUT``.  Its ``digest`` depends on that structure only.
    """

    __slots__ = ("universe", "stores", "events", "slots", "nexts", "depth", "digest", "_hash", "__weakref__")

    def __init__(self, universe, stores, events, slots, nexts):
        self.universe = universe
        self.stores = stores
        self.events = events
        self.slots = slots
        self.nexts = tuple(nexts)
        self.depth = 1 + max((x.depth for x in self.nexts if isinstance(x, CoalgElem)), default=0)
        digest = hashlib.blake2b(digest_size=8)
        digest.update(repr(_space(universe)).encode())
        for array in (stores, events, slots):
            digest.update(np.ascontiguousarray(array).tobytes())
        digest.update("|".join(_token(x) for x in self.nexts).encode())
        self.digest = digest.hexdigest()
        self._hash = hash(self.digest)

    @property
    def rows(self):
        stores = enumerate_stores(self.universe)
        return tuple(
            ZRow(stores[int(s)], EVENTS.get(int(e)), self.nexts[int(k)])
            for s, e, k in zip(self.stores, self.events, self.slots)
        )

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, CoalgElem) or self.digest != other.digest:
            return False
        return (
            _space(self.universe) == _space(other.universe)
            and self.nexts == other.nexts
            and np.array_equal(self.stores, other.stores)
            and np.array_equal(self.events, other.events)
            and np.array_equal(self.slots, other.slots)
        )

    def __repr__(self):
        return f"CoalgElem(#{self.digest}, depth={self.depth})"


_INTERNED = weakref.WeakValueDictionary()


def _intern(universe, stores, events, slots, nexts):
    nexts = tuple(nexts)
    key = (_space(universe), stores.tobytes(), events.tobytes(), slots.tobytes(), nexts)
    found = _INTERNED.get(key)
    if found is None:
        found = CoalgElem(universe, stores, events, slots, nexts)
        _INTERNED[key] = found
    return found


def unfold(step_table, seed, depth):
    """Unfold the coalgebra ``step_table`` from ``seed`` for ``depth`` layers."""
    memo = {}

    def go(state, remaining):
        key = (state, remaining)
        if key in memo:
            return memo[key]
        table = step_table(state)
        nexts = []
        for x in table.nexts:
            if isinstance(x, Done):
                nexts.append(DONE)
            elif remaining == 1:
                nexts.append(CUT)
            else:
                nexts.append(go(x, remaining - 1))
        slots, nexts = _merged(table.slots, nexts)
        memo[key] = elem = _intern(table.universe, table.stores, table.events, slots, nexts)
        return elem

    return go(seed, depth)


def initial_layer(elem, universe):
    """The layer that emits every store as it is and continues with ``elem``."""
    n = len(enumerate_stores(universe))
    return _intern(
        universe, identity_codes(universe), np.zeros(n, dtype=EVENT_DTYPE), np.zeros(n, dtype=SLOT_DTYPE), (elem,)
    )


@lru_cache(maxsize=256)
def f_unfold(lang, p, universe, fuel=None, b_name=None):
    """The unfolding of ``p``: a first layer for the initial store, then up to ``fuel`` steps."""
    lang = Lang.coerce(lang)
    fuel = universe.fuel if fuel is None else fuel
    if b_name is None:
        body = unfold(lambda t: one_step(lang, t, universe), p, fuel)
    else:
        b = _lookup(BEHAVIOR_MAPS, b_name, "behavior map")
        body = unfold(lambda t: b(one_step(lang, t, universe)), p, fuel)
    return initial_layer(body, universe)


def _split(node, here, rows):
    slots = node.slots[here]
    for k in np.unique(slots):
        yield node.nexts[int(k)], rows[slots == k]


def psi_run(elem, universe, fuel=None):
    """The traces of ``elem`` from every store, as a ``BatchRun`` of width ``fuel``.

    The first layer gives the initial store of each trace; every later layer
    is one step.  Rows that share an element are advanced together.
    """
    fuel = elem.depth - 1 if fuel is None else fuel
    n = len(elem.stores)
    codes = np.full((n, fuel + 1), -1, dtype=code_dtype(universe))
    events = np.zeros((n, fuel), dtype=EVENT_DTYPE)
    length = np.zeros(n, dtype=np.int64)
    tick = np.zeros(n, dtype=bool)
    codes[:, 0] = elem.stores
    current = elem.stores.astype(np.int64)
    everyone = np.arange(n)
    frontier = dict(_split(elem, everyone, everyone))
    step = 0
    while frontier:
        following = {}
        for node, rows in frontier.items():
            if isinstance(node, Done) or node is CUT:
                tick[rows] = isinstance(node, Done)
                length[rows] = step
                continue
            if step == fuel:
                raise BridgeError(f"element is deeper than {fuel} steps")
            here = current[rows]
            after = node.stores[here]
            events[rows, step] = node.events[here]
            codes[rows, step + 1] = after
            current[rows] = after
            for nxt, sub in _split(node, here, rows):
                following.setdefault(nxt, []).append(sub)
        frontier = {x: np.concatenate(parts) for x, parts in following.items()}
        step += 1
    return BatchRun(universe, fuel, codes, events, length, tick)


def psi(elem, universe):
    return psi_run(elem, universe).traces()


def phi(trace, universe):
    """The store-oblivious element that emits ``trace``'s first state and replays its steps."""
    if trace.end is Terminator.TIMEOUT:
        raise BridgeError(f"cannot replay a timed-out trace: {trace}")
    index = store_index(universe)
    n = len(index)

    def layer(store, event, nxt):
        code = index.get(store)
        if code is None:
            raise BridgeError(f"store {render(store)} is outside the universe")
        return _intern(
            universe,
            np.full(n, code, dtype=code_dtype(universe)),
            np.full(n, EVENT_CODES.get(event, EV_SILENT), dtype=EVENT_DTYPE),
            np.zeros(n, dtype=SLOT_DTYPE),
            (nxt,),
        )

    steps = []
    event = None
    for item in trace.items[1:]:
        if isinstance(item, Store):
            steps.append((event, item))
            event = None
        else:
            event = item
    nxt = DONE
    for event, store in reversed(steps):
        nxt = layer(store, event, nxt)
    return layer(trace.initial, None, nxt)


def bridge(direction, arg, universe):
    if direction == "psi":
        return psi(arg, universe)
    if direction == "phi":
        return phi(arg, universe)
    raise UnknownName(f"unknown bridge direction {direction!r}")


def _bridge_failure(universe, task):
    lang, c, p = task
    program = plug(c, p)
    unfolded = psi_run(f_unfold(lang, program, universe), universe, universe.fuel)
    if unfolded != beh_run(lang, c, p, universe):
        return {"check": "beh", "lang": lang.value, "context": render(c), "program": render(p)}
    if lang is Lang.SOURCE:
        erased = psi_run(f_unfold(lang, program, universe, b_name="b_erase"), universe, universe.fuel)
        if erased != translate_run("b_erase", beh_run(lang, c, p, universe)):
            return {"check": "tau", "program": render(p)}
    return None


def check_bridges(universe):
    """beh agrees with psi after f on every enumerated input, and erase-H agrees with the b_erase unfolding."""
    tasks = [
        (lang, c, p)
        for lang in (Lang.SOURCE, Lang.TARGET)
        for c in enumerate_contexts(universe, lang)
        for p in enumerate_terms(universe, lang)
    ]
    results = parallel_first(partial(_bridge_failure, universe), tasks, lambda found: found is not None)
    details = {"triples": len(results), "bounds": universe.bounds()}
    if results and results[-1] is not None:
        return Verdict(False, results[-1], details=details)
    logger.info("bridges agree on %d (lang, context, program) triples", len(tasks))
    return Verdict(True, details=details)


# ─────────── Cross-plugging and the layered coalgebra ───────────

@dataclass(frozen=True)
class LayeredTerm:
    layers: int
    core: object

    def render(self):
        return "obs(" * self.layers + render(self.core) + ")" * self.layers


def cross_plug(c, p):
    return LayeredTerm(ctx_depth(c), p)


def collapse_compiled(m, compiler="sandbox"):
    """Compile the core and turn the recorded layers into observer nodes."""
    term = get_compiler(compiler).compile(m.core)
    for _ in range(m.layers):
        term = Obs(term)
    return term


def collapse_source(m):
    """Drop every recorded layer, as the back-translated context does."""
    return m.core


@lru_cache(maxsize=4096)
def layered_step(m, universe, b_name="b_erase"):
    b = _lookup(BEHAVIOR_MAPS, b_name, "behavior map")
    table = b(one_step(Lang.SOURCE, m.core, universe)).map_next(Leaf)
    table = _observer_layers(table, Leaf(m.core), m.layers, universe)
    return table.map_next(lambda x: LayeredTerm(m.layers, t_star(x).value))


def check_layered(universe, fuel=16, b_name="b_erase", programs=None):
    compiler = get_compiler("sandbox")
    if programs is None:
        programs = enumerate_terms(universe, Lang.SOURCE)
    programs = list(programs)
    contexts = enumerate_contexts(universe, Lang.TARGET)
    count = 0
    for p in programs:
        stepped = f_unfold(Lang.SOURCE, p, universe, fuel, b_name)
        for c in contexts:
            count += 1
            m = cross_plug(c, p)
            where = {"context": render(c), "program": render(p)}
            collapsed = collapse_compiled(m)
            if plug(c, compiler.compile(p)) != collapsed:
                return Verdict(False, dict(where, check="blue", collapsed=render(collapsed)))
            if plug(backtranslate(c), p) != collapse_source(m):
                return Verdict(False, dict(where, check="purple"))
            layered = initial_layer(unfold(lambda x: layered_step(x, universe, b_name), m, fuel), universe)
            if layered is not stepped:
                return Verdict(False, dict(where, check="bisimulation", b=b_name))
    logger.info("layered checks hold on %d (context, program) pairs to depth %d", count, fuel)
    return Verdict(True, details={"pairs": count, "fuel": fuel, "b": b_name, "bounds": universe.bounds()})
