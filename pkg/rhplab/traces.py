"""
Fuel-bounded traces, whole-program behaviors and the abstraction /
concretization pair between abstract traces (with H) and observable ones.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import FrozenSet, Tuple

import numpy as np

from .batch import run_batch
from .exceptions import GaloisError, ParseError, UnknownName
from .opsem import Event, step
from .syntax import Lang, Level, Store, Universe, check_term, enumerate_stores, parse, plug, render, store_index

logger = logging.getLogger("rhplab.traces")


class Terminator(Enum):
    TICK = "OK"
    TIMEOUT = "TIMEOUT"


@dataclass(frozen=True)
class Trace:
    items: Tuple[object, ...]
    end: Terminator
    rules: Tuple[str, ...] = field(default=(), compare=False, hash=False, repr=False)

    @property
    def initial(self):
        return self.items[0]

    @property
    def steps(self):
        return sum(1 for item in self.items[1:] if isinstance(item, Store))

    def stores(self):
        return [item for item in self.items if isinstance(item, Store)]

    def contains(self, event):
        return event in self.items

    def erase_h(self):
        if Event.H not in self.items:
            return self
        return Trace(tuple(i for i in self.items if i is not Event.H), self.end)

    def tokens(self):
        out = []
        for item in self.items:
            if isinstance(item, Store):
                out.append("{" + render(item) + "}")
            elif item is Event.H:
                out.append("#H")
            else:
                out.append("!")
        out.append(self.end.value)
        return out

    def __str__(self):
        return " ".join(self.tokens())


Behavior = FrozenSet[Trace]


def run(lang, s0, p, fuel, universe, record_rules=False):
    """Run ``p`` from ``s0`` for at most ``fuel`` steps."""
    lang = Lang.coerce(lang)
    items = [s0]
    rules = []
    current, s = p, s0
    for _ in range(fuel):
        outcome = step(lang, s, current, universe)
        if outcome.event is not Event.SILENT:
            items.append(outcome.event)
        items.append(outcome.store)
        if record_rules:
            rules.append(outcome.rule)
        if outcome.terminated:
            return Trace(tuple(items), Terminator.TICK, tuple(rules))
        current, s = outcome.residual, outcome.store
    return Trace(tuple(items), Terminator.TIMEOUT, tuple(rules))


@lru_cache(maxsize=64)
def _behavior(lang, program, universe):
    return run_batch(lang, program, universe).traces()


def beh(lang, c, p, universe) -> Behavior:
    lang = Lang.coerce(lang)
    program = plug(c, p)
    check_term(program, lang, universe)
    return _behavior(lang, program, universe)


def beh_run(lang, c, p, universe):
    """``beh`` as arrays: one row per initial store, in enumeration order."""
    return run_batch(Lang.coerce(lang), plug(c, p), universe)


def canonical(behavior, universe):
    """Traces of ``behavior`` ordered by the enumeration index of their initial store."""
    index = store_index(universe)
    ordered = sorted(behavior, key=lambda t: index[t.initial])
    if len({t.initial for t in ordered}) != len(ordered):
        # several traces per initial store: break ties on the rendered text
        ordered.sort(key=lambda t: (index[t.initial], t.tokens()))
    return ordered


def render_behavior(behavior, universe):
    return "\n".join(str(t) for t in canonical(behavior, universe))


def behavior_json(behavior, universe):
    return [str(t) for t in canonical(behavior, universe)]


def is_fuel_limited(behavior):
    return any(t.end is Terminator.TIMEOUT for t in behavior)


def by_initial_store(behavior):
    grouped = {}
    for t in behavior:
        grouped.setdefault(t.initial, []).append(t)
    return grouped


def is_prefix_extension(short, long):
    """True when ``long`` extends ``short`` (ignoring the Timeout marker of ``short``)."""
    if short.end is Terminator.TICK:
        return short == long
    return long.items[: len(short.items)] == short.items


def parse_trace(text, universe, lang=Lang.TARGET):
    lang = Lang.coerce(lang)
    tokens = text.split()
    if len(tokens) < 2:
        raise ParseError(f"trace {text!r} needs an initial store and a terminator")
    try:
        end = Terminator(tokens[-1])
    except ValueError:
        raise ParseError(f"trace must end with OK or TIMEOUT, found {tokens[-1]!r}")
    items = []
    for token in tokens[:-1]:
        if token == "#H":
            items.append(Event.H)
        elif token == "!":
            if lang is Lang.SOURCE:
                raise ParseError("'!' cannot occur in a Source trace")
            items.append(Event.BANG)
        else:
            items.append(parse(token, lang, "store", universe))
    if not isinstance(items[0], Store):
        raise ParseError("a trace starts with a store")
    return Trace(tuple(items), end)


# ─────────── Abstraction / concretization ───────────

@dataclass(frozen=True)
class TraceSpace:
    """All traces a program of ``lang`` can produce within ``fuel`` steps over ``universe``."""

    universe: object
    lang: Lang = Lang.TARGET
    fuel: int = 8

    def check_observable(self, t):
        if Event.H in t.items:
            raise GaloisError(f"observable trace {t} contains #H")
        self._check_shape(t)

    def _check_shape(self, t):
        stores = store_index(self.universe)
        previous_was_store = False
        for item in t.items:
            if isinstance(item, Store):
                if item not in stores:
                    raise GaloisError(f"store {render(item)} is outside the universe")
                previous_was_store = True
                continue
            if not previous_was_store:
                raise GaloisError(f"two events in one step in {t}")
            if item is Event.BANG and self.lang is Lang.SOURCE:
                raise GaloisError(f"Source trace {t} contains '!'")
            previous_was_store = False
        if not isinstance(t.items[-1], Store) or not isinstance(t.items[0], Store):
            raise GaloisError(f"malformed trace {t}")
        if t.steps < 1 or t.steps > self.fuel:
            raise GaloisError(f"trace {t} takes {t.steps} steps, outside 1..{self.fuel}")
        if t.end is Terminator.TIMEOUT and t.steps != self.fuel:
            raise GaloisError(f"trace {t} times out before fuel {self.fuel} is spent")

    def observable_traces(self):
        """Every observable trace of the space, in a fixed order (tiny universes only)."""
        stores = enumerate_stores(self.universe)
        step_events = (None, Event.BANG) if self.lang is Lang.TARGET else (None,)
        found = []
        for k in range(1, self.fuel + 1):
            ends = (Terminator.TICK, Terminator.TIMEOUT) if k == self.fuel else (Terminator.TICK,)
            for path in itertools.product(stores, repeat=k + 1):
                for events in itertools.product(step_events, repeat=k):
                    items = [path[0]]
                    for event, store in zip(events, path[1:]):
                        if event is not None:
                            items.append(event)
                        items.append(store)
                    for end in ends:
                        found.append(Trace(tuple(items), end))
        return found

    def sample_trace(self, rng):
        stores = enumerate_stores(self.universe)
        k = int(rng.integers(1, self.fuel + 1))
        path = rng.integers(0, len(stores), size=k + 1)
        bangs = rng.random(k) < 0.25 if self.lang is Lang.TARGET else np.zeros(k, dtype=bool)
        items = [stores[path[0]]]
        for i in range(k):
            if bangs[i]:
                items.append(Event.BANG)
            items.append(stores[path[i + 1]])
        end = Terminator.TIMEOUT if k == self.fuel and rng.random() < 0.5 else Terminator.TICK
        return Trace(tuple(items), end)

    def sample_hyperproperty(self, rng, max_behaviors=4, max_traces=4):
        behaviors = set()
        for _ in range(int(rng.integers(0, max_behaviors + 1))):
            size = int(rng.integers(0, max_traces + 1))
            behaviors.add(frozenset(self.sample_trace(rng) for _ in range(size)))
        return frozenset(behaviors)


def alpha(traces):
    return frozenset(t.erase_h() for t in traces)


def gamma(obs_traces, space):
    """Largest set of abstract traces in ``space`` whose H-erasure lies in ``obs_traces``."""
    if space is None:
        raise GaloisError("concretization needs a bounded trace space")
    result = set()
    for y in obs_traces:
        space.check_observable(y)
        result.update(_insertions(y))
    return frozenset(result)


def _insertions(y):
    # each step without '!' may or may not have carried an internal event
    head, rest = y.items[0], y.items[1:]
    steps = []
    pending = []
    for item in rest:
        pending.append(item)
        if isinstance(item, Store):
            steps.append(tuple(pending))
            pending = []
    choices = [((s,), (Event.H,) + s) if len(s) == 1 else (s,) for s in steps]
    for picked in itertools.product(*choices):
        yield Trace((head,) + tuple(itertools.chain.from_iterable(picked)), y.end)


def galois(mode, arg, space=None):
    if mode == "alpha":
        return alpha(arg)
    if mode == "gamma":
        return gamma(arg, space)
    raise UnknownName(f"unknown galois mode {mode!r}")


def lift_alpha(family):
    return frozenset(alpha(x) for x in family)


def lift_gamma(family, space):
    return frozenset(gamma(y, space) for y in family)


def insertion_counterexamples(space, samples=1000, seed=0, exhaustive=False):
    """Observable hyperproperties Y for which lifted alpha after lifted gamma differs from Y."""
    failures = []
    if exhaustive:
        traces = space.observable_traces()
        for mask in range(2 ** len(traces)):
            y = frozenset(t for i, t in enumerate(traces) if mask >> i & 1)
            if alpha(gamma(y, space)) != y:
                failures.append(frozenset({y}))
            if lift_alpha(lift_gamma({y}, space)) != {y}:
                failures.append(frozenset({y}))
        logger.info("insertion law checked on all %d observable trace sets", 2 ** len(traces))
        return failures
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        family = space.sample_hyperproperty(rng)
        if lift_alpha(lift_gamma(family, space)) != family:
            failures.append(family)
    logger.info("insertion law checked on %d sampled hyperproperties (seed %s)", samples, seed)
    return failures


def two_store_space():
    """One-step Source traces over a single high variable ranging over {0, 1}."""
    universe = Universe(vars=(("h", Level.HIGH),), vmax=1, fuel=1, literal_pool=(0, 1))
    return TraceSpace(universe, Lang.SOURCE, fuel=1)
