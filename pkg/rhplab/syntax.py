"""
Universe, abstract syntax, expression evaluation, concrete syntax and
bounded enumeration for the Source and Target WHILE languages.
"""

from __future__ import annotations

import itertools
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Tuple, Union

from .exceptions import (
    EnumerationCapExceeded,
    ForbiddenConstruct,
    IllFormedTerm,
    LiteralOutOfRange,
    ParseError,
    UndeclaredVariable,
)

logger = logging.getLogger("rhplab.syntax")

DEFAULT_ENUM_CAP = 250_000


class Level(Enum):
    HIGH = "high"
    LOW = "low"


class Lang(Enum):
    SOURCE = "source"
    TARGET = "target"

    @classmethod
    def coerce(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise IllFormedTerm(f"unknown language {value!r} (expected source or target)")


# ─────────── Universe and stores ───────────

@dataclass(frozen=True)
class Universe:
    vars: Tuple[Tuple[str, Level], ...]
    vmax: int = 63
    fuel: int = 64
    term_depth: int = 4
    ctx_depth: int = 2
    literal_pool: Tuple[int, ...] = (0, 1, 2, 42)
    expr_depth: int = 0
    enum_cap: int = DEFAULT_ENUM_CAP

    @property
    def names(self):
        return tuple(name for name, _ in self.vars)

    def level_of(self, name):
        for var, level in self.vars:
            if var == name:
                return level
        raise UndeclaredVariable(f"variable {name!r} is not declared")

    def is_high(self, name):
        return self.level_of(name) is Level.HIGH

    @property
    def low_indices(self):
        return tuple(i for i, (_, level) in enumerate(self.vars) if level is Level.LOW)

    def problems(self):
        """Return the list of violated universe invariants (empty when valid)."""
        found = []
        if not self.vars:
            found.append("vars must not be empty")
        names = self.names
        if len(set(names)) != len(names):
            found.append("variable names must be unique")
        for name in names:
            if not _IDENT.fullmatch(name) or name in KEYWORDS:
                found.append(f"{name!r} is not a valid variable name")
        if self.vmax < 1:
            found.append("vmax must be at least 1")
        if self.fuel < 1:
            found.append("fuel must be at least 1")
        if self.term_depth < 1:
            found.append("term_depth must be at least 1")
        if self.ctx_depth < 0:
            found.append("ctx_depth must not be negative")
        if self.expr_depth < 0:
            found.append("expr_depth must not be negative")
        for n in self.literal_pool:
            if n < 0 or n > self.vmax:
                found.append(f"literal {n} is outside 0..{self.vmax}")
        if len(set(self.literal_pool)) != len(self.literal_pool):
            found.append("literal_pool must not repeat a value")
        return found

    def bounds(self):
        return {
            "vars": [[name, level.value] for name, level in self.vars],
            "vmax": self.vmax,
            "fuel": self.fuel,
            "term_depth": self.term_depth,
            "ctx_depth": self.ctx_depth,
            "literal_pool": list(self.literal_pool),
            "expr_depth": self.expr_depth,
            "enum_cap": self.enum_cap,
        }


@dataclass(frozen=True)
class Store:
    names: Tuple[str, ...]
    values: Tuple[int, ...]
    vmax: int

    def get(self, name):
        try:
            return self.values[self.names.index(name)]
        except ValueError:
            raise UndeclaredVariable(f"variable {name!r} is not declared")

    def set(self, name, value):
        index = self.names.index(name)
        if self.values[index] == value:
            return self
        values = self.values[:index] + (value,) + self.values[index + 1:]
        return Store(self.names, values, self.vmax)

    def as_dict(self):
        return dict(zip(self.names, self.values))

    def __str__(self):
        return render(self)


# ─────────── Expressions ───────────

BIN_OPS = ("add", "monus", "mul")
UN_OPS = ("not",)
_BIN_SYMBOL = {"add": "+", "monus": "-", "mul": "*"}
_SYMBOL_BIN = {v: k for k, v in _BIN_SYMBOL.items()}


@dataclass(frozen=True)
class Lit:
    value: int


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Bin:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Un:
    op: str
    operand: "Expr"


Expr = Union[Lit, Var, Bin, Un]


def eval_expr(e, s):
    """Evaluate ``e`` in store ``s``; arithmetic wraps modulo vmax+1."""
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, Var):
        return s.get(e.name)
    if isinstance(e, Un):
        return 1 if eval_expr(e.operand, s) == 0 else 0
    left = eval_expr(e.left, s)
    right = eval_expr(e.right, s)
    if e.op == "add":
        return (left + right) % (s.vmax + 1)
    if e.op == "mul":
        return (left * right) % (s.vmax + 1)
    return max(left - right, 0)


def expr_vars(e):
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Lit):
        return set()
    if isinstance(e, Un):
        return expr_vars(e.operand)
    return expr_vars(e.left) | expr_vars(e.right)


def reads_high(e, universe):
    return any(universe.is_high(name) for name in expr_vars(e))


# ─────────── Terms and contexts ───────────

@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Assign:
    var: str
    expr: Expr


@dataclass(frozen=True)
class Seq:
    first: "Term"
    second: "Term"


@dataclass(frozen=True)
class While:
    guard: Expr
    body: "Term"


@dataclass(frozen=True)
class Obs:
    body: "Term"


@dataclass(frozen=True)
class Sandbox:
    assign: "Term"


@dataclass(frozen=True)
class Done:
    """The terminal marker; only ever produced as a step result."""


DONE = Done()


@dataclass(frozen=True)
class Leaf:
    """An opaque carrier element standing in a free term; translations never look inside."""

    value: object


Term = Union[Skip, Assign, Seq, While, Obs, Sandbox]


@dataclass(frozen=True)
class Hole:
    pass


@dataclass(frozen=True)
class ObsCtx:
    inner: "Ctx" = field(default_factory=Hole)


Ctx = Union[Hole, ObsCtx]


def plug(c, p):
    if isinstance(c, Hole):
        return p
    return Obs(plug(c.inner, p))


def ctx_depth(c):
    depth = 0
    while isinstance(c, ObsCtx):
        depth += 1
        c = c.inner
    return depth


def term_size(p):
    """Number of statement nodes in ``p`` (expressions are not counted)."""
    if isinstance(p, (Skip, Assign)):
        return 1
    if isinstance(p, Seq):
        return 1 + term_size(p.first) + term_size(p.second)
    if isinstance(p, (While, Obs)):
        return 1 + term_size(p.body)
    if isinstance(p, Sandbox):
        return 1 + term_size(p.assign)
    raise IllFormedTerm(f"not a term: {p!r}")


def check_term(p, lang, universe):
    """Raise unless ``p`` is a well-formed term of ``lang`` over ``universe``."""
    lang = Lang.coerce(lang)
    if isinstance(p, Skip):
        return
    if isinstance(p, Assign):
        universe.level_of(p.var)
        _check_expr(p.expr, universe)
        return
    if isinstance(p, Seq):
        check_term(p.first, lang, universe)
        check_term(p.second, lang, universe)
        return
    if isinstance(p, While):
        _check_expr(p.guard, universe)
        check_term(p.body, lang, universe)
        return
    if isinstance(p, (Obs, Sandbox)):
        if lang is Lang.SOURCE:
            raise ForbiddenConstruct(f"{type(p).__name__} is not part of the Source language")
        if isinstance(p, Sandbox):
            if not isinstance(p.assign, Assign):
                raise IllFormedTerm("a sandbox must wrap exactly one assignment")
            check_term(p.assign, lang, universe)
        else:
            check_term(p.body, lang, universe)
        return
    raise IllFormedTerm(f"not a {lang.value} term: {p!r}")


def _check_expr(e, universe):
    if isinstance(e, Lit):
        if e.value < 0 or e.value > universe.vmax:
            raise LiteralOutOfRange(f"literal {e.value} exceeds vmax={universe.vmax}")
    elif isinstance(e, Var):
        universe.level_of(e.name)
    elif isinstance(e, Un):
        _check_expr(e.operand, universe)
    elif isinstance(e, Bin):
        _check_expr(e.left, universe)
        _check_expr(e.right, universe)
    else:
        raise IllFormedTerm(f"not an expression: {e!r}")


# ─────────── Printer ───────────

def render(ast):
    if isinstance(ast, Store):
        return ",".join(f"{n}={v}" for n, v in zip(ast.names, ast.values))
    if isinstance(ast, (Hole, ObsCtx)):
        return "hole" if isinstance(ast, Hole) else f"obs({render(ast.inner)})"
    if isinstance(ast, (Lit, Var, Bin, Un)):
        return _render_expr(ast)
    if isinstance(ast, Skip):
        return "skip"
    if isinstance(ast, Assign):
        return f"{ast.var} := {_render_expr(ast.expr)}"
    if isinstance(ast, Seq):
        left = render(ast.first)
        if isinstance(ast.first, Seq):
            left = f"{{ {left} }}"
        return f"{left} ; {render(ast.second)}"
    if isinstance(ast, While):
        return f"while {_render_expr(ast.guard)} {{ {render(ast.body)} }}"
    if isinstance(ast, Obs):
        return f"obs({render(ast.body)})"
    if isinstance(ast, Sandbox):
        return f"sandbox{{ {render(ast.assign)} }}"
    if isinstance(ast, Done):
        return "done"
    if isinstance(ast, Leaf):
        return f"<{render(ast.value)}>"
    raise IllFormedTerm(f"cannot render {ast!r}")


def _render_expr(e):
    if isinstance(e, Lit):
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Un):
        return f"not {_render_operand(e.operand)}"
    return f"{_render_operand(e.left)} {_BIN_SYMBOL[e.op]} {_render_operand(e.right)}"


def _render_operand(e):
    text = _render_expr(e)
    return f"({text})" if isinstance(e, Bin) else text


# ─────────── Parser ───────────

KEYWORDS = frozenset({"skip", "while", "obs", "sandbox", "hole", "not"})
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<sym>:=|[;{}()+\-*=,]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            offending = len(text[pos:]) - len(text[pos:].lstrip()) + pos
            raise ParseError(f"unexpected character {text[offending]!r}", offending)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, lang, universe):
        self.tokens = _tokenize(text)
        self.index = 0
        self.lang = lang
        self.universe = universe

    # token helpers
    def peek(self):
        return self.tokens[self.index]

    def advance(self):
        token = self.tokens[self.index]
        self.index += 1
        return token

    def at(self, value):
        kind, text, _ = self.peek()
        return kind in ("sym", "ident") and text == value

    def expect(self, value):
        kind, text, pos = self.advance()
        if text != value or kind not in ("sym", "ident"):
            raise ParseError(f"expected {value!r} but found {text or 'end of input'!r}", pos)

    def finish(self):
        kind, text, pos = self.peek()
        if kind != "eof":
            raise ParseError(f"unexpected trailing input {text!r}", pos)

    def forbid_in_source(self, construct, pos):
        if self.lang is Lang.SOURCE:
            raise ForbiddenConstruct(f"{construct} is not allowed in Source", pos)

    def variable(self):
        kind, text, pos = self.advance()
        if kind != "ident" or text in KEYWORDS:
            raise ParseError(f"expected a variable but found {text or 'end of input'!r}", pos)
        if text not in self.universe.names:
            raise UndeclaredVariable(f"variable {text!r} is not declared", pos)
        return text

    # statements
    def sequence(self):
        first = self.statement()
        if self.at(";"):
            self.advance()
            return Seq(first, self.sequence())
        return first

    def statement(self):
        kind, text, pos = self.peek()
        if self.at("skip"):
            self.advance()
            return Skip()
        if self.at("while"):
            self.advance()
            guard = self.expr()
            self.expect("{")
            body = self.sequence()
            self.expect("}")
            return While(guard, body)
        if self.at("obs"):
            self.forbid_in_source("obs", pos)
            self.advance()
            self.expect("(")
            body = self.sequence()
            self.expect(")")
            return Obs(body)
        if self.at("sandbox"):
            self.forbid_in_source("sandbox", pos)
            self.advance()
            self.expect("{")
            assign = self.assignment()
            self.expect("}")
            return Sandbox(assign)
        if self.at("{"):
            self.advance()
            block = self.sequence()
            self.expect("}")
            return block
        if kind == "ident" and text not in KEYWORDS:
            return self.assignment()
        raise ParseError(f"expected a statement but found {text or 'end of input'!r}", pos)

    def assignment(self):
        name = self.variable()
        self.expect(":=")
        return Assign(name, self.expr())

    # expressions
    def expr(self):
        left = self.product()
        while self.at("+") or self.at("-"):
            op = _SYMBOL_BIN[self.advance()[1]]
            left = Bin(op, left, self.product())
        return left

    def product(self):
        left = self.unary()
        while self.at("*"):
            self.advance()
            left = Bin("mul", left, self.unary())
        return left

    def unary(self):
        if self.at("not"):
            self.advance()
            return Un("not", self.unary())
        return self.atom()

    def atom(self):
        kind, text, pos = self.peek()
        if kind == "num":
            self.advance()
            value = int(text)
            if value > self.universe.vmax:
                raise LiteralOutOfRange(f"literal {value} exceeds vmax={self.universe.vmax}", pos)
            return Lit(value)
        if self.at("("):
            self.advance()
            inner = self.expr()
            self.expect(")")
            return inner
        return Var(self.variable())

    # contexts and stores
    def context(self):
        kind, text, pos = self.peek()
        if self.at("hole"):
            self.advance()
            return Hole()
        if self.at("obs"):
            self.forbid_in_source("obs", pos)
            self.advance()
            self.expect("(")
            inner = self.context()
            self.expect(")")
            return ObsCtx(inner)
        raise ParseError(f"expected a context but found {text or 'end of input'!r}", pos)

    def store(self):
        braced = self.at("{")
        if braced:
            self.advance()
        seen = {}
        while True:
            _, _, pos = self.peek()
            name = self.variable()
            if name in seen:
                raise ParseError(f"variable {name!r} assigned twice", pos)
            self.expect("=")
            kind, text, num_pos = self.advance()
            if kind != "num":
                raise ParseError(f"expected a number but found {text!r}", num_pos)
            value = int(text)
            if value > self.universe.vmax:
                raise LiteralOutOfRange(f"value {value} exceeds vmax={self.universe.vmax}", num_pos)
            seen[name] = value
            if not self.at(","):
                break
            self.advance()
        if braced:
            self.expect("}")
        missing = [n for n in self.universe.names if n not in seen]
        if missing:
            raise ParseError(f"store is missing variables: {', '.join(missing)}")
        return make_store(self.universe, seen)


def parse(text, lang, kind, universe):
    """Parse ``text`` as a term, ctx, expr or store of ``lang``."""
    parser = _Parser(text, Lang.coerce(lang), universe)
    if kind == "term":
        result = parser.sequence()
    elif kind == "ctx":
        result = parser.context()
    elif kind == "expr":
        result = parser.expr()
    elif kind == "store":
        result = parser.store()
    else:
        raise ValueError(f"unknown syntactic kind {kind!r}")
    parser.finish()
    return result


def make_store(universe, values):
    return Store(universe.names, tuple(values[n] for n in universe.names), universe.vmax)


# ─────────── Enumeration ───────────

def _guard(kind, size, universe):
    if size > universe.enum_cap:
        raise EnumerationCapExceeded(kind, size, universe.enum_cap)


@lru_cache(maxsize=32)
def enumerate_stores(universe):
    _guard("stores", (universe.vmax + 1) ** len(universe.vars), universe)
    names = universe.names
    return tuple(
        Store(names, values, universe.vmax)
        for values in itertools.product(range(universe.vmax + 1), repeat=len(names))
    )


@lru_cache(maxsize=32)
def store_index(universe):
    return {s: i for i, s in enumerate(enumerate_stores(universe))}


def _exprs_up_to(universe, depth):
    layer = [Lit(n) for n in dict.fromkeys(universe.literal_pool)] + [Var(n) for n in universe.names]
    for _ in range(depth):
        seen = set(layer)
        grown = list(layer)
        for candidate in itertools.chain(
            (Un(op, a) for op in UN_OPS for a in layer),
            (Bin(op, a, b) for op in BIN_OPS for a in layer for b in layer),
        ):
            if candidate not in seen:
                seen.add(candidate)
                grown.append(candidate)
        layer = grown
    return tuple(layer)


@lru_cache(maxsize=32)
def enumerate_exprs(universe):
    return _exprs_up_to(universe, max(1, universe.expr_depth))


def _term_counts(universe, lang, exprs):
    n_vars = len(universe.names)
    counts = [0]
    for size in range(1, universe.term_depth + 1):
        if size == 1:
            c = 1 + n_vars * exprs
        else:
            c = exprs * counts[size - 1]
            c += sum(counts[i] * counts[size - 1 - i] for i in range(1, size - 1))
            if lang is Lang.TARGET:
                c += counts[size - 1]
                if size == 2:
                    c += n_vars * exprs
        counts.append(c)
    return counts


@lru_cache(maxsize=32)
def enumerate_terms(universe, lang):
    """All terms of ``lang`` with at most ``term_depth`` statement nodes, smallest first."""
    lang = Lang.coerce(lang)
    guards = _exprs_up_to(universe, universe.expr_depth)
    _guard("terms", sum(_term_counts(universe, lang, len(guards))), universe)

    by_size = {1: [Skip()] + [Assign(v, e) for v in universe.names for e in guards]}
    for size in range(2, universe.term_depth + 1):
        layer = []
        for i in range(1, size - 1):
            layer.extend(Seq(a, b) for a in by_size[i] for b in by_size[size - 1 - i])
        layer.extend(While(e, body) for e in guards for body in by_size[size - 1])
        if lang is Lang.TARGET:
            layer.extend(Obs(body) for body in by_size[size - 1])
            if size == 2:
                layer.extend(Sandbox(a) for a in by_size[1] if isinstance(a, Assign))
        by_size[size] = layer
    terms = tuple(itertools.chain.from_iterable(by_size[n] for n in sorted(by_size)))
    logger.debug("enumerated %d %s terms up to size %d", len(terms), lang.value, universe.term_depth)
    return terms


@lru_cache(maxsize=32)
def enumerate_contexts(universe, lang):
    lang = Lang.coerce(lang)
    if lang is Lang.SOURCE:
        return (Hole(),)
    contexts = [Hole()]
    for _ in range(universe.ctx_depth):
        contexts.append(ObsCtx(contexts[-1]))
    return tuple(contexts)


def enumerate_kind(kind, universe, lang=Lang.SOURCE):
    if kind == "stores":
        return enumerate_stores(universe)
    if kind == "terms":
        return enumerate_terms(universe, Lang.coerce(lang))
    if kind == "contexts":
        return enumerate_contexts(universe, Lang.coerce(lang))
    if kind == "exprs":
        return enumerate_exprs(universe)
    raise ValueError(f"unknown enumeration kind {kind!r}")
