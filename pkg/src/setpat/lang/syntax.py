"""Abstract syntax and parser for the small functional language.

Programs are a list of ``data`` declarations followed by top-level
definitions. Each top-level item starts in column 1, so a definition may span
several lines as long as its continuation lines are indented.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field

__all__ = [
    "Span", "LangSyntaxError", "Term", "Var", "Lam", "App", "Ctor", "Match", "Let",
    "Lit", "Pattern", "PVar", "PCtor", "UType", "TVar", "Data", "Arrow",
    "DataEnv", "OPAQUE_TYPES", "Program", "parse_program", "format_type",
]

OPAQUE_TYPES = ("Int", "Double")


@dataclass(frozen=True, order=True)
class Span:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


class LangSyntaxError(Exception):
    def __init__(self, message: str, span: Span | None = None):
        self.message = message
        self.span = span
        super().__init__(f"{span}: {message}" if span else message)


# ---------------------------------------------------------------------------
# Underlying types


class UType:
    __slots__ = ()

    def __str__(self) -> str:
        return format_type(self)


@dataclass(frozen=True)
class TVar(UType):
    id: int


@dataclass(frozen=True)
class Data(UType):
    name: str


@dataclass(frozen=True)
class Arrow(UType):
    dom: UType
    cod: UType


def format_type(t: UType) -> str:
    if isinstance(t, TVar):
        return f"t{t.id}"
    if isinstance(t, Data):
        return t.name
    dom = format_type(t.dom)
    if isinstance(t.dom, Arrow):
        dom = f"({dom})"
    return f"{dom} -> {format_type(t.cod)}"


@dataclass
class DataEnv:
    """Datatypes in declaration order; constructor names are global."""

    types: dict = field(default_factory=dict)       # D -> [(K, [UType])]

    def constructors(self, d: str) -> list:
        return self.types.get(d, [])

    def lookup(self, k: str) -> tuple[str, list]:
        for d, ctors in self.types.items():
            for name, args in ctors:
                if name == k:
                    return d, args
        raise KeyError(k)

    def is_opaque(self, d: str) -> bool:
        return d in OPAQUE_TYPES

    def all_constructors(self) -> list[tuple[str, int]]:
        return [(k, len(args)) for ctors in self.types.values() for k, args in ctors]


# ---------------------------------------------------------------------------
# Terms and patterns. ``nid`` is unique per node within one parse, so typing
# and analysis results can be keyed by it.

_nids = itertools.count(1)


def _nid() -> int:
    return next(_nids)


class Term:
    __slots__ = ()


@dataclass(frozen=True)
class Var(Term):
    name: str
    span: Span = field(default=Span(0, 0), compare=False)
    nid: int = field(default_factory=_nid, compare=False)


@dataclass(frozen=True)
class Lam(Term):
    param: str
    body: Term
    span: Span = field(default=Span(0, 0), compare=False)
    nid: int = field(default_factory=_nid, compare=False)


@dataclass(frozen=True)
class App(Term):
    fn: Term
    arg: Term
    span: Span = field(default=Span(0, 0), compare=False)
    nid: int = field(default_factory=_nid, compare=False)


@dataclass(frozen=True)
class Ctor(Term):
    name: str
    dtype: str
    args: tuple = ()
    span: Span = field(default=Span(0, 0), compare=False)
    nid: int = field(default_factory=_nid, compare=False)


@dataclass(frozen=True)
class Match(Term):
    scrutinee: Term
    branches: tuple                 # ((Pattern, Term), ...)
    span: Span = field(default=Span(0, 0), compare=False)
    nid: int = field(default_factory=_nid, compare=False)


@dataclass(frozen=True)
class Let(Term):
    name: str
    defn: Term
    body: Term
    span: Span = field(default=Span(0, 0), compare=False)
    nid: int = field(default_factory=_nid, compare=False)


@dataclass(frozen=True)
class Lit(Term):
    value: object
    dtype: str
    span: Span = field(default=Span(0, 0), compare=False)
    nid: int = field(default_factory=_nid, compare=False)


class Pattern:
    __slots__ = ()


@dataclass(frozen=True)
class PVar(Pattern):
    name: str
    span: Span = field(default=Span(0, 0), compare=False)


@dataclass(frozen=True)
class PCtor(Pattern):
    name: str
    dtype: str
    args: tuple = ()
    span: Span = field(default=Span(0, 0), compare=False)


@dataclass
class Program:
    data: DataEnv
    term: Term
    definitions: list               # [(name, span)] in source order


# ---------------------------------------------------------------------------
# Lexer

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>--[^\n]*)
  | (?P<num>\d+\.\d+|\d+)
  | (?P<upper>[A-Z][A-Za-z0-9_']*)
  | (?P<lower>[a-z_][A-Za-z0-9_']*)
  | (?P<sym>->|[\\.=|(),;{}])
""", re.VERBOSE)

# "case" and "of" are reserved so Haskell-style matches fail loudly
KEYWORDS = frozenset({"data", "let", "in", "match", "with", "case", "of"})


@dataclass(frozen=True)
class Token:
    kind: str       # num | upper | lower | kw | sym | eof
    text: str
    span: Span


def tokenize(text: str) -> list[list[Token]]:
    """Split into top-level items.

    An item starts at a name or ``data`` in column 1; anything else in
    column 1 (such as a closing brace) continues the previous item.
    """
    items: list[list[Token]] = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise LangSyntaxError(f"unexpected character {text[pos]!r}", Span(line, col))
        kind = m.lastgroup
        tok_text = m.group()
        if kind == "nl":
            line, col = line + 1, 1
        elif kind in ("ws", "comment"):
            col += len(tok_text)
        else:
            if kind == "lower" and tok_text in KEYWORDS:
                kind = "kw"
            tok = Token(kind, tok_text, Span(line, col))
            starts_item = col == 1 and (kind == "lower" or tok_text == "data")
            if starts_item or not items:
                items.append([])
            items[-1].append(tok)
            col += len(tok_text)
        pos = m.end()
    return items


# ---------------------------------------------------------------------------
# Parser


class _Parser:
    def __init__(self, tokens: list[Token], data: DataEnv | None):
        self.toks = tokens
        self.i = 0
        self.data = data
        last = tokens[-1].span if tokens else Span(1, 1)
        self.eof = Token("eof", "", Span(last.line, last.col + len(tokens[-1].text) if tokens else 1))

    def peek(self, k: int = 0) -> Token:
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else self.eof

    def next(self) -> Token:
        tok = self.peek()
        self.i += 1
        return tok

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind in ("sym", "kw") and tok.text == text

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if not self.at(text):
            found = tok.text or "end of definition"
            raise LangSyntaxError(f"expected {text!r}, found {found!r}", tok.span)
        return self.next()

    def expect_kind(self, kind: str, what: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            found = tok.text or "end of definition"
            raise LangSyntaxError(f"expected {what}, found {found!r}", tok.span)
        return self.next()

    def done(self) -> None:
        if self.peek().kind != "eof":
            tok = self.peek()
            raise LangSyntaxError(f"unexpected {tok.text!r}", tok.span)

    # types

    def type_(self) -> UType:
        left = self.type_atom()
        if self.at("->"):
            self.next()
            return Arrow(left, self.type_())
        return left

    def type_atom(self) -> UType:
        if self.at("("):
            self.next()
            t = self.type_()
            self.expect(")")
            return t
        tok = self.expect_kind("upper", "a type name")
        return Data(tok.text)

    # terms

    def term(self) -> Term:
        tok = self.peek()
        if self.at("\\"):
            self.next()
            params = [self.expect_kind("lower", "a parameter name")]
            while self.peek().kind == "lower":
                params.append(self.next())
            self.expect(".")
            body = self.term()
            for p in reversed(params):
                body = Lam(p.text, body, p.span)
            return body
        if self.at("let"):
            self.next()
            name = self.expect_kind("lower", "a variable name")
            self.expect("=")
            defn = self.term()
            self.expect("in")
            return Let(name.text, defn, self.term(), name.span)
        if self.at("match"):
            self.next()
            scrut = self.term()
            self.expect("with")
            self.expect("{")
            branches = []
            while True:
                pat = self.pattern()
                self.expect("->")
                rhs = self.term()
                self.expect(";")
                branches.append((pat, rhs))
                if self.at("}"):
                    break
            self.next()
            return Match(scrut, tuple(branches), tok.span)
        return self.app_term()

    def starts_atom(self) -> bool:
        tok = self.peek()
        return tok.kind in ("lower", "upper", "num") or self.at("(")

    def app_term(self) -> Term:
        if not self.starts_atom():
            tok = self.peek()
            found = tok.text or "end of definition"
            raise LangSyntaxError(f"expected a term, found {found!r}", tok.span)
        t = self.atom()
        while self.starts_atom():
            arg = self.atom()
            t = App(t, arg, _span_of(t))
        return t

    def atom(self) -> Term:
        tok = self.next()
        if tok.kind == "lower":
            return Var(tok.text, tok.span)
        if tok.kind == "num":
            if "." in tok.text:
                return Lit(float(tok.text), "Double", tok.span)
            return Lit(int(tok.text), "Int", tok.span)
        if tok.kind == "upper":
            args = []
            if self.at("("):
                self.next()
                args.append(self.term())
                while self.at(","):
                    self.next()
                    args.append(self.term())
                self.expect(")")
            dtype = self.constructor(tok, len(args))
            return Ctor(tok.text, dtype, tuple(args), tok.span)
        if tok.text == "(":
            t = self.term()
            self.expect(")")
            return t
        raise LangSyntaxError(f"unexpected {tok.text!r}", tok.span)

    def constructor(self, tok: Token, arity: int) -> str:
        try:
            dtype, params = self.data.lookup(tok.text)
        except KeyError:
            raise LangSyntaxError(f"unknown constructor {tok.text}", tok.span) from None
        if len(params) != arity:
            raise LangSyntaxError(
                f"constructor {tok.text} takes {len(params)} argument(s), given {arity}", tok.span)
        return dtype

    def pattern(self) -> Pattern:
        tok = self.next()
        if tok.kind == "lower":
            return PVar(tok.text, tok.span)
        if tok.kind == "upper":
            args = []
            if self.at("("):
                self.next()
                args.append(self.pattern())
                while self.at(","):
                    self.next()
                    args.append(self.pattern())
                self.expect(")")
            dtype = self.constructor(tok, len(args))
            return PCtor(tok.text, dtype, tuple(args), tok.span)
        found = tok.text or "end of definition"
        raise LangSyntaxError(f"expected a pattern, found {found!r}", tok.span)


def _span_of(t: Term) -> Span:
    return t.span


def _parse_data(p: _Parser, data: DataEnv, pending: list) -> None:
    p.expect("data")
    name = p.expect_kind("upper", "a datatype name")
    if name.text in data.types or name.text in OPAQUE_TYPES:
        raise LangSyntaxError(f"datatype {name.text} defined twice", name.span)
    p.expect("=")
    ctors = []
    while True:
        k = p.expect_kind("upper", "a constructor name")
        args = []
        if p.at("("):
            p.next()
            args.append(p.type_())
            while p.at(","):
                p.next()
                args.append(p.type_())
            p.expect(")")
        ctors.append((k.text, args))
        pending.append((k, args))
        if not p.at("|"):
            break
        p.next()
    p.done()
    data.types[name.text] = ctors


def _type_names(t: UType):
    if isinstance(t, Data):
        yield t.name
    elif isinstance(t, Arrow):
        yield from _type_names(t.dom)
        yield from _type_names(t.cod)


def parse_program(text: str) -> Program:
    """Parse and desugar to nested ``Let``s ending in the last definition."""
    data = DataEnv()
    defs: list[tuple[Token, list[Token]]] = []
    pending: list = []
    seen_ctors: set[str] = set()
    for item in tokenize(text):
        head = item[0]
        if head.kind == "kw" and head.text == "data":
            if defs:
                raise LangSyntaxError("datatype declarations must precede definitions", head.span)
            before = len(pending)
            _parse_data(_Parser(item, data), data, pending)
            for k, _ in pending[before:]:
                if k.text in seen_ctors:
                    raise LangSyntaxError(f"constructor {k.text} defined twice", k.span)
                seen_ctors.add(k.text)
        elif head.kind == "lower":
            defs.append((head, item))
        else:
            raise LangSyntaxError(f"expected a definition, found {head.text!r}", head.span)
    for k, args in pending:
        for arg in args:
            for d in _type_names(arg):
                if d not in data.types and d not in OPAQUE_TYPES:
                    raise LangSyntaxError(f"unknown type {d} in constructor {k.text}", k.span)
    if not defs:
        raise LangSyntaxError("a program needs at least one definition", Span(1, 1))
    bodies = []
    for head, item in defs:
        p = _Parser(item, data)
        p.next()
        p.expect("=")
        bodies.append((head, p.term()))
        p.done()
    last_head = bodies[-1][0]
    term: Term = Var(last_head.text, last_head.span)
    for head, body in reversed(bodies):
        term = Let(head.text, body, term, head.span)
    return Program(data, term, [(h.text, h.span) for h, _ in bodies])
