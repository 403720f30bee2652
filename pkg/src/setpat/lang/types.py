"""Underlying type inference: unification with let-generalization.

Recursion is monomorphic: a ``let``-bound name has a plain type inside its
own definition and is generalized only for the body. Match exhaustiveness is
deliberately not checked here.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .syntax import (
    App, Arrow, Ctor, Data, DataEnv, Lam, Let, Lit, Match, PCtor, PVar, Span,
    TVar, Term, UType, Var, format_type,
)

__all__ = ["LangTypeError", "Scheme", "Typing", "typecheck", "type_vars"]


class LangTypeError(Exception):
    def __init__(self, message: str, span: Span | None = None):
        self.message = message
        self.span = span
        super().__init__(f"{span}: {message}" if span else message)


@dataclass(frozen=True)
class Scheme:
    binders: tuple
    body: UType

    def __str__(self) -> str:
        if not self.binders:
            return format_type(self.body)
        return "forall " + " ".join(f"t{i}" for i in self.binders) + ". " + format_type(self.body)


@dataclass
class Typing:
    """Result of inference; every map is keyed by node ``nid``."""

    types: dict = field(default_factory=dict)           # nid -> UType
    generalized: dict = field(default_factory=dict)     # Let nid -> tuple of TVar ids
    schemes: dict = field(default_factory=dict)         # Let nid -> Scheme

    def type_of(self, t: Term) -> UType:
        return self.types[t.nid]


def type_vars(t: UType) -> list[int]:
    out: list[int] = []

    def go(t):
        if isinstance(t, TVar):
            if t.id not in out:
                out.append(t.id)
        elif isinstance(t, Arrow):
            go(t.dom)
            go(t.cod)

    go(t)
    return out


class _Infer:
    def __init__(self, data: DataEnv):
        self.data = data
        self.subst: dict[int, UType] = {}
        self.counter = itertools.count()
        self.raw_types: dict[int, UType] = {}
        self.generalized: dict[int, tuple] = {}
        self.raw_schemes: dict[int, Scheme] = {}

    def fresh(self) -> TVar:
        return TVar(next(self.counter))

    def walk(self, t: UType) -> UType:
        while isinstance(t, TVar) and t.id in self.subst:
            t = self.subst[t.id]
        return t

    def resolve(self, t: UType) -> UType:
        t = self.walk(t)
        if isinstance(t, Arrow):
            return Arrow(self.resolve(t.dom), self.resolve(t.cod))
        return t

    def occurs(self, v: int, t: UType) -> bool:
        t = self.walk(t)
        if isinstance(t, TVar):
            return t.id == v
        if isinstance(t, Arrow):
            return self.occurs(v, t.dom) or self.occurs(v, t.cod)
        return False

    def unify(self, a: UType, b: UType, span: Span) -> None:
        a, b = self.walk(a), self.walk(b)
        if a == b:
            return
        if isinstance(a, TVar):
            if self.occurs(a.id, b):
                raise LangTypeError(
                    f"cannot construct the infinite type {format_type(self.resolve(a))} = "
                    f"{format_type(self.resolve(b))}", span)
            self.subst[a.id] = b
            return
        if isinstance(b, TVar):
            self.unify(b, a, span)
            return
        if isinstance(a, Arrow) and isinstance(b, Arrow):
            self.unify(a.dom, b.dom, span)
            self.unify(a.cod, b.cod, span)
            return
        raise LangTypeError(
            f"type mismatch: {format_type(self.resolve(a))} vs {format_type(self.resolve(b))}", span)

    def free_in_env(self, env: dict) -> set[int]:
        out: set[int] = set()
        for sch in env.values():
            out.update(v for v in type_vars(self.resolve(sch.body)) if v not in sch.binders)
        return out

    def instantiate(self, sch: Scheme) -> UType:
        if not sch.binders:
            return sch.body
        mapping = {v: self.fresh() for v in sch.binders}

        def go(t):
            t = self.walk(t)
            if isinstance(t, TVar):
                return mapping.get(t.id, t)
            if isinstance(t, Arrow):
                return Arrow(go(t.dom), go(t.cod))
            return t

        return go(sch.body)

    def record(self, t: Term, ty: UType) -> UType:
        self.raw_types[t.nid] = ty
        return ty

    def infer(self, env: dict, t: Term) -> UType:
        if isinstance(t, Var):
            if t.name not in env:
                raise LangTypeError(f"unbound variable {t.name}", t.span)
            return self.record(t, self.instantiate(env[t.name]))
        if isinstance(t, Lit):
            return self.record(t, Data(t.dtype))
        if isinstance(t, Lam):
            a = self.fresh()
            body = self.infer({**env, t.param: Scheme((), a)}, t.body)
            return self.record(t, Arrow(a, body))
        if isinstance(t, App):
            f = self.infer(env, t.fn)
            x = self.infer(env, t.arg)
            r = self.fresh()
            self.unify(f, Arrow(x, r), t.span)
            return self.record(t, r)
        if isinstance(t, Ctor):
            _, params = self.data.lookup(t.name)
            for arg, want in zip(t.args, params):
                self.unify(self.infer(env, arg), want, getattr(arg, "span", t.span))
            return self.record(t, Data(t.dtype))
        if isinstance(t, Match):
            scrut = self.infer(env, t.scrutinee)
            result = self.fresh()
            for pat, rhs in t.branches:
                benv = dict(env)
                self.check_pattern(benv, pat, scrut)
                self.unify(self.infer(benv, rhs), result, getattr(rhs, "span", t.span))
            return self.record(t, result)
        if isinstance(t, Let):
            a = self.fresh()
            defn = self.infer({**env, t.name: Scheme((), a)}, t.defn)
            self.unify(a, defn, t.span)
            env_free = self.free_in_env(env)
            binders = tuple(v for v in type_vars(self.resolve(defn)) if v not in env_free)
            sch = Scheme(binders, self.resolve(defn))
            self.generalized[t.nid] = binders
            self.raw_schemes[t.nid] = sch
            return self.record(t, self.infer({**env, t.name: sch}, t.body))
        raise TypeError(f"not a term: {t!r}")

    def check_pattern(self, env: dict, p, expected: UType) -> None:
        if isinstance(p, PVar):
            env[p.name] = Scheme((), expected)
            return
        _, params = self.data.lookup(p.name)
        self.unify(expected, Data(p.dtype), p.span)
        for sub, want in zip(p.args, params):
            self.check_pattern(env, sub, want)


def typecheck(data: DataEnv, term: Term) -> Typing:
    """Infer the underlying type of every node of ``term``."""
    inf = _Infer(data)
    inf.infer({}, term)
    return Typing(
        {nid: inf.resolve(t) for nid, t in inf.raw_types.items()},
        dict(inf.generalized),
        {nid: Scheme(s.binders, inf.resolve(s.body)) for nid, s in inf.raw_schemes.items()},
    )
