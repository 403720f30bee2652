"""Constraint-generating pattern-match analysis.

Every expression gets an annotated type: its underlying type with a set
expression at each node describing the values it may take. Matches emit a
safety conjunct (the discriminee is covered by the patterns) guarded by the
path constraint under which the match is reachable. Every ``let`` checks that
its accumulated constraint is satisfiable; an unsatisfiable one means some
match can fail at runtime.
"""

from __future__ import annotations

import dataclasses
import itertools
import logging
import time
from dataclasses import dataclass, field

from .. import constraints as sc
from ..constraints import (
    BOT, FALSE, TOP, TRUE, Formula, Inter, Neg, Proj, SetExpr, Signature,
    Union, conj, free_set_vars, implies, not_subset, subset, substitute,
)
from ..simplify import is_trivial, remove_trivial, simplify_atoms
from ..smt import SolverConfig, Verdict, solve
from .syntax import (
    App, Arrow, Ctor, Data, DataEnv, Lam, Let, Lit, Match, PCtor, PVar,
    Pattern, Program, Span, Term, TVar, UType, Var,
)
from .types import Typing, typecheck

log = logging.getLogger(__name__)

__all__ = [
    "AnnType", "ATVar", "AData", "AArrow", "Conj", "AnnScheme", "erase",
    "format_ann", "pattern_set", "not_yet_covered", "equate", "freshen",
    "bind_pattern", "is_exhaustive", "program_signature", "Analyzer",
    "DefReport", "AnalysisReport", "analyze_expr", "analyze_program",
    "OPAQUE_SYMBOL",
]

# nullary symbol standing for values of opaque types (numbers)
OPAQUE_SYMBOL = "opaque"


# ---------------------------------------------------------------------------
# Annotated types


class AnnType:
    __slots__ = ()

    def __str__(self) -> str:
        return format_ann(self)


@dataclass(frozen=True)
class ATVar(AnnType):
    id: int
    ann: SetExpr


@dataclass(frozen=True)
class AData(AnnType):
    name: str
    ann: SetExpr


@dataclass(frozen=True)
class AArrow(AnnType):
    dom: AnnType
    cod: AnnType
    ann: SetExpr


def erase(t: AnnType) -> UType:
    if isinstance(t, ATVar):
        return TVar(t.id)
    if isinstance(t, AData):
        return Data(t.name)
    return Arrow(erase(t.dom), erase(t.cod))


def with_top(t: AnnType, e: SetExpr) -> AnnType:
    if isinstance(t, ATVar):
        return ATVar(t.id, e)
    if isinstance(t, AData):
        return AData(t.name, e)
    return AArrow(t.dom, t.cod, e)


def map_ann(t: AnnType, fn) -> AnnType:
    if isinstance(t, ATVar):
        return ATVar(t.id, fn(t.ann))
    if isinstance(t, AData):
        return AData(t.name, fn(t.ann))
    return AArrow(map_ann(t.dom, fn), map_ann(t.cod, fn), fn(t.ann))


def annotations(t: AnnType):
    yield t.ann
    if isinstance(t, AArrow):
        yield from annotations(t.dom)
        yield from annotations(t.cod)


def _short(e: SetExpr) -> str:
    if isinstance(e, sc.Top):
        return "⊤"
    if isinstance(e, sc.Bot):
        return "⊥"
    if isinstance(e, sc.Var):
        return e.name
    if isinstance(e, Union):
        return f"({_short(e.left)} ∪ {_short(e.right)})"
    if isinstance(e, Inter):
        return f"({_short(e.left)} ∩ {_short(e.right)})"
    if isinstance(e, Neg):
        return f"¬{_short(e.arg)}"
    if isinstance(e, sc.App):
        return e.sym + ("(" + ", ".join(map(_short, e.args)) + ")" if e.args else "")
    return f"{e.sym}^-{e.index}({_short(e.arg)})"


def format_ann(t: AnnType) -> str:
    if isinstance(t, ATVar):
        return f"t{t.id}^{_short(t.ann)}"
    if isinstance(t, AData):
        return f"{t.name}^{_short(t.ann)}"
    return f"({format_ann(t.dom)} -> {format_ann(t.cod)})^{_short(t.ann)}"


@dataclass(frozen=True)
class Conj:
    """A conjunct of an emitted constraint; ``origin`` marks safety conjuncts."""

    formula: Formula
    origin: Span | None = None


@dataclass(frozen=True)
class AnnScheme:
    type_vars: tuple
    set_vars: tuple
    constraint: tuple       # of Conj
    body: AnnType

    @staticmethod
    def mono(t: AnnType) -> "AnnScheme":
        return AnnScheme((), (), (), t)

    def free_vars(self) -> set[str]:
        out = set()
        for c in self.constraint:
            out.update(free_set_vars(c.formula))
        for e in annotations(self.body):
            out.update(free_set_vars(e))
        return out - set(self.set_vars)


# ---------------------------------------------------------------------------
# Metafunctions


def _inter(parts) -> SetExpr:
    parts = [p for p in parts if not isinstance(p, sc.Top)]
    if not parts:
        return TOP
    out = parts[0]
    for p in parts[1:]:
        out = Inter(out, p)
    return out


def _union(parts) -> SetExpr:
    parts = list(parts)
    if not parts:
        return BOT
    out = parts[0]
    for p in parts[1:]:
        out = Union(out, p)
    return out


def pattern_set(p: Pattern) -> SetExpr:
    """The set of values a pattern matches."""
    if isinstance(p, PVar):
        return TOP
    return sc.App(p.name, tuple(pattern_set(a) for a in p.args))


def not_yet_covered(patterns, i: int) -> SetExpr:
    """Values that reach branch ``i`` under first-match semantics."""
    if not 0 <= i <= len(patterns):
        raise IndexError(i)
    return _inter(Neg(pattern_set(p)) for p in patterns[:i])


def _subset(a: SetExpr, b: SetExpr) -> Formula:
    return TRUE if is_trivial(sc.Atom(a, b)) else subset(a, b)


def _eq(a: SetExpr, b: SetExpr) -> Formula:
    return TRUE if a == b else sc.eq(a, b)


def _conj(parts) -> Formula:
    return conj(p for p in parts if p != TRUE)


def equate(t1: AnnType, t2: AnnType) -> Formula:
    """Equalities between aligned annotations; ``false`` if shapes differ."""
    if isinstance(t1, ATVar) and isinstance(t2, ATVar) and t1.id == t2.id:
        return _eq(t1.ann, t2.ann)
    if isinstance(t1, AData) and isinstance(t2, AData) and t1.name == t2.name:
        return _eq(t1.ann, t2.ann)
    if isinstance(t1, AArrow) and isinstance(t2, AArrow):
        return _conj([equate(t1.dom, t2.dom), equate(t1.cod, t2.cod), _eq(t1.ann, t2.ann)])
    return FALSE


def _equate_inner(t1: AnnType, t2: AnnType) -> Formula:
    if isinstance(t1, AArrow) and isinstance(t2, AArrow):
        return _conj([equate(t1.dom, t2.dom), equate(t1.cod, t2.cod)])
    return TRUE


def freshen(t, fresh, data: DataEnv | None = None) -> AnnType:
    """Annotate every position of ``t`` with a distinct fresh variable.

    Accepts an underlying or annotated type. Opaque base types get ``⊤``.
    """
    if isinstance(t, AnnType):
        t = erase(t)
    if isinstance(t, TVar):
        return ATVar(t.id, sc.Var(fresh()))
    if isinstance(t, Data):
        if data is not None and data.is_opaque(t.name):
            return AData(t.name, TOP)
        return AData(t.name, sc.Var(fresh()))
    dom = freshen(t.dom, fresh, data)
    cod = freshen(t.cod, fresh, data)
    return AArrow(dom, cod, sc.Var(fresh()))


def _annotate(t: UType, top: SetExpr, fresh, data: DataEnv) -> AnnType:
    if isinstance(t, Data) and data.is_opaque(t.name):
        return AData(t.name, TOP)
    return with_top(freshen(t, fresh, data), top)


def bind_pattern(env: dict, p: Pattern, t: AnnType, data: DataEnv, fresh) -> dict:
    """Extend ``env`` with the variables of ``p`` matched against ``t``."""
    env = dict(env)
    _bind(env, p, t, data, fresh)
    return env


def _bind(env, p, t, data, fresh):
    if isinstance(p, PVar):
        env[p.name] = AnnScheme.mono(t)
        return
    _, params = data.lookup(p.name)
    for j, (sub, ty) in enumerate(zip(p.args, params)):
        _bind(env, sub, _annotate(ty, Proj(p.name, j + 1, t.ann), fresh, data), data, fresh)


def is_exhaustive(patterns, ty: UType, data: DataEnv) -> bool:
    """Syntactic coverage check, used only to skip safety conjuncts."""
    return _covers([(p,) for p in patterns], [ty], data)


def _covers(rows, types, data) -> bool:
    # true iff the rows cover every value vector of the given types
    if not types:
        return bool(rows)
    ty, rest = types[0], types[1:]
    default = [r[1:] for r in rows if isinstance(r[0], PVar)]
    if not isinstance(ty, Data) or data.is_opaque(ty.name):
        return _covers(default, rest, data)
    ctors = data.constructors(ty.name)
    heads = {r[0].name for r in rows if isinstance(r[0], PCtor)}
    if not all(k in heads for k, _ in ctors):
        # a missing constructor is covered only by the variable rows
        return _covers(default, rest, data)
    for k, params in ctors:
        specialized = []
        for r in rows:
            head = r[0]
            if isinstance(head, PVar):
                specialized.append(tuple(PVar("_") for _ in params) + r[1:])
            elif head.name == k:
                specialized.append(tuple(head.args) + r[1:])
        if not _covers(specialized, list(params) + rest, data):
            return False
    return True


def program_signature(data: DataEnv, uses_opaque: bool = True) -> Signature:
    pairs = data.all_constructors()
    if uses_opaque or not any(a == 0 for _, a in pairs):
        pairs.append((OPAQUE_SYMBOL, 0))
    return Signature.of(*pairs)


def _mentions_opaque(data: DataEnv, term: Term) -> bool:
    for ctors in data.types.values():
        for _, params in ctors:
            if any(_has_opaque(p, data) for p in params):
                return True
    stack = [term]
    while stack:
        t = stack.pop()
        if isinstance(t, Lit):
            return True
        if isinstance(t, Lam):
            stack.append(t.body)
        elif isinstance(t, App):
            stack += [t.fn, t.arg]
        elif isinstance(t, Ctor):
            stack += list(t.args)
        elif isinstance(t, Match):
            stack.append(t.scrutinee)
            stack += [rhs for _, rhs in t.branches]
        elif isinstance(t, Let):
            stack += [t.defn, t.body]
    return False


def _has_opaque(t: UType, data: DataEnv) -> bool:
    if isinstance(t, Data):
        return data.is_opaque(t.name)
    if isinstance(t, Arrow):
        return _has_opaque(t.dom, data) or _has_opaque(t.cod, data)
    return False


# ---------------------------------------------------------------------------
# Reports


@dataclass
class DefReport:
    name: str
    span: Span
    constraint: Formula
    verdict: str                        # Safe | Unsafe | Unknown
    unsafe_spans: tuple = ()
    safety_conjuncts: int = 0
    elided: bool = False
    solver: Verdict | None = None
    scheme: AnnScheme | None = None

    def line(self) -> str:
        return f"{self.name} {self.span} {self.verdict}"


@dataclass
class AnalysisReport:
    definitions: list = field(default_factory=list)
    backend_calls: int = 0
    elided_checks: int = 0
    signature: Signature | None = None
    seconds: float = 0.0

    @property
    def all_safe(self) -> bool:
        return all(d.verdict == "Safe" for d in self.definitions)

    def exit_code(self) -> int:
        verdicts = {d.verdict for d in self.definitions}
        if "Unknown" in verdicts:
            return 2
        if "Unsafe" in verdicts:
            return 1
        return 0

    def get(self, name: str) -> DefReport:
        for d in self.definitions:
            if d.name == name:
                return d
        raise KeyError(name)

    def lines(self) -> list[str]:
        out = []
        for d in self.definitions:
            out.append(d.line())
            if d.verdict == "Unsafe":
                spans = ", ".join(map(str, d.unsafe_spans))
                out.append(f"  match at {spans} may fail")
            elif d.verdict == "Unknown" and d.solver is not None:
                out.append(f"  solver gave up: {d.solver.reason} {d.solver.detail}".rstrip())
        return out


# ---------------------------------------------------------------------------
# The analysis


class Analyzer:
    """One analysis session: owns the fresh-variable counter and the report."""

    def __init__(self, data: DataEnv, typing: Typing, solver: SolverConfig | None = None,
                 sig: Signature | None = None, approx_proj: bool = False, check: bool = True,
                 compact: bool = True):
        self.data = data
        self.typing = typing
        self.solver = solver or SolverConfig()
        self.sig = sig or program_signature(data)
        self.approx_proj = approx_proj
        self.check = check
        self.compact = compact
        self._counter = itertools.count(1)
        self.report = AnalysisReport(signature=self.sig)
        self.node_types: dict[int, AnnType] = {}

    def fresh(self) -> str:
        return f"V{next(self._counter)}"

    def _ty(self, t: Term) -> UType:
        return self.typing.types[t.nid]

    # entry point for a single expression

    def analyze(self, env: dict, cp: Formula, t: Term) -> tuple[AnnType, list]:
        ann, cs = self._analyze(env, cp, t)
        self.node_types[t.nid] = ann
        return ann, cs

    def _guard(self, cp: Formula, f: Formula) -> Formula:
        if f == TRUE:
            return TRUE
        return f if cp == TRUE else implies(cp, f)

    def _analyze(self, env, cp, t):
        if isinstance(t, Var):
            return self._var(env, cp, t)
        if isinstance(t, Lit):
            return AData(t.dtype, TOP), []
        if isinstance(t, Lam):
            dom = freshen(self._ty(t).dom, self.fresh, self.data)
            body, cs = self.analyze({**env, t.param: AnnScheme.mono(dom)}, cp, t.body)
            return AArrow(dom, body, TOP), cs
        if isinstance(t, App):
            fn, c1 = self.analyze(env, cp, t.fn)
            arg, c2 = self.analyze(env, cp, t.arg)
            link = self._guard(cp, equate(fn.dom, arg))
            return fn.cod, c1 + c2 + ([Conj(link)] if link != TRUE else [])
        if isinstance(t, Ctor):
            anns, cs = [], []
            for a in t.args:
                at, c = self.analyze(env, cp, a)
                anns.append(at.ann)
                cs += c
            return AData(t.dtype, sc.App(t.name, tuple(anns))), cs
        if isinstance(t, Match):
            return self._match(env, cp, t)
        if isinstance(t, Let):
            return self._let(env, cp, t)
        raise TypeError(f"not a term: {t!r}")

    def _var(self, env, cp, t: Var):
        sch: AnnScheme = env[t.name]
        if not sch.set_vars and not sch.type_vars and not sch.constraint:
            return sch.body, []
        ren = {v: sc.Var(self.fresh()) for v in sch.set_vars}
        body = map_ann(sch.body, lambda e: substitute(e, ren))
        body = self._instantiate_types(body, sch.type_vars, self._ty(t))
        cs = []
        for c in sch.constraint:
            f = self._guard(cp, substitute(c.formula, ren))
            if f != TRUE:
                cs.append(Conj(f, c.origin))
        return body, cs

    def _instantiate_types(self, body: AnnType, binders: tuple, occurrence: UType) -> AnnType:
        if not binders:
            return body
        inst: dict[int, UType] = {}
        _match_types(erase(body), occurrence, inst)
        templates = {x: freshen(inst[x], self.fresh, self.data) for x in binders if x in inst}

        def go(a):
            if isinstance(a, ATVar):
                tpl = templates.get(a.id)
                return a if tpl is None else _annotate_like(tpl, a.ann, self.data)
            if isinstance(a, AData):
                return a
            return AArrow(go(a.dom), go(a.cod), a.ann)

        return go(body)

    def _match(self, env, cp, t: Match):
        scrut, cs = self.analyze(env, cp, t.scrutinee)
        e = scrut.ann
        pats = [p for p, _ in t.branches]
        result = freshen(self._ty(t), self.fresh, self.data)
        out = list(cs)
        results = []
        for i, (pat, rhs) in enumerate(t.branches):
            remaining = not_yet_covered(pats, i)
            reach = not_subset(_inter([e, pattern_set(pat), remaining]), BOT)
            benv = bind_pattern(env, pat, with_top(scrut, _inter([e, remaining])), self.data, self.fresh)
            branch_cp = _conj([reach, cp])
            rt, rcs = self.analyze(benv, branch_cp, rhs)
            out += rcs
            res = _conj([_subset(rt.ann, result.ann), _equate_inner(rt, result)])
            if res != TRUE:
                results.append(Conj(implies(reach, res)))
        out += results
        if not is_exhaustive(pats, self._ty(t.scrutinee), self.data):
            safety = self._guard(cp, subset(e, _union(pattern_set(p) for p in pats)))
            out.append(Conj(safety, t.span))
        return result, out

    def _env_free(self, env: dict) -> set[str]:
        out: set[str] = set()
        for sch in env.values():
            out |= sch.free_vars()
        return out

    def _let(self, env, cp, t: Let):
        expected = freshen(self._ty(t.defn), self.fresh, self.data)
        defn, c1 = self.analyze({**env, t.name: AnnScheme.mono(expected)}, cp, t.defn)
        link = equate(expected, defn)
        body_cs = ([Conj(link)] if link != TRUE else []) + c1
        ambient = self._env_free(env) | set(free_set_vars(cp))
        mentioned: dict[str, None] = {}
        for a in list(annotations(defn)) + list(annotations(expected)):
            mentioned.update(dict.fromkeys(free_set_vars(a)))
        for c in body_cs:
            mentioned.update(dict.fromkeys(free_set_vars(c.formula)))
        gen = [v for v in mentioned if v not in ambient]
        if self.compact:
            body_cs, defn = compact_scheme(gen, body_cs, defn)
        scheme = AnnScheme(self.typing.generalized.get(t.nid, ()), tuple(gen), tuple(body_cs), defn)
        if self.check:
            self._check(t, cp, body_cs, scheme)
        return self.analyze({**env, t.name: scheme}, cp, t.body)

    # the satisfiability check made at every let

    def _prepare(self, f: Formula) -> Formula:
        if self.approx_proj:
            f = sc.map_atoms(f, lambda a: sc.AtomNode(sc.Atom(_drop_proj(a.lhs), _drop_proj(a.rhs))))
        return f

    def _solve(self, f: Formula, label: str) -> Verdict:
        self.report.backend_calls += 1
        return solve(self._prepare(f), self.sig, dataclasses.replace(self.solver, label=label))

    def _check(self, t: Let, cp: Formula, body_cs: list, scheme: AnnScheme) -> None:
        kept = []
        for c in body_cs:
            if remove_trivial(simplify_atoms(c.formula)) != TRUE:
                kept.append(c)
        formula = _conj([cp] + [c.formula for c in kept])
        safety = [c for c in kept if c.origin is not None]
        entry = DefReport(t.name, t.span, formula, "Safe", safety_conjuncts=len(safety), scheme=scheme)
        if not safety:
            entry.elided = True
            self.report.elided_checks += 1
        else:
            label = f"{t.name}_{t.span.line}_{t.span.col}"
            verdict = self._solve(formula, label)
            entry.solver = verdict
            if verdict.is_sat:
                entry.verdict = "Safe"
            elif verdict.is_unsat:
                entry.verdict = "Unsafe"
                entry.unsafe_spans = self._culprits(cp, kept, label)
            else:
                entry.verdict = "Unknown"
        self.report.definitions.append(entry)

    def _culprits(self, cp: Formula, kept: list, label: str) -> tuple:
        origins = sorted({c.origin for c in kept if c.origin is not None})
        if len(origins) == 1:
            return tuple(origins)
        found = []
        for o in origins:
            rest = _conj([cp] + [c.formula for c in kept if c.origin != o])
            if self._solve(rest, f"{label}_without_{o.line}_{o.col}").is_sat:
                found.append(o)
        return tuple(found or origins)


_INLINE_LIMIT = 8


def _size(e: SetExpr) -> int:
    return sum(1 for _ in sc.subexpressions(e))


def _definitions(parts: list) -> list:
    """Top-level ``X = E`` facts among unguarded atoms, as ``(X, E, atoms)``."""
    atoms_ = [c.formula.atom for c in parts if isinstance(c.formula, sc.AtomNode)]
    present = set(atoms_)
    out = []
    for a in atoms_:
        if isinstance(a.lhs, sc.Var):
            x, e = a.lhs.name, a.rhs
            if isinstance(e, sc.Bot):
                out.append((x, e, {a}))
            elif sc.Atom(e, a.lhs) in present:
                out.append((x, e, {a, sc.Atom(e, a.lhs)}))
        if isinstance(a.rhs, sc.Var) and isinstance(a.lhs, sc.Top):
            out.append((a.rhs.name, TOP, {a}))
    return out


def compact_scheme(gen: list, body_cs: list, body: AnnType) -> tuple[list, AnnType]:
    """Substitute away generalized variables fixed by an unguarded equality.

    A generalized variable is local to its scheme, so replacing ``X`` by ``E``
    when the scheme states ``X = E`` (with ``X`` not in ``E``) yields an
    equivalent scheme over fewer variables. ``gen`` is updated in place.
    """
    parts = []
    for c in body_cs:
        for f in sc.conjuncts(c.formula):
            parts.append(Conj(f, c.origin))
    while True:
        chosen = None
        for x, e, used in _definitions(parts):
            if x in gen and x not in free_set_vars(e) and _size(e) <= _INLINE_LIMIT:
                chosen = (x, e, used)
                break
        if chosen is None:
            break
        x, e, used = chosen
        gen.remove(x)
        mapping = {x: e}
        kept = []
        for c in parts:
            if isinstance(c.formula, sc.AtomNode) and c.formula.atom in used and c.origin is None:
                continue
            f = remove_trivial(simplify_atoms(substitute(c.formula, mapping)))
            if f == TRUE:
                continue
            kept.extend(Conj(g, c.origin) for g in sc.conjuncts(f))
        parts = kept
        body = map_ann(body, lambda a: substitute(a, mapping))
    still = set()
    for c in parts:
        still.update(free_set_vars(c.formula))
    for a in annotations(body):
        still.update(free_set_vars(a))
    gen[:] = [v for v in gen if v in still]
    return parts, body


def _drop_proj(e: SetExpr) -> SetExpr:
    return sc.map_expr(e, lambda x: TOP if isinstance(x, Proj) else x)


def _annotate_like(template: AnnType, top: SetExpr, data: DataEnv) -> AnnType:
    if isinstance(template, AData) and data.is_opaque(template.name):
        return template
    return with_top(template, top)


def _match_types(scheme_ty: UType, occ: UType, out: dict) -> None:
    if isinstance(scheme_ty, TVar):
        out.setdefault(scheme_ty.id, occ)
    elif isinstance(scheme_ty, Arrow) and isinstance(occ, Arrow):
        _match_types(scheme_ty.dom, occ.dom, out)
        _match_types(scheme_ty.cod, occ.cod, out)


# ---------------------------------------------------------------------------
# Public entry points


def analyze_expr(env: dict, cp: Formula, t: Term, data: DataEnv, typing: Typing,
                 solver: SolverConfig | None = None, check: bool = False):
    """Annotated type and emitted conjuncts of ``t``; lets are not solved by default."""
    az = Analyzer(data, typing, solver, check=check)
    ann, cs = az.analyze(env, cp, t)
    return ann, cs, az


def analyze_program(program: Program, solver: SolverConfig | None = None,
                    approx_proj: bool = False) -> AnalysisReport:
    """Type the program, analyze it from the empty environment and solve each let."""
    start = time.perf_counter()
    typing = typecheck(program.data, program.term)
    sig = program_signature(program.data, _mentions_opaque(program.data, program.term))
    az = Analyzer(program.data, typing, solver, sig=sig, approx_proj=approx_proj)
    az.analyze({}, TRUE, program.term)
    az.report.definitions.sort(key=lambda d: d.span)
    az.report.seconds = time.perf_counter() - start
    log.debug("analysis: %d backend calls, %d elided", az.report.backend_calls,
              az.report.elided_checks)
    return az.report
