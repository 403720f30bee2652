"""Translation of set constraints into monadic first-order logic.

Each subexpression ``E`` gets a unary predicate ``P_E``; an axiom ties ``P_E``
to the predicates of its immediate subexpressions, and each literal becomes a
universally or existentially quantified goal. The solving path does not go
through here (the SMT encoding works on bit sequences directly). This module
exists to make that translation inspectable and to bound model sizes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .constraints import (
    App, Atom, AtomNode, Bot, ConstraintError, Formula, Inter, Neg, Not, Or,
    And, Proj, SetExpr, Signature, Top, Union, Var, atoms, format_expr,
    parse_expr_node, subexpressions,
)
from .sexpr import SList, Symbol, read_all

__all__ = [
    "TermVar", "TermApp", "PredApp", "ForAllM", "ExistsM", "MAnd", "MOr", "MNot",
    "MImplies", "MIff", "TrueF", "FalseF", "MonadicTheory", "expr_predicate_axiom",
    "conjunction_to_monadic", "formula_to_monadic", "model_bound", "reduce_theory",
    "format_monadic", "parse_theory", "simplify_monadic",
]


@dataclass(frozen=True)
class TermVar:
    name: str


@dataclass(frozen=True)
class TermApp:
    sym: str
    args: tuple = ()


class MonadicFormula:
    __slots__ = ()

    def __str__(self) -> str:
        return format_monadic(self)


@dataclass(frozen=True)
class PredApp(MonadicFormula):
    pred: SetExpr
    term: object


@dataclass(frozen=True)
class ForAllM(MonadicFormula):
    vars: tuple
    body: MonadicFormula


@dataclass(frozen=True)
class ExistsM(MonadicFormula):
    vars: tuple
    body: MonadicFormula


@dataclass(frozen=True)
class MAnd(MonadicFormula):
    items: tuple


@dataclass(frozen=True)
class MOr(MonadicFormula):
    items: tuple


@dataclass(frozen=True)
class MNot(MonadicFormula):
    arg: MonadicFormula


@dataclass(frozen=True)
class MImplies(MonadicFormula):
    lhs: MonadicFormula
    rhs: MonadicFormula


@dataclass(frozen=True)
class MIff(MonadicFormula):
    lhs: MonadicFormula
    rhs: MonadicFormula


@dataclass(frozen=True)
class TrueF(MonadicFormula):
    pass


@dataclass(frozen=True)
class FalseF(MonadicFormula):
    pass


def _forall(vs: tuple, body: MonadicFormula) -> MonadicFormula:
    return ForAllM(vs, body) if vs else body


def _and(items) -> MonadicFormula:
    items = tuple(items)
    if not items:
        return TrueF()
    return items[0] if len(items) == 1 else MAnd(items)


def _binders(arity: int) -> tuple:
    return ("x",) if arity == 1 else tuple(f"x{j + 1}" for j in range(arity))


def expr_predicate_axiom(e: SetExpr, sig: Signature) -> MonadicFormula:
    """The axiom that makes ``P_e`` respect the meaning of ``e``'s head."""
    x = TermVar("x")
    if isinstance(e, Top):
        return ForAllM(("x",), PredApp(e, x))
    if isinstance(e, Bot):
        return ForAllM(("x",), MNot(PredApp(e, x)))
    if isinstance(e, Var):
        return TrueF()
    if isinstance(e, Inter):
        return ForAllM(("x",), MIff(PredApp(e, x), MAnd((PredApp(e.left, x), PredApp(e.right, x)))))
    if isinstance(e, Union):
        return ForAllM(("x",), MIff(PredApp(e, x), MOr((PredApp(e.left, x), PredApp(e.right, x)))))
    if isinstance(e, Neg):
        return ForAllM(("x",), MIff(PredApp(e, x), MNot(PredApp(e.arg, x))))
    if isinstance(e, App):
        if e.sym not in sig:
            raise ValueError(f"{e.sym} is not in the signature")
        xs = _binders(len(e.args))
        own = _forall(xs, MIff(
            PredApp(e, TermApp(e.sym, tuple(TermVar(v) for v in xs))),
            _and(PredApp(a, TermVar(v)) for a, v in zip(e.args, xs))))
        clauses = [own]
        for g in sig:
            if g.name == e.sym:
                continue
            ys = _binders(g.arity)
            clauses.append(_forall(ys, MIff(
                PredApp(e, TermApp(g.name, tuple(TermVar(v) for v in ys))), FalseF())))
        return _and(clauses)
    if isinstance(e, Proj):
        raise ValueError(f"projection {e} must be eliminated before the monadic translation")
    raise TypeError(f"not a set expression: {e!r}")


def literal_goal(atom: Atom, positive: bool) -> MonadicFormula:
    if positive:
        x = TermVar("x")
        return ForAllM(("x",), MImplies(PredApp(atom.lhs, x), PredApp(atom.rhs, x)))
    y = TermVar("y")
    return ExistsM(("y",), MAnd((PredApp(atom.lhs, y), MNot(PredApp(atom.rhs, y)))))


@dataclass
class MonadicTheory:
    predicates: tuple                   # one per distinct subexpression
    axioms: list = field(default_factory=list)
    goals: list = field(default_factory=list)
    sig: Signature | None = None

    @property
    def n(self) -> int:
        return len(self.predicates)

    def text(self) -> str:
        lines = [";; predicates"]
        lines += [f";;   P[{format_expr(p)}]" for p in self.predicates]
        lines += [f"(axiom {format_monadic(a)})" for a in self.axioms]
        lines += [f"(goal {format_monadic(g)})" for g in self.goals]
        return "\n".join(lines) + "\n"


def _theory(exprs, sig: Signature, goals) -> MonadicTheory:
    preds: dict = {}
    for e in exprs:
        for s in subexpressions(e):
            preds.setdefault(s, None)
    predicates = tuple(preds)
    axioms = [a for a in (expr_predicate_axiom(p, sig) for p in predicates) if a != TrueF()]
    return MonadicTheory(predicates, axioms, list(goals), sig)


def conjunction_to_monadic(literals, sig: Signature) -> MonadicTheory:
    """Theory for a conjunction of ``(atom, positive)`` literals."""
    literals = list(literals)
    exprs = [e for a, _ in literals for e in (a.lhs, a.rhs)]
    return _theory(exprs, sig, [literal_goal(a, pos) for a, pos in literals])


def _goal(c: Formula) -> MonadicFormula:
    if isinstance(c, AtomNode):
        return literal_goal(c.atom, True)
    if isinstance(c, Not):
        if isinstance(c.arg, AtomNode):
            return literal_goal(c.arg.atom, False)
        if isinstance(c.arg, Not):
            return _goal(c.arg.arg)
        return MNot(_goal(c.arg))
    if isinstance(c, Or) and isinstance(c.left, Not):
        return MImplies(_goal(c.left.arg), _goal(c.right))
    if isinstance(c, And):
        return MAnd((_goal(c.left), _goal(c.right)))
    return MOr((_goal(c.left), _goal(c.right)))


def formula_to_monadic(c: Formula, sig: Signature) -> MonadicTheory:
    """Theory for an arbitrary combination; the goal mirrors its structure.

    ``¬A ∨ B`` is shown as ``A ⇒ B`` and negated atoms as existentials.
    """
    exprs = [e for a in atoms(c) for e in (a.lhs, a.rhs)]
    return _theory(exprs, sig, [_goal(c)])


def model_bound(theory: MonadicTheory) -> int:
    """Upper bound ``2**N`` on the model size needed for ``N`` predicates."""
    if theory.n > 62:
        raise OverflowError(f"model bound 2**{theory.n} does not fit in 64 bits")
    return 1 << theory.n


# ---------------------------------------------------------------------------
# Reduction to base predicates (the form in which such theories are usually
# written out by hand)


def _inline(f: MonadicFormula) -> MonadicFormula:
    if isinstance(f, PredApp):
        e, t = f.pred, f.term
        if isinstance(e, Top):
            return TrueF()
        if isinstance(e, Bot):
            return FalseF()
        if isinstance(e, Inter):
            return _inline(MAnd((PredApp(e.left, t), PredApp(e.right, t))))
        if isinstance(e, Union):
            return _inline(MOr((PredApp(e.left, t), PredApp(e.right, t))))
        if isinstance(e, Neg):
            return _inline(MNot(PredApp(e.arg, t)))
        return f
    if isinstance(f, (ForAllM, ExistsM)):
        return type(f)(f.vars, _inline(f.body))
    if isinstance(f, (MAnd, MOr)):
        return type(f)(tuple(_inline(x) for x in f.items))
    if isinstance(f, MNot):
        return MNot(_inline(f.arg))
    if isinstance(f, (MImplies, MIff)):
        return type(f)(_inline(f.lhs), _inline(f.rhs))
    return f


def simplify_monadic(f: MonadicFormula) -> MonadicFormula:
    """Propositional clean-up: constants, flattening, double negation."""
    if isinstance(f, (ForAllM, ExistsM)):
        body = simplify_monadic(f.body)
        return body if isinstance(body, (TrueF, FalseF)) else type(f)(f.vars, body)
    if isinstance(f, MNot):
        a = simplify_monadic(f.arg)
        if isinstance(a, TrueF):
            return FalseF()
        if isinstance(a, FalseF):
            return TrueF()
        if isinstance(a, MNot):
            return a.arg
        return MNot(a)
    if isinstance(f, (MAnd, MOr)):
        unit, zero = (TrueF, FalseF) if isinstance(f, MAnd) else (FalseF, TrueF)
        out = []
        for x in (simplify_monadic(i) for i in f.items):
            if isinstance(x, zero):
                return x
            if isinstance(x, unit):
                continue
            out.extend(x.items if isinstance(x, type(f)) else (x,))
        if not out:
            return unit()
        return out[0] if len(out) == 1 else type(f)(tuple(out))
    if isinstance(f, MImplies):
        l, r = simplify_monadic(f.lhs), simplify_monadic(f.rhs)
        if isinstance(l, TrueF):
            return r
        if isinstance(l, FalseF) or isinstance(r, TrueF):
            return TrueF()
        if isinstance(r, FalseF):
            return simplify_monadic(MNot(l))
        return MImplies(l, r)
    if isinstance(f, MIff):
        l, r = simplify_monadic(f.lhs), simplify_monadic(f.rhs)
        if isinstance(r, TrueF):
            return l
        if isinstance(r, FalseF):
            return simplify_monadic(MNot(l))
        if isinstance(l, TrueF):
            return r
        if isinstance(l, FalseF):
            return simplify_monadic(MNot(r))
        return MIff(l, r)
    return f


def reduce_theory(theory: MonadicTheory) -> MonadicTheory:
    """Keep only variable and application predicates.

    Composite predicates are replaced by their definitions, so their axioms
    become tautologies and are dropped.
    """
    keep = tuple(p for p in theory.predicates if isinstance(p, (Var, App)))
    axioms = []
    for p in keep:
        ax = simplify_monadic(_inline(expr_predicate_axiom(p, theory.sig)))
        if isinstance(ax, MAnd):
            axioms.extend(ax.items)
        elif not isinstance(ax, TrueF):
            axioms.append(ax)
    goals = [simplify_monadic(_inline(g)) for g in theory.goals]
    return MonadicTheory(keep, axioms, goals, theory.sig)


# ---------------------------------------------------------------------------
# Prefix notation


def _term(t) -> str:
    if isinstance(t, TermVar):
        return t.name
    if not t.args:
        return t.sym
    return "(" + " ".join([t.sym] + [_term(a) for a in t.args]) + ")"


def format_monadic(f: MonadicFormula) -> str:
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, PredApp):
        return f"(P {format_expr(f.pred)} {_term(f.term)})"
    if isinstance(f, (ForAllM, ExistsM)):
        q = "forall" if isinstance(f, ForAllM) else "exists"
        return f"({q} ({' '.join(f.vars)}) {format_monadic(f.body)})"
    if isinstance(f, (MAnd, MOr)):
        op = "and" if isinstance(f, MAnd) else "or"
        return f"({op} " + " ".join(format_monadic(x) for x in f.items) + ")"
    if isinstance(f, MNot):
        return f"(not {format_monadic(f.arg)})"
    if isinstance(f, MImplies):
        return f"(=> {format_monadic(f.lhs)} {format_monadic(f.rhs)})"
    if isinstance(f, MIff):
        return f"(iff {format_monadic(f.lhs)} {format_monadic(f.rhs)})"
    raise TypeError(f)


def _read_term(node, sig: Signature, bound: set):
    if isinstance(node, Symbol):
        if node.name in bound or node.name not in sig:
            return TermVar(node.name)
        return TermApp(node.name, ())
    head, *args = node.items
    return TermApp(head.name, tuple(_read_term(a, sig, bound) for a in args))


def _read_formula(node, sig: Signature, bound: set) -> MonadicFormula:
    if isinstance(node, Symbol):
        if node.name == "true":
            return TrueF()
        if node.name == "false":
            return FalseF()
        raise ConstraintError(f"unexpected {node.name!r}", node.line, node.col)
    head = node.items[0].name if node.items and isinstance(node.items[0], Symbol) else None
    args = node.items[1:]
    if head == "P":
        return PredApp(parse_expr_node(args[0], sig), _read_term(args[1], sig, bound))
    if head in ("forall", "exists"):
        vs = tuple(v.name for v in args[0].items)
        body = _read_formula(args[1], sig, bound | set(vs))
        return (ForAllM if head == "forall" else ExistsM)(vs, body)
    if head in ("and", "or"):
        return (MAnd if head == "and" else MOr)(tuple(_read_formula(a, sig, bound) for a in args))
    if head == "not":
        return MNot(_read_formula(args[0], sig, bound))
    if head in ("=>", "iff"):
        l, r = (_read_formula(a, sig, bound) for a in args)
        return (MImplies if head == "=>" else MIff)(l, r)
    raise ConstraintError(f"unknown connective {head!r}", node.line, node.col)


def parse_theory(text: str, sig: Signature) -> tuple[list, list]:
    """Read back ``(axiom …)`` and ``(goal …)`` forms printed by :meth:`MonadicTheory.text`."""
    axioms, goals = [], []
    for node in read_all(text):
        if not isinstance(node, SList) or len(node.items) != 2:
            raise ConstraintError("expected (axiom F) or (goal F)", node.line, node.col)
        kind = node.items[0].name
        f = _read_formula(node.items[1], sig, set())
        (axioms if kind == "axiom" else goals).append(f)
    return axioms, goals
