"""Set expressions, set constraints and the operations shared by every solver.

A set expression denotes a subset of the Herbrand universe built from a
:class:`Signature`. Constraints are boolean combinations of inclusion atoms
``lhs ⊆ rhs``. The derived connectives (implication, equivalence, equality,
``true``/``false``) are built by helper functions and never appear as nodes.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Union as TUnion

from .sexpr import SexprError, SList, Symbol, read_all

__all__ = [
    "FuncSym", "Signature", "SetExpr", "Var", "Top", "Bot", "Union", "Inter",
    "Neg", "App", "Proj", "TOP", "BOT", "Atom", "AtomNode", "And", "Or", "Not",
    "Formula", "TRUE", "FALSE", "conj", "disj", "implies", "iff", "eq",
    "subset", "not_subset", "ConstraintError", "parse_constraint_file",
    "format_constraint_file", "format_expr", "format_formula",
    "free_set_vars", "eliminate_projections", "PredicateIndex",
    "index_base_predicates", "FreshNames", "atoms", "conjuncts",
    "subexpressions", "map_atoms", "substitute", "has_projection",
    "parse_expr", "parse_expr_node",
]

NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
RESERVED = frozenset(
    {"top", "bot", "var", "union", "inter", "neg", "proj", "subset", "and",
     "or", "not", "=>", "iff", "true", "false", "assert", "declare-fun"}
)


class ConstraintError(Exception):
    """Malformed constraint input. ``line``/``col`` are 0 when unknown."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        where = f"{line}:{col}: " if line else ""
        super().__init__(where + message)
        self.message = message
        self.line = line
        self.col = col


# ---------------------------------------------------------------------------
# Signatures


@dataclass(frozen=True)
class FuncSym:
    name: str
    arity: int

    def __str__(self) -> str:
        return f"{self.name}/{self.arity}"


@dataclass(frozen=True)
class Signature:
    symbols: tuple[FuncSym, ...] = ()

    def __post_init__(self):
        seen = set()
        for s in self.symbols:
            if s.name in seen:
                raise ConstraintError(f"duplicate function symbol {s.name!r}")
            if s.arity < 0:
                raise ConstraintError(f"negative arity for {s.name!r}")
            seen.add(s.name)

    @classmethod
    def of(cls, *pairs: tuple[str, int]) -> "Signature":
        return cls(tuple(FuncSym(n, a) for n, a in pairs))

    @property
    def has_ground_term(self) -> bool:
        return any(s.arity == 0 for s in self.symbols)

    def arity(self, name: str) -> int:
        for s in self.symbols:
            if s.name == name:
                return s.arity
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(s.name == name for s in self.symbols)

    def __iter__(self) -> Iterator[FuncSym]:
        return iter(self.symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    def extend(self, *syms: FuncSym) -> "Signature":
        return Signature(self.symbols + tuple(s for s in syms if s.name not in self))

    def __str__(self) -> str:
        return "{" + ", ".join(map(str, self.symbols)) + "}"


# ---------------------------------------------------------------------------
# Set expressions


class SetExpr:
    __slots__ = ()

    def __str__(self) -> str:
        return format_expr(self)


@dataclass(frozen=True)
class Var(SetExpr):
    name: str


@dataclass(frozen=True)
class Top(SetExpr):
    pass


@dataclass(frozen=True)
class Bot(SetExpr):
    pass


@dataclass(frozen=True)
class Union(SetExpr):
    left: SetExpr
    right: SetExpr


@dataclass(frozen=True)
class Inter(SetExpr):
    left: SetExpr
    right: SetExpr


@dataclass(frozen=True)
class Neg(SetExpr):
    arg: SetExpr


@dataclass(frozen=True)
class App(SetExpr):
    sym: str
    args: tuple[SetExpr, ...] = ()


@dataclass(frozen=True)
class Proj(SetExpr):
    """The ``index``-th argument (1-based) of every ``sym``-term in ``arg``."""

    sym: str
    index: int
    arg: SetExpr


TOP = Top()
BOT = Bot()


def children(e: SetExpr) -> tuple[SetExpr, ...]:
    if isinstance(e, (Union, Inter)):
        return (e.left, e.right)
    if isinstance(e, Neg):
        return (e.arg,)
    if isinstance(e, App):
        return e.args
    if isinstance(e, Proj):
        return (e.arg,)
    return ()


def rebuild(e: SetExpr, kids: tuple[SetExpr, ...]) -> SetExpr:
    if isinstance(e, Union):
        return Union(*kids)
    if isinstance(e, Inter):
        return Inter(*kids)
    if isinstance(e, Neg):
        return Neg(kids[0])
    if isinstance(e, App):
        return App(e.sym, tuple(kids))
    if isinstance(e, Proj):
        return Proj(e.sym, e.index, kids[0])
    return e


def subexpressions(e: SetExpr) -> Iterator[SetExpr]:
    """Post-order walk, children left to right, duplicates included."""
    for c in children(e):
        yield from subexpressions(c)
    yield e


def has_projection(x) -> bool:
    exprs = [x] if isinstance(x, SetExpr) else [e for a in atoms(x) for e in (a.lhs, a.rhs)]
    return any(isinstance(s, Proj) for e in exprs for s in subexpressions(e))


# ---------------------------------------------------------------------------
# Constraint formulas


@dataclass(frozen=True)
class Atom:
    lhs: SetExpr
    rhs: SetExpr

    def __str__(self) -> str:
        return f"(subset {format_expr(self.lhs)} {format_expr(self.rhs)})"


class Formula:
    __slots__ = ()

    def __str__(self) -> str:
        return format_formula(self)


@dataclass(frozen=True)
class AtomNode(Formula):
    atom: Atom


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


TRUE = AtomNode(Atom(BOT, TOP))
FALSE = AtomNode(Atom(TOP, BOT))

FormulaLike = TUnion[Formula, Atom]


def _f(x: FormulaLike) -> Formula:
    return AtomNode(x) if isinstance(x, Atom) else x


def subset(lhs: SetExpr, rhs: SetExpr) -> Formula:
    return AtomNode(Atom(lhs, rhs))


def not_subset(lhs: SetExpr, rhs: SetExpr) -> Formula:
    return Not(AtomNode(Atom(lhs, rhs)))


def conj(parts: Iterable[FormulaLike]) -> Formula:
    """Right-nested conjunction; the empty conjunction is ``TRUE``."""
    items = [_f(p) for p in parts]
    if not items:
        return TRUE
    out = items[-1]
    for p in reversed(items[:-1]):
        out = And(p, out)
    return out


def disj(parts: Iterable[FormulaLike]) -> Formula:
    items = [_f(p) for p in parts]
    if not items:
        return FALSE
    out = items[-1]
    for p in reversed(items[:-1]):
        out = Or(p, out)
    return out


def implies(a: FormulaLike, b: FormulaLike) -> Formula:
    return Or(Not(_f(a)), _f(b))


def iff(a: FormulaLike, b: FormulaLike) -> Formula:
    a, b = _f(a), _f(b)
    return And(Or(Not(a), b), Or(Not(b), a))


def eq(e1: SetExpr, e2: SetExpr) -> Formula:
    return And(subset(e1, e2), subset(e2, e1))


def conjuncts(c: Formula) -> list[Formula]:
    """Flatten the top-level ``And`` spine."""
    out: list[Formula] = []
    stack = [c]
    while stack:
        x = stack.pop()
        if isinstance(x, And):
            stack.append(x.right)
            stack.append(x.left)
        else:
            out.append(x)
    return out


def atoms(c: Formula) -> Iterator[Atom]:
    """Atoms in left-to-right order (duplicates included)."""
    if isinstance(c, AtomNode):
        yield c.atom
    elif isinstance(c, (And, Or)):
        yield from atoms(c.left)
        yield from atoms(c.right)
    elif isinstance(c, Not):
        yield from atoms(c.arg)
    else:
        raise TypeError(f"not a formula: {c!r}")


def map_atoms(c: Formula, fn) -> Formula:
    """Rebuild ``c`` with every atom replaced by ``fn(atom)`` (a Formula)."""
    if isinstance(c, AtomNode):
        return fn(c.atom)
    if isinstance(c, And):
        return And(map_atoms(c.left, fn), map_atoms(c.right, fn))
    if isinstance(c, Or):
        return Or(map_atoms(c.left, fn), map_atoms(c.right, fn))
    if isinstance(c, Not):
        return Not(map_atoms(c.arg, fn))
    raise TypeError(f"not a formula: {c!r}")


def map_expr(e: SetExpr, fn) -> SetExpr:
    """Bottom-up rewrite: ``fn`` sees each node after its children."""
    kids = children(e)
    if kids:
        new = tuple(map_expr(k, fn) for k in kids)
        if new != kids:
            e = rebuild(e, new)
    return fn(e)


def substitute(x, mapping: dict):
    """Replace set variables by expressions in an expression or formula."""
    if not mapping:
        return x

    def sub(e):
        return mapping.get(e.name, e) if isinstance(e, Var) else e

    if isinstance(x, SetExpr):
        return map_expr(x, sub)
    return map_atoms(x, lambda a: AtomNode(Atom(map_expr(a.lhs, sub), map_expr(a.rhs, sub))))


def free_set_vars(x) -> list[str]:
    """Set variable names in first-occurrence order."""
    seen: dict[str, None] = {}
    if isinstance(x, SetExpr):
        exprs = [x]
    elif isinstance(x, Atom):
        exprs = [x.lhs, x.rhs]
    else:
        exprs = [e for a in atoms(x) for e in (a.lhs, a.rhs)]
    for e in exprs:
        _collect_vars(e, seen)
    return list(seen)


def _collect_vars(e: SetExpr, seen: dict) -> None:
    # pre-order so that the leftmost variable is first
    if isinstance(e, Var):
        seen.setdefault(e.name, None)
        return
    for c in children(e):
        _collect_vars(c, seen)


# ---------------------------------------------------------------------------
# Surface syntax


def format_expr(e: SetExpr) -> str:
    if isinstance(e, Top):
        return "top"
    if isinstance(e, Bot):
        return "bot"
    if isinstance(e, Var):
        return f"(var {e.name})"
    if isinstance(e, Union):
        return f"(union {format_expr(e.left)} {format_expr(e.right)})"
    if isinstance(e, Inter):
        return f"(inter {format_expr(e.left)} {format_expr(e.right)})"
    if isinstance(e, Neg):
        return f"(neg {format_expr(e.arg)})"
    if isinstance(e, App):
        if not e.args:
            return e.sym
        return "(" + " ".join([e.sym] + [format_expr(a) for a in e.args]) + ")"
    if isinstance(e, Proj):
        return f"(proj {e.sym} {e.index} {format_expr(e.arg)})"
    raise TypeError(f"not a set expression: {e!r}")


def format_formula(c: Formula) -> str:
    if isinstance(c, AtomNode):
        return str(c.atom)
    if isinstance(c, And):
        return f"(and {format_formula(c.left)} {format_formula(c.right)})"
    if isinstance(c, Or):
        return f"(or {format_formula(c.left)} {format_formula(c.right)})"
    if isinstance(c, Not):
        return f"(not {format_formula(c.arg)})"
    raise TypeError(f"not a formula: {c!r}")


def format_constraint_file(sig: Signature, c: Formula) -> str:
    lines = [f"(declare-fun {s.name} {s.arity})" for s in sig]
    # split only the right spine so that reparsing rebuilds the same tree
    while isinstance(c, And):
        lines.append(f"(assert {format_formula(c.left)})")
        c = c.right
    lines.append(f"(assert {format_formula(c)})")
    return "\n".join(lines) + "\n"


def _err(node, message: str) -> ConstraintError:
    return ConstraintError(message, getattr(node, "line", 0), getattr(node, "col", 0))


def _head(node) -> str | None:
    if isinstance(node, SList) and node.items and isinstance(node[0], Symbol):
        return node[0].name
    return None


def _name(node, what: str) -> str:
    if not isinstance(node, Symbol) or not NAME_RE.match(node.name) or node.name in RESERVED:
        raise _err(node, f"expected {what} name, got {node}")
    return node.name


def _nat(node) -> int:
    if not isinstance(node, Symbol) or not node.name.isdigit():
        raise _err(node, f"expected a natural number, got {node}")
    return int(node.name)


def _fold(ctor, parts):
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = ctor(p, out)
    return out


def _parse_expr(node, sig: Signature) -> SetExpr:
    if isinstance(node, Symbol):
        if node.name == "top":
            return TOP
        if node.name == "bot":
            return BOT
        name = _name(node, "function symbol")
        if name not in sig:
            raise _err(node, f"undeclared function symbol {name!r}")
        if sig.arity(name) != 0:
            raise _err(node, f"arity mismatch: {name!r} expects {sig.arity(name)} arguments, got 0")
        return App(name)
    if not isinstance(node, SList) or not node.items:
        raise _err(node, "expected a set expression")
    head = _head(node)
    args = node.items[1:]
    if head == "var":
        if len(args) != 1:
            raise _err(node, "(var NAME) takes one name")
        return Var(_name(args[0], "variable"))
    if head in ("union", "inter"):
        if len(args) < 2:
            raise _err(node, f"({head} ...) needs at least two operands")
        return _fold(Union if head == "union" else Inter, [_parse_expr(a, sig) for a in args])
    if head == "neg":
        if len(args) != 1:
            raise _err(node, "(neg e) takes one operand")
        return Neg(_parse_expr(args[0], sig))
    if head == "proj":
        if len(args) != 3:
            raise _err(node, "(proj NAME NAT e) takes three operands")
        name = _name(args[0], "function symbol")
        if name not in sig:
            raise _err(args[0], f"undeclared function symbol {name!r}")
        j = _nat(args[1])
        if not 1 <= j <= sig.arity(name):
            raise _err(args[1], f"projection index {j} out of range for {name}/{sig.arity(name)}")
        return Proj(name, j, _parse_expr(args[2], sig))
    if head is None:
        raise _err(node, "expected a set expression")
    name = _name(node[0], "function symbol")
    if name not in sig:
        raise _err(node[0], f"undeclared function symbol {name!r}")
    if sig.arity(name) != len(args):
        raise _err(node, f"arity mismatch: {name!r} expects {sig.arity(name)} arguments, got {len(args)}")
    return App(name, tuple(_parse_expr(a, sig) for a in args))


def parse_expr_node(node, sig: Signature) -> SetExpr:
    """Parse one already-read s-expression as a set expression."""
    return _parse_expr(node, sig)


def parse_expr(text: str, sig: Signature) -> SetExpr:
    nodes = read_all(text)
    if len(nodes) != 1:
        raise ConstraintError("expected exactly one set expression")
    return _parse_expr(nodes[0], sig)


def _parse_formula(node, sig: Signature) -> Formula:
    if isinstance(node, Symbol):
        if node.name == "true":
            return TRUE
        if node.name == "false":
            return FALSE
        raise _err(node, f"expected a constraint, got {node}")
    head = _head(node)
    args = node.items[1:] if isinstance(node, SList) else ()
    if head == "subset":
        if len(args) != 2:
            raise _err(node, "(subset e e) takes two operands")
        return subset(_parse_expr(args[0], sig), _parse_expr(args[1], sig))
    if head in ("and", "or"):
        if len(args) < 2:
            raise _err(node, f"({head} ...) needs at least two operands")
        return _fold(And if head == "and" else Or, [_parse_formula(a, sig) for a in args])
    if head == "not":
        if len(args) != 1:
            raise _err(node, "(not c) takes one operand")
        return Not(_parse_formula(args[0], sig))
    if head in ("=>", "iff"):
        if len(args) != 2:
            raise _err(node, f"({head} c c) takes two operands")
        a, b = (_parse_formula(x, sig) for x in args)
        return implies(a, b) if head == "=>" else iff(a, b)
    raise _err(node, "expected a constraint")


def parse_constraint_file(text: str) -> tuple[Signature, Formula]:
    """Parse declarations and assertions; multiple assertions are conjoined."""
    try:
        forms = read_all(text)
    except SexprError as exc:
        raise ConstraintError(exc.message, exc.line, exc.col) from None
    syms: list[FuncSym] = []
    asserts = []
    for form in forms:
        head = _head(form)
        if head == "declare-fun":
            if asserts:
                raise _err(form, "declarations must precede assertions")
            if len(form) != 3:
                raise _err(form, "(declare-fun NAME NAT) expected")
            name = _name(form[1], "function symbol")
            if any(s.name == name for s in syms):
                raise _err(form[1], f"duplicate declaration of {name!r}")
            syms.append(FuncSym(name, _nat(form[2])))
        elif head == "assert":
            if len(form) != 2:
                raise _err(form, "(assert c) takes one constraint")
            asserts.append(form[1])
        else:
            raise _err(form, "expected (declare-fun ...) or (assert ...)")
    if not asserts:
        raise ConstraintError("no assertions in input", 1, 1)
    sig = Signature(tuple(syms))
    return sig, conj(_parse_formula(a, sig) for a in asserts)


# ---------------------------------------------------------------------------
# Projection elimination


class FreshNames:
    """Counter-based fresh set variables in the reserved ``$`` namespace."""

    def __init__(self, prefix: str = "$", start: int = 1):
        self.prefix = prefix
        self._counter = itertools.count(start)

    def avoiding(self, names: Iterable[str]) -> "FreshNames":
        top = 0
        for n in names:
            if n.startswith(self.prefix) and n[len(self.prefix):].isdigit():
                top = max(top, int(n[len(self.prefix):]))
        self._counter = itertools.count(top + 1)
        return self

    def __call__(self) -> str:
        return f"{self.prefix}{next(self._counter)}"


def _innermost_projection(c: Formula) -> Proj | None:
    for a in atoms(c):
        for e in (a.lhs, a.rhs):
            for s in subexpressions(e):
                if isinstance(s, Proj) and not has_projection(s.arg):
                    return s
    return None


def eliminate_projections(
    c: Formula,
    sig: Signature,
    fresh: FreshNames | None = None,
    literal_emptiness: bool = False,
) -> Formula:
    """Replace every ``f^{-j}(E)`` by a fresh variable plus defining constraints.

    For each distinct argument ``E`` of projections through ``f`` we introduce
    fresh ``X_1..X_a`` and conjoin ``(E ∩ f(⊤,…,⊤)) = f(X_1,…,X_a)`` together
    with, for each projected position ``j``, ``E' = ⊥ ⇔ X_j = ⊥``. By default
    ``E'`` is ``E ∩ f(⊤,…,⊤)``; ``literal_emptiness=True`` uses ``E`` itself,
    which wrongly forces ``X_j ≠ ⊥`` when ``E`` holds only non-``f`` terms.
    """
    if fresh is None:
        fresh = FreshNames().avoiding(free_set_vars(c))
    extra: list[Formula] = []
    while True:
        p = _innermost_projection(c)
        if p is None:
            break
        arity = sig.arity(p.sym)
        if not 1 <= p.index <= arity:
            raise ConstraintError(f"projection index {p.index} out of range for {p.sym}/{arity}")
        xs = tuple(Var(fresh()) for _ in range(arity))
        mapping = {Proj(p.sym, j + 1, p.arg): xs[j] for j in range(arity)}
        used = sorted({j for j in range(arity) for a in atoms(c)
                       for e in (a.lhs, a.rhs) for s in subexpressions(e)
                       if s == Proj(p.sym, j + 1, p.arg)})

        def replace(e, mapping=mapping):
            return mapping.get(e, e) if isinstance(e, Proj) else e

        c = map_atoms(c, lambda a: AtomNode(Atom(map_expr(a.lhs, replace), map_expr(a.rhs, replace))))
        restricted = Inter(p.arg, App(p.sym, (TOP,) * arity))
        extra.append(eq(restricted, App(p.sym, xs)))
        empty_side = p.arg if literal_emptiness else restricted
        for j in used:
            extra.append(iff(subset(empty_side, BOT), subset(xs[j], BOT)))
    if not extra:
        return c
    return conj([c] + extra)


# ---------------------------------------------------------------------------
# Base predicates


@dataclass(frozen=True)
class PredicateIndex:
    bases: tuple[SetExpr, ...]

    @property
    def n(self) -> int:
        return len(self.bases)

    @property
    def position_of(self) -> dict[SetExpr, int]:
        return {b: i for i, b in enumerate(self.bases)}

    def __getitem__(self, e: SetExpr) -> int:
        try:
            return self.bases.index(e)
        except ValueError:
            raise KeyError(f"{e} is not a base predicate") from None

    def __contains__(self, e: SetExpr) -> bool:
        return e in self.bases

    @property
    def variables(self) -> list[str]:
        return [b.name for b in self.bases if isinstance(b, Var)]


def index_base_predicates(c, allow_projections: bool = False) -> PredicateIndex:
    """Give each distinct variable and application subexpression a bit.

    ``allow_projections`` additionally indexes ``Proj`` nodes, which only the
    oracle's direct projection semantics understands.
    """
    seen: dict[SetExpr, None] = {}
    exprs = [c] if isinstance(c, SetExpr) else [e for a in atoms(c) for e in (a.lhs, a.rhs)]
    for e in exprs:
        for s in subexpressions(e):
            if isinstance(s, (Var, App)):
                seen.setdefault(s, None)
            elif isinstance(s, Proj):
                if not allow_projections:
                    raise ConstraintError(f"projection {s} must be eliminated first")
                seen.setdefault(s, None)
    return PredicateIndex(tuple(seen))
