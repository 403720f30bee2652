"""Random instance generators and solver configs shared by the test modules."""

from __future__ import annotations

import random
import shutil

import pytest

from setpat.constraints import (
    BOT, TOP, App, Atom, AtomNode, Inter, Neg, Not, Proj, Signature, Union, Var,
    conj, disj, has_projection, index_base_predicates,
)
from setpat.oracle import Budget
from setpat.smt import BackendConfig, SolverConfig

Z3 = shutil.which("z3")
needs_z3 = pytest.mark.skipif(Z3 is None, reason="z3 not on PATH")

# at most two symbols of arity <= 2, always with a constant so H is nonempty
SIGNATURES = [
    Signature.of(("a", 0)),
    Signature.of(("a", 0), ("f", 1)),
    Signature.of(("a", 0), ("g", 2)),
    Signature.of(("a", 0), ("b", 0)),
]
VARS = ("X", "Y", "Z")


def oracle_cfg(max_n: int = 3, **kw) -> SolverConfig:
    return SolverConfig(mode="oracle", budget=Budget(max_n=max_n), **kw)


def z3_cfg(timeout_ms: int = 20_000, **kw) -> SolverConfig:
    return SolverConfig(mode="smt", backend=BackendConfig(path=Z3, timeout_ms=timeout_ms), **kw)


def random_expr(rng: random.Random, sig: Signature, depth: int, proj: bool = False) -> object:
    if depth <= 1 or rng.random() < 0.3:
        leaf = rng.random()
        if leaf < 0.1:
            return TOP
        if leaf < 0.15:
            return BOT
        if leaf < 0.75:
            return Var(rng.choice(VARS[:2]))
        sym = rng.choice([s for s in sig if s.arity == 0])
        return App(sym.name, ())
    kind = rng.choice(["union", "inter", "neg", "app", "app"] + (["proj"] if proj else []))
    if kind == "union":
        return Union(random_expr(rng, sig, depth - 1, proj), random_expr(rng, sig, depth - 1, proj))
    if kind == "inter":
        return Inter(random_expr(rng, sig, depth - 1, proj), random_expr(rng, sig, depth - 1, proj))
    if kind == "neg":
        return Neg(random_expr(rng, sig, depth - 1, proj))
    if kind == "proj":
        syms = [s for s in sig if s.arity > 0]
        if syms:
            s = rng.choice(syms)
            return Proj(s.name, rng.randint(1, s.arity), random_expr(rng, sig, depth - 1, False))
    s = rng.choice(list(sig))
    return App(s.name, tuple(random_expr(rng, sig, depth - 1, proj) for _ in range(s.arity)))


def random_formula(rng: random.Random, sig: Signature, max_atoms: int = 4, depth: int = 3,
                   proj: bool = False):
    n_atoms = rng.randint(1, max_atoms)
    parts = []
    for _ in range(n_atoms):
        a = AtomNode(Atom(random_expr(rng, sig, depth, proj), random_expr(rng, sig, depth, proj)))
        parts.append(Not(a) if rng.random() < 0.35 else a)
    while len(parts) > 1:
        i = rng.randrange(len(parts) - 1)
        joined = (conj if rng.random() < 0.65 else disj)([parts[i], parts[i + 1]])
        if rng.random() < 0.1:
            joined = Not(joined)
        parts[i:i + 2] = [joined]
    return parts[0]


def instances(seed: int, count: int, max_n: int = 3, proj: bool = False):
    """``count`` (sig, formula) pairs with at most ``max_n`` base predicates.

    With ``proj`` every formula contains exactly one projection node, over
    the unary signature that the oracle's direct projection semantics handles.
    """
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        sig = SIGNATURES[1] if proj else rng.choice(SIGNATURES)
        c = random_formula(rng, sig, proj=proj)
        if proj and _count_proj(c) != 1:
            continue
        if not proj and has_projection(c):
            continue
        if index_base_predicates(c, allow_projections=True).n > max_n:
            continue
        out.append((sig, c))
    return out


def _count_proj(c) -> int:
    from setpat.constraints import atoms, subexpressions

    return sum(isinstance(s, Proj) for a in atoms(c) for e in (a.lhs, a.rhs)
               for s in subexpressions(e))


def expr_strategy(sig: Signature, proj: bool = False, names=("X", "Y")):
    """Hypothesis strategy for well-formed set expressions over ``sig``."""
    from hypothesis import strategies as st

    leaves = st.one_of(
        st.just(TOP), st.just(BOT), st.sampled_from([Var(n) for n in names]),
        st.sampled_from([App(s.name, ()) for s in sig if s.arity == 0]),
    )

    def extend(inner):
        options = [
            st.builds(Union, inner, inner), st.builds(Inter, inner, inner), st.builds(Neg, inner),
        ]
        for s in sig:
            if s.arity:
                options.append(st.tuples(*[inner] * s.arity).map(lambda args, s=s: App(s.name, args)))
                if proj:
                    options.append(st.builds(Proj, st.just(s.name),
                                             st.integers(1, s.arity), inner))
        return st.one_of(options)

    return st.recursive(leaves, extend, max_leaves=6)


def formula_strategy(sig: Signature, proj: bool = False, names=("X", "Y")):
    from hypothesis import strategies as st

    e = expr_strategy(sig, proj, names)
    atom = st.builds(lambda l, r: AtomNode(Atom(l, r)), e, e)

    def extend(inner):
        from setpat.constraints import And, Or
        return st.one_of(st.builds(And, inner, inner), st.builds(Or, inner, inner),
                         st.builds(Not, inner))

    return st.recursive(atom, extend, max_leaves=4)


def herbrand_terms(sig: Signature, depth: int) -> frozenset:
    """Ground terms of height at most ``depth``, as nested tuples."""
    import itertools

    terms: set = set()
    for _ in range(depth):
        layer = set(terms)
        for s in sig:
            for args in itertools.product(sorted(terms, key=repr), repeat=s.arity):
                layer.add((s.name, *args))
        terms = layer
    return frozenset(terms)


def denote(e, universe: frozenset, env: dict) -> frozenset:
    """Set-level meaning of ``e`` restricted to a finite slice of H."""
    if e == TOP:
        return universe
    if e == BOT:
        return frozenset()
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Union):
        return denote(e.left, universe, env) | denote(e.right, universe, env)
    if isinstance(e, Inter):
        return denote(e.left, universe, env) & denote(e.right, universe, env)
    if isinstance(e, Neg):
        return universe - denote(e.arg, universe, env)
    if isinstance(e, App):
        args = [denote(a, universe, env) for a in e.args]
        return frozenset(t for t in universe
                         if t[0] == e.sym and all(x in s for x, s in zip(t[1:], args)))
    if isinstance(e, Proj):
        return frozenset(t[e.index] for t in denote(e.arg, universe, env) if t[0] == e.sym)
    raise TypeError(e)


def monadic_shape(f, bound=()):
    """Canonical form of a monadic formula for structural comparison.

    Bound variables become their binder depth and ``and``/``or`` operands
    are compared as sets, so renaming and reordering do not matter.
    """
    from setpat import monadic as m

    def term(t):
        if isinstance(t, m.TermVar):
            return ("bound", bound.index(t.name)) if t.name in bound else ("free", t.name)
        return (t.sym, *(term(a) for a in t.args))

    if isinstance(f, (m.TrueF, m.FalseF)):
        return type(f).__name__
    if isinstance(f, m.PredApp):
        return ("P", f.pred, term(f.term))
    if isinstance(f, (m.ForAllM, m.ExistsM)):
        inner = tuple(reversed(f.vars)) + tuple(bound)
        return (type(f).__name__, len(f.vars), monadic_shape(f.body, inner))
    if isinstance(f, (m.MAnd, m.MOr)):
        items = []
        for x in f.items:
            s = monadic_shape(x, bound)
            if isinstance(s, tuple) and s[0] == type(f).__name__:
                items.extend(s[1])
            else:
                items.append(s)
        return (type(f).__name__, frozenset(items))
    if isinstance(f, m.MNot):
        return ("MNot", monadic_shape(f.arg, bound))
    return (type(f).__name__, monadic_shape(f.lhs, bound), monadic_shape(f.rhs, bound))


def corpus(name: str) -> str:
    from importlib.resources import files

    return files("setpat.corpus").joinpath(name).read_text(encoding="utf-8")


CORPUS = ["shapes.lang", "shapes_triangle.lang", "intmap.lang", "head_safe.lang",
          "head_unsafe.lang", "exhaustive_bool.lang", "exhaustive_nat.lang",
          "exhaustive_tree.lang", "exhaustive_nested.lang", "exhaustive_catchall.lang",
          "exhaustive_option.lang"]
EXHAUSTIVE = [n for n in CORPUS if n.startswith("exhaustive_")]


def _inter_parts(e) -> list:
    if isinstance(e, Inter):
        return _inter_parts(e.left) + _inter_parts(e.right)
    return [e]


def cons_result_conjuncts(c) -> list:
    """Conjuncts of shape ``(V ∩ ¬Nil ∩ Cons(⊤,⊤) ⊄ ⊥) ⇒ Cons(·, W) ⊆ W``.

    Intersections are compared as sets of operands and the implication may
    appear as ``¬A ∨ B`` with either operand first.
    """
    from setpat.constraints import Or, conjuncts

    found = []
    for part in conjuncts(c):
        if not isinstance(part, Or):
            continue
        for guard, body in ((part.left, part.right), (part.right, part.left)):
            if not (isinstance(guard, AtomNode) and guard.atom.rhs == BOT):
                continue
            ops = _inter_parts(guard.atom.lhs)
            shape = {App("Cons", (TOP, TOP)), Neg(App("Nil"))}
            if len(ops) != 3 or not shape <= set(ops):
                continue
            (v,) = [o for o in ops if o not in shape]
            if not isinstance(v, Var) or not isinstance(body, AtomNode):
                continue
            lhs, rhs = body.atom.lhs, body.atom.rhs
            if isinstance(rhs, Var) and isinstance(lhs, App) and lhs.sym == "Cons" \
                    and lhs.args[1] == rhs:
                found.append((v, lhs, rhs))
    return found


# PASS/FAIL lines of the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def report(name: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line
