"""Cheap equisatisfiable reductions applied before a constraint reaches a solver.

The boolean constant folding treats ``⊤ ⊆ ⊥`` as false, which is only right
when the Herbrand universe is nonempty; :func:`setpat.smt.solve` decides the
empty-universe case before calling into this module.
"""

from __future__ import annotations

from .constraints import (
    BOT, FALSE, TOP, TRUE, And, App, Atom, AtomNode, Bot, Formula, Inter, Neg,
    Not, Or, SetExpr, Top, Union, Var, atoms, conj, conjuncts, free_set_vars,
    map_atoms, map_expr, substitute,
)


class VarUnionFind:
    """Union-find over set-variable names.

    The representative of a class is its lexicographically least name, so the
    result does not depend on the order unions were performed in.
    """

    def __init__(self):
        self.parent: dict[str, str] = {}

    def find(self, x: str) -> str:
        root = x
        while self.parent.get(root, root) != root:
            root = self.parent[root]
        while x != root:
            nxt = self.parent.get(x, x)
            self.parent[x] = root
            x = nxt
        return root

    def union(self, a: str, b: str) -> str:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        keep, drop = (ra, rb) if ra < rb else (rb, ra)
        self.parent[drop] = keep
        self.parent.setdefault(keep, keep)
        return keep

    def mapping(self) -> dict[str, Var]:
        return {x: Var(self.find(x)) for x in self.parent if self.find(x) != x}

    def classes(self) -> list[list[str]]:
        groups: dict[str, list[str]] = {}
        for x in self.parent:
            groups.setdefault(self.find(x), []).append(x)
        return [sorted(g) for _, g in sorted(groups.items()) if len(g) > 1]


def _rewrite(e: SetExpr) -> SetExpr:
    if isinstance(e, Inter):
        l, r = e.left, e.right
        if isinstance(l, Bot) or isinstance(r, Bot):
            return BOT
        if isinstance(r, Top):
            return l
        if isinstance(l, Top):
            return r
        if l == r:
            return l
    elif isinstance(e, Union):
        l, r = e.left, e.right
        if isinstance(l, Top) or isinstance(r, Top):
            return TOP
        if isinstance(r, Bot):
            return l
        if isinstance(l, Bot):
            return r
        if l == r:
            return l
    elif isinstance(e, Neg):
        a = e.arg
        if isinstance(a, Neg):
            return a.arg
        if isinstance(a, Top):
            return BOT
        if isinstance(a, Bot):
            return TOP
    elif isinstance(e, App):
        if any(isinstance(a, Bot) for a in e.args):
            return BOT
    return e


def simplify_expr(e: SetExpr) -> SetExpr:
    """Apply the local identities for ⊤, ⊥, ¬¬, idempotence and ``f(…,⊥,…)``."""
    while True:
        out = map_expr(e, _rewrite)
        if out == e:
            return out
        e = out


def simplify_atoms(c: Formula) -> Formula:
    return map_atoms(c, lambda a: AtomNode(Atom(simplify_expr(a.lhs), simplify_expr(a.rhs))))


def is_trivial(a: Atom) -> bool:
    return isinstance(a.rhs, Top) or isinstance(a.lhs, Bot) or a.lhs == a.rhs


def fold_constants(c: Formula) -> Formula:
    if isinstance(c, AtomNode):
        return TRUE if is_trivial(c.atom) else c
    if isinstance(c, Not):
        a = fold_constants(c.arg)
        if a == TRUE:
            return FALSE
        if a == FALSE:
            return TRUE
        if isinstance(a, Not):
            return a.arg
        return Not(a)
    l, r = fold_constants(c.left), fold_constants(c.right)
    if isinstance(c, And):
        if l == FALSE or r == FALSE:
            return FALSE
        if l == TRUE:
            return r
        if r == TRUE:
            return l
        return And(l, r)
    if l == TRUE or r == TRUE:
        return TRUE
    if l == FALSE:
        return r
    if r == FALSE:
        return l
    return Or(l, r)


def remove_trivial(c: Formula) -> Formula:
    """Replace ``E ⊆ ⊤``, ``⊥ ⊆ E`` and ``E ⊆ E`` by true, then fold constants."""
    return fold_constants(c)


def _var_pairs(parts: list[Formula]) -> set[tuple[str, str]]:
    edges = set()
    for p in parts:
        if isinstance(p, AtomNode) and isinstance(p.atom.lhs, Var) and isinstance(p.atom.rhs, Var):
            edges.add((p.atom.lhs.name, p.atom.rhs.name))
    return edges


def merge_variables(c: Formula) -> tuple[Formula, VarUnionFind]:
    """Merge variables related by mutual inclusion in top-level conjuncts.

    Only the conjunction spine is inspected, so equalities under ``Or``/``Not``
    never cause a merge.
    """
    uf = VarUnionFind()
    while True:
        parts = conjuncts(c)
        edges = _var_pairs(parts)
        merged = False
        for a, b in sorted(edges):
            if a != b and (b, a) in edges:
                uf.union(a, b)
                merged = True
        if not merged:
            return c, uf
        c = substitute(c, uf.mapping())
        kept = [p for p in conjuncts(c)
                if not (isinstance(p, AtomNode) and p.atom.lhs == p.atom.rhs)]
        c = conj(kept)


def _count_var(parts: list[Formula], name: str) -> int:
    return sum(1 for p in parts if name in free_set_vars(p))


def inline_ground_definitions(c: Formula) -> Formula:
    """Inline ``X`` when top-level conjuncts state ``X = E`` with ``E`` variable-free.

    This is a conservative reading of merging "intermediate variables": the
    variable must occur in exactly one other top-level conjunct, so inlining
    never duplicates ``E``.
    """
    while True:
        parts = conjuncts(c)
        defs: dict[str, list[tuple[int, SetExpr]]] = {}
        for i, p in enumerate(parts):
            if not isinstance(p, AtomNode):
                continue
            a = p.atom
            if isinstance(a.lhs, Var) and not free_set_vars(a.rhs):
                defs.setdefault(a.lhs.name, []).append((i, a.rhs))
            if isinstance(a.rhs, Var) and not free_set_vars(a.lhs):
                defs.setdefault(a.rhs.name, []).append((i, a.lhs))
        done = False
        for name, sides in sorted(defs.items()):
            pair = _definition_pair(parts, name, sides)
            if pair is None:
                continue
            (i, e), (j, _) = pair
            rest = [p for k, p in enumerate(parts) if k not in (i, j)]
            if _count_var(rest, name) != 1:
                continue
            c = conj(substitute(p, {name: e}) for p in rest)
            done = True
            break
        if not done:
            return c


def _definition_pair(parts, name, sides):
    # need both X ⊆ E and E ⊆ X for the same E
    for i, e in sides:
        for j, e2 in sides:
            if i != j and e == e2:
                a, b = parts[i].atom, parts[j].atom
                if {(a.lhs, a.rhs), (b.lhs, b.rhs)} == {(Var(name), e), (e, Var(name))}:
                    return (i, e), (j, e2)
    return None


def simplify_constraint(c: Formula) -> tuple[Formula, VarUnionFind]:
    """Run every reduction to a fixpoint; returns the merged classes too."""
    uf = VarUnionFind()
    while True:
        before = c
        c = remove_trivial(simplify_atoms(c))
        c, step = merge_variables(c)
        for x in step.parent:
            uf.union(x, step.find(x))
        c = remove_trivial(inline_ground_definitions(c))
        if c == before:
            return c, uf
