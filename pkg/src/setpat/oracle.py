"""Exhaustive finite-model search for the bit-sequence translation.

A candidate model is a domain ``D`` of ``N``-bit sequences (one bit per base
predicate) plus a table for every function symbol. Application bits of a
function's output are forced; only variable bits are guessed. Satisfiability of
the translated problem is decided by searching those models directly, without
any SMT solver.

Two strategies are provided:

``enumerate``
    Literal brute force: domains by increasing size then lexicographically.
    Only practical for ``N <= 3``.
``search``
    Searches domains generated from the constants and the negative-literal
    witnesses. Every model contains such a generated submodel that satisfies
    the same formula, so the search is exact; it explores far fewer domains.

Projection nodes on unary symbols may also be given their own bit; they are
then interpreted by ``x ∈ f⁻¹(E) ⇔ f(x) ∈ E``, which lets the oracle decide a
formula both before and after projection elimination.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .constraints import (
    App, Atom, AtomNode, Bot, Formula, Inter, Neg, Not, Proj, SetExpr,
    Signature, Top, Union, Var, And, atoms, index_base_predicates,
)
from .smt import Verdict

__all__ = ["Budget", "FiniteModel", "oracle_solve", "OracleModelView"]


@dataclass(frozen=True)
class Budget:
    max_n: int = 3
    max_checks: int = 10**7

    def __post_init__(self):
        if self.max_n <= 0 or self.max_checks <= 0:
            raise ValueError("budget limits must be positive")


@dataclass
class FiniteModel:
    n: int
    bases: tuple
    domain: tuple                       # sorted sequences, bit i = base i
    tables: dict                        # symbol -> {input tuple: output}
    witnesses: dict = field(default_factory=dict)   # atom -> element violating it
    atom_values: dict = field(default_factory=dict)

    def show(self, b: int) -> str:
        return "".join("1" if (b >> i) & 1 else "0" for i in range(self.n))

    def members(self, base: SetExpr) -> list[str]:
        i = self.bases.index(base)
        return [self.show(b) for b in self.domain if (b >> i) & 1]


class _BudgetExceeded(Exception):
    pass


def _predicate(e: SetExpr, pos: dict):
    if isinstance(e, Top):
        return lambda b: True
    if isinstance(e, Bot):
        return lambda b: False
    if isinstance(e, (Var, App, Proj)):
        i = pos[e]
        return lambda b: bool((b >> i) & 1)
    if isinstance(e, Neg):
        f = _predicate(e.arg, pos)
        return lambda b: not f(b)
    if isinstance(e, Inter):
        l, r = _predicate(e.left, pos), _predicate(e.right, pos)
        return lambda b: l(b) and r(b)
    if isinstance(e, Union):
        l, r = _predicate(e.left, pos), _predicate(e.right, pos)
        return lambda b: l(b) or r(b)
    raise TypeError(f"not a set expression: {e!r}")


def _eval3(c: Formula, value: dict):
    """Three-valued evaluation; unassigned atoms are ``None``."""
    if isinstance(c, AtomNode):
        return value.get(c.atom)
    if isinstance(c, Not):
        v = _eval3(c.arg, value)
        return None if v is None else not v
    l = _eval3(c.left, value)
    if isinstance(c, And):
        if l is False:
            return False
        r = _eval3(c.right, value)
        if r is False:
            return False
        return True if (l and r) else None
    if l is True:
        return True
    r = _eval3(c.right, value)
    if r is True:
        return True
    return False if (l is False and r is False) else None


class _Problem:
    def __init__(self, c: Formula, sig: Signature, budget: Budget, image_axiom: bool = False):
        self.c = c
        self.image_axiom = image_axiom
        self.sig = sig
        self.budget = budget
        self.checks = 0
        idx = index_base_predicates(c, allow_projections=True)
        self.bases = idx.bases
        self.n = idx.n
        pos = {b: i for i, b in enumerate(self.bases)}
        self.atoms = list(dict.fromkeys(atoms(c)))
        self.universe = range(1 << self.n)
        self.sat_set = {}
        for a in self.atoms:
            lhs, rhs = _predicate(a.lhs, pos), _predicate(a.rhs, pos)
            self.sat_set[a] = frozenset(b for b in self.universe if not lhs(b) or rhs(b))
        self.free_mask = 0
        self.projections = {}           # unary symbol -> [(bit, predicate of E)]
        for i, base in enumerate(self.bases):
            if isinstance(base, (Var, Proj)):
                self.free_mask |= 1 << i
            if isinstance(base, Proj):
                if sig.arity(base.sym) != 1:
                    raise ValueError(
                        f"direct projection semantics supports unary symbols only, got {base}")
                self.projections.setdefault(base.sym, []).append((i, _predicate(base.arg, pos)))
        self.app_bits = [(i, base, [_predicate(e, pos) for e in base.args])
                         for i, base in enumerate(self.bases) if isinstance(base, App)]
        self.free_choices = [m for m in _submasks(self.free_mask)]
        self._completions: dict = {}

    def tick(self, k: int = 1) -> None:
        self.checks += k
        if self.checks > self.budget.max_checks:
            raise _BudgetExceeded

    def completions(self, sym: str, args: tuple) -> list[int]:
        """Outputs of ``sym(args)`` consistent with forced bits, ascending."""
        key = (sym, args)
        got = self._completions.get(key)
        if got is not None:
            return got
        forced = 0
        for i, base, preds in self.app_bits:
            if base.sym == sym and all(p(b) for p, b in zip(preds, args)):
                forced |= 1 << i
        outs = sorted(forced | m for m in self.free_choices)
        proj = self.projections.get(sym)
        if proj:
            (x,) = args
            outs = [y for y in outs if all(bool((x >> i) & 1) == p(y) for i, p in proj)]
        self._completions[key] = outs
        return outs

    def closed_tables(self, domain) -> dict | None:
        """A total table into ``domain`` for every symbol, or ``None``.

        With the image axiom every element must also be the output of some
        entry, which is a bipartite matching of elements to input tuples.
        """
        dset = set(domain)
        tables = {}
        if self.image_axiom:
            return self._surjective_tables(domain, dset)
        for f in self.sig:
            table = {}
            for args in itertools.product(domain, repeat=f.arity):
                self.tick()
                out = next((y for y in self.completions(f.name, args) if y in dset), None)
                if out is None:
                    return None
                table[args] = out
            tables[f.name] = table
        return tables

    def _surjective_tables(self, domain, dset) -> dict | None:
        slots = []
        for f in self.sig:
            for args in itertools.product(domain, repeat=f.arity):
                self.tick()
                outs = [y for y in self.completions(f.name, args) if y in dset]
                if not outs:
                    return None
                slots.append((f.name, args, outs))
        holder: dict = {}       # slot index -> element

        def augment(elem, seen) -> bool:
            for k, (_, _, outs) in enumerate(slots):
                if elem in outs and k not in seen:
                    seen.add(k)
                    self.tick()
                    if k not in holder or augment(holder[k], seen):
                        holder[k] = elem
                        return True
            return False

        for elem in domain:
            if not augment(elem, set()):
                return None
        tables = {f.name: {} for f in self.sig}
        for k, (name, args, outs) in enumerate(slots):
            tables[name][args] = holder.get(k, outs[0])
        return tables

    def atom_values(self, domain) -> dict:
        return {a: all(b in self.sat_set[a] for b in domain) for a in self.atoms}

    def model(self, domain, tables) -> FiniteModel:
        values = self.atom_values(domain)
        witnesses = {a: next(b for b in domain if b not in self.sat_set[a])
                     for a, v in values.items() if not v}
        return FiniteModel(self.n, self.bases, tuple(sorted(domain)), tables, witnesses, values)

    # -- literal enumeration -------------------------------------------------

    def enumerate(self) -> FiniteModel | None:
        elems = list(self.universe)
        for size in range(len(elems) + 1):
            for domain in itertools.combinations(elems, size):
                self.tick()
                values = {a: self.sat_set[a].issuperset(domain) for a in self.atoms}
                if not _eval3(self.c, values):
                    continue
                tables = self.closed_tables(domain)
                if tables is not None:
                    return self.model(domain, tables)
        return None

    # -- generated-domain search ---------------------------------------------

    def search(self) -> FiniteModel | None:
        order = self.atoms
        assignment: dict = {}
        tried: set = set()

        def decide(k: int):
            v = _eval3(self.c, assignment)
            if v is False:
                return None
            if v is True or k == len(order):
                if v is not True:
                    return None
                true_atoms = frozenset(a for a, x in assignment.items() if x)
                false_atoms = frozenset(a for a, x in assignment.items() if not x)
                key = (true_atoms, false_atoms)
                if key in tried:
                    return None
                tried.add(key)
                return self.generate(true_atoms, false_atoms)
            atom = order[k]
            for choice in (True, False):
                assignment[atom] = choice
                if self.feasible(assignment):
                    found = decide(k + 1)
                    if found is not None:
                        return found
                del assignment[atom]
            return None

        return decide(0)

    def allowed(self, assignment: dict) -> frozenset:
        allowed = frozenset(self.universe)
        for a, v in assignment.items():
            if v:
                allowed &= self.sat_set[a]
        return allowed

    def feasible(self, assignment: dict) -> bool:
        self.tick()
        allowed = self.allowed(assignment)
        for a, v in assignment.items():
            if not v and not (allowed - self.sat_set[a]):
                return False
        for f in self.sig:
            if f.arity == 0 and not any(y in allowed for y in self.completions(f.name, ())):
                return False
        return True

    def generate(self, true_atoms, false_atoms) -> FiniteModel | None:
        allowed = frozenset(self.universe)
        for a in true_atoms:
            allowed &= self.sat_set[a]
        needs = [allowed - self.sat_set[a] for a in sorted(false_atoms, key=self.atoms.index)]
        failed: set = set()

        def obligation(domain: frozenset):
            best = None
            for need in needs:
                if not (need & domain):
                    cands = sorted(need)
                    if best is None or len(cands) < len(best):
                        best = cands
                    if not best:
                        return best
            ordered = sorted(domain)
            for f in self.sig:
                for args in itertools.product(ordered, repeat=f.arity):
                    self.tick()
                    outs = self.completions(f.name, args)
                    if any(y in domain for y in outs):
                        continue
                    cands = [y for y in outs if y in allowed]
                    if best is None or len(cands) < len(best):
                        best = cands
                    if not best:
                        return best
            return best

        def grow(domain: frozenset):
            if domain in failed:
                return None
            cands = obligation(domain)
            if cands is None:
                return domain
            for y in cands:
                found = grow(domain | {y})
                if found is not None:
                    return found
            failed.add(domain)
            return None

        domain = grow(frozenset())
        if domain is None:
            return None
        tables = self.closed_tables(sorted(domain))
        assert tables is not None
        model = self.model(sorted(domain), tables)
        assert _eval3(self.c, model.atom_values) is True
        return model


def _submasks(mask: int):
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def oracle_solve(
    c: Formula,
    sig: Signature,
    budget: Budget | None = None,
    strategy: str = "auto",
    image_axiom: bool = False,
) -> Verdict:
    """Decide the translated problem for ``c`` by exhaustive model search.

    ``strategy="auto"`` uses the generated-domain search, except under the
    image axiom, where only literal enumeration is exact.
    """
    if strategy == "auto":
        strategy = "enumerate" if image_axiom else "search"
    if strategy == "search" and image_axiom:
        raise ValueError("the image axiom requires strategy='enumerate'")
    budget = budget or Budget()
    idx = index_base_predicates(c, allow_projections=True)
    if idx.n > budget.max_n:
        return Verdict.unknown("budget", f"{idx.n} base predicates exceed max_n={budget.max_n}")
    problem = _Problem(c, sig, budget, image_axiom)
    try:
        if strategy == "enumerate":
            model = problem.enumerate()
        elif strategy == "search":
            model = problem.search()
        else:
            raise ValueError(f"unknown oracle strategy {strategy!r}")
    except _BudgetExceeded:
        return Verdict.unknown("budget", f"more than {budget.max_checks} checks")
    if model is None:
        return Verdict.unsat(detail=f"{problem.checks} checks")
    return Verdict.sat(detail=f"{problem.checks} checks", model=model)


class OracleModelView:
    """Adapts a :class:`FiniteModel` to :func:`setpat.smt.evaluate_script`."""

    def __init__(self, model: FiniteModel, script):
        self.model = model
        self.script = script
        self.domain = set(model.domain)
        self._unknown = {name: (sym, var) for (sym, var), name in script.unknown_of.items()}
        pos = {b: i for i, b in enumerate(model.bases)}
        self._var_pos = {b.name: i for b, i in pos.items() if isinstance(b, Var)}
        self._consts = {}
        for (atom, _), name in script.witness_of.items():
            self._consts[name] = model.witnesses.get(atom, model.domain[0] if model.domain else 0)
        for atom, name in script.literal_of.items():
            self._consts[name] = model.atom_values[atom]

    def in_domain(self, b: int) -> bool:
        return b in self.domain

    def unknown(self, name: str, args: tuple) -> bool:
        sym, var = self._unknown[name]
        out = self.model.tables[sym].get(args)
        if out is None:
            return False
        return bool((out >> self._var_pos[var]) & 1)

    def const(self, name: str):
        return self._consts[name]
