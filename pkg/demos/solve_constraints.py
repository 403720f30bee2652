"""Solving set constraints with both backends.

Run with ``python demos/solve_constraints.py``. The SMT half needs a z3
executable on PATH (or in $SETPAT_SMT) and is skipped otherwise.
"""

import shutil

from setpat.constraints import (
    BOT, App, Signature, Var, conj, format_formula, implies, not_subset, subset,
)
from setpat.oracle import Budget
from setpat.smt import BackendConfig, SolverConfig, plan, render, solve

X, Y, Z = Var("X"), Var("Y"), Var("Z")
ONE_CONSTANT = Signature.of(("a", 0))
LISTS = Signature.of(("Nil", 0), ("Cons", 2))


def backends():
    yield "oracle", SolverConfig(mode="oracle", budget=Budget(max_n=8))
    z3 = shutil.which("z3")
    if z3:
        yield "z3", SolverConfig(mode="smt", backend=BackendConfig(path=z3))


def show(title, c, sig):
    print(f"\n{title}\n  {format_formula(c)}")
    for name, cfg in backends():
        print(f"  {name:>6}: {solve(c, sig, cfg).status}")


# A mixed positive/negative constraint: if X is below Y then they coincide,
# and Y has something Z lacks. Any model with Y nonempty and Z empty works.
show("implication plus a strict non-inclusion",
     conj([implies(subset(X, Y), subset(Y, X)), not_subset(Y, Z)]), ONE_CONSTANT)

# Every element of X is a cons cell whose tail is again in X, and X is
# nonempty. Over finite trees there is no such X, but the translation only
# sees a first-order theory, where a cyclic element d = Cons(_, d) is fine.
cyclic = conj([subset(X, App("Cons", (Var("H"), X))), not_subset(X, BOT)])
show("a list that is its own tail", cyclic, LISTS)

# The script that reaches the SMT solver for the first example.
p = plan(conj([implies(subset(X, Y), subset(Y, X)), not_subset(Y, Z)]), ONE_CONSTANT,
         SolverConfig(mode="smt"))
print(f"\nSMT-LIB script over {p.script.n}-bit vectors:\n")
print(render(p.script))
