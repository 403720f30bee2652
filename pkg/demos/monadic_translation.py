"""From a set constraint to a monadic first-order theory.

The constraint is the guard of a match result in the shapes program: if a
circle that is not a square can reach the match, the result is anything.
"""

from setpat.constraints import BOT, TOP, App, Inter, Neg, Signature, Var, implies, not_subset, subset
from setpat.monadic import formula_to_monadic, model_bound, reduce_theory

sig = Signature.of(("Circle", 1), ("Square", 1))
circle, square = App("Circle", (TOP,)), App("Square", (TOP,))
guard = implies(not_subset(Inter(Inter(Var("V1"), circle), Neg(square)), BOT), subset(TOP, Var("V2")))

full = formula_to_monadic(guard, sig)
print("Every subexpression gets a predicate:")
for i, e in enumerate(full.predicates):
    print(f"  P{i}  {e}")
print(f"\nFull theory ({len(full.axioms)} axioms):\n{full.text()}")

reduced = reduce_theory(full)
print(f"After inlining composite predicates ({len(reduced.axioms)} axioms):\n{reduced.text()}")

# A model needs at most one element per subset of the base predicates.
print(f"Base predicates: {reduced.n}; a model of size {model_bound(reduced)} always suffices.")
