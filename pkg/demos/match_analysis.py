"""Pattern-match safety on the bundled programs.

shapes.lang has a match with no catch-all that is nevertheless safe; adding
a Triangle constructor makes one call site unsafe. intmap.lang shows that the
analysis tracks what a match returns, not only what it accepts.
"""

from importlib import resources

from setpat.constraints import format_formula
from setpat.lang import analyze_program, parse_program
from setpat.oracle import Budget
from setpat.smt import SolverConfig

SOLVER = SolverConfig(mode="oracle", budget=Budget(max_n=8))


def source(name):
    return resources.files("setpat.corpus").joinpath(name).read_text()


def analyze(name, text=None, solver=SOLVER):
    report = analyze_program(parse_program(text or source(name)), solver)
    print(f"\n== {name} ({report.backend_calls} solver calls, "
          f"{report.elided_checks} checks elided)")
    for line in report.lines():
        print("  " + line)
    return report


shapes = analyze("shapes.lang")
d = shapes.get("simpleArea")
print("\n  simpleArea's scheme carries its safety requirement to each caller:")
for conjunct in d.scheme.constraint:
    if conjunct.origin is not None:
        print(f"    {format_formula(conjunct.formula)}   (match at {conjunct.origin})")

analyze("shapes_triangle.lang")

intmap = analyze("intmap.lang")
print("\n  intMap's constraint as generated; the last conjunct says a Cons result is a")
print("  Cons whose tail is again a result:")
print("    " + format_formula(intmap.get("intMap").constraint))

# Known imprecision: recursive calls see the function's own monomorphic
# annotation, so what intMap returns is only known to be some list.
text = source("intmap.lang").replace(
    "main = intMap inc (Cons(1, Cons(2, Nil)))",
    "head = \\l. match l with { Cons(x, r) -> x; }\n"
    "main = head (intMap inc (Cons(1, Cons(2, Nil))))")
analyze("intmap.lang + head", text, SolverConfig(mode="oracle", budget=Budget(max_n=12)))
