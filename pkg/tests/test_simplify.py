import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import denote, expr_strategy, herbrand_terms, instances
from setpat.constraints import (
    BOT, FALSE, TOP, TRUE, App, Inter, Neg, Not, Or, Signature, Union, Var,
    conj, disj, eq, free_set_vars, subexpressions, subset,
)
from setpat.oracle import Budget, oracle_solve
from setpat.simplify import (
    VarUnionFind, inline_ground_definitions, merge_variables, remove_trivial,
    simplify_atoms, simplify_constraint, simplify_expr,
)

X, Y, Z, V1 = Var("X"), Var("Y"), Var("Z"), Var("V1")
SIG = Signature.of(("a", 0), ("f", 1), ("g", 2))
UNIVERSE = herbrand_terms(SIG, 3)


def size(e) -> int:
    return sum(1 for _ in subexpressions(e))


class TestSimplifyExpr:
    def test_double_negation(self):
        assert simplify_expr(Neg(Neg(X))) == X

    def test_no_signature_reasoning(self):
        e = Inter(App("Circle", (TOP,)), Neg(App("Square", (TOP,))))
        assert simplify_expr(e) == e

    def test_application_of_empty(self):
        assert simplify_expr(App("g", (X, BOT))) == BOT

    @pytest.mark.parametrize("e,want", [
        (Inter(X, TOP), X), (Inter(BOT, X), BOT), (Union(X, BOT), X), (Union(TOP, X), TOP),
        (Neg(TOP), BOT), (Neg(BOT), TOP), (Inter(X, X), X), (Union(Y, Y), Y),
        (Union(Inter(X, Neg(Neg(TOP))), App("f", (Inter(Y, BOT),))), X),
    ])
    def test_rewrites(self, e, want):
        assert simplify_expr(e) == want

    @settings(max_examples=200, deadline=None)
    @given(expr_strategy(SIG))
    def test_shrinks_and_is_idempotent(self, e):
        out = simplify_expr(e)
        assert size(out) <= size(e)
        assert simplify_expr(out) == out

    @settings(max_examples=150, deadline=None)
    @given(expr_strategy(SIG), st.data())
    def test_denotes_the_same_set(self, e, data):
        out = simplify_expr(e)
        terms = sorted(UNIVERSE, key=repr)
        env = {v: frozenset(data.draw(st.lists(st.sampled_from(terms), max_size=6)))
               for v in ("X", "Y")}
        assert denote(out, UNIVERSE, env) == denote(e, UNIVERSE, env)


class TestRemoveTrivial:
    def test_bottom_subset_dropped(self):
        c = subset(X, App("a"))
        assert remove_trivial(conj([subset(BOT, X), c])) == c

    def test_reflexive_atom(self):
        assert remove_trivial(subset(V1, V1)) == TRUE

    def test_constant_folding(self):
        assert remove_trivial(Not(subset(X, TOP))) == FALSE
        assert remove_trivial(disj([Not(subset(X, X)), subset(Y, Z)])) == subset(Y, Z)
        assert remove_trivial(disj([subset(Y, Z), subset(BOT, Z)])) == TRUE

    @pytest.mark.parametrize("sig,c", instances(21, 40))
    def test_verdict_preserved(self, sig, c):
        budget = Budget(max_n=3)
        assert oracle_solve(remove_trivial(c), sig, budget).status == oracle_solve(c, sig, budget).status


class TestMergeVariables:
    def test_mutual_inclusion_merges(self):
        c = conj([subset(X, Y), subset(Y, X), subset(App("f", (X,)), Z)])
        out, uf = merge_variables(c)
        assert out == subset(App("f", (X,)), Z)
        assert uf.find("Y") == "X"

    def test_equality_sugar_merges(self):
        out, uf = merge_variables(conj([eq(Y, X), subset(Y, App("a"))]))
        assert out == subset(X, App("a")) and uf.classes() == [["X", "Y"]]

    def test_disjunction_blocks_merge(self):
        c = Or(eq(X, Y), subset(X, App("a")))
        out, uf = merge_variables(c)
        assert out == c and uf.classes() == []

    def test_negation_blocks_merge(self):
        c = conj([Not(eq(X, Y)), subset(Z, X)])
        out, _ = merge_variables(c)
        assert out == c

    def test_chains_close_transitively(self):
        c = conj([eq(Z, Y), eq(Y, X), subset(Z, App("a"))])
        out, uf = merge_variables(c)
        assert out == subset(X, App("a"))
        assert {uf.find(v) for v in "XYZ"} == {"X"}

    @pytest.mark.parametrize("sig,c", instances(22, 40))
    def test_verdict_preserved(self, sig, c):
        c = conj([eq(X, Y), c])
        budget = Budget(max_n=5)
        merged, _ = merge_variables(c)
        assert oracle_solve(merged, sig, budget).status == oracle_solve(c, sig, budget).status


class TestUnionFind:
    def test_representative_is_least_name(self):
        uf = VarUnionFind()
        uf.union("V9", "V3")
        uf.union("V7", "V9")
        assert {uf.find(v) for v in ("V3", "V7", "V9")} == {"V3"}

    def test_union_order_does_not_matter(self):
        a, b = VarUnionFind(), VarUnionFind()
        a.union("p", "q"); a.union("q", "r")
        b.union("r", "q"); b.union("q", "p")
        assert a.classes() == b.classes() == [["p", "q", "r"]]

    def test_find_idempotent(self):
        uf = VarUnionFind()
        uf.union("b", "a")
        assert uf.find(uf.find("b")) == uf.find("b") == "a"


class TestInline:
    def test_ground_definition_inlined(self):
        c = conj([eq(X, App("a")), subset(Y, X)])
        assert inline_ground_definitions(c) == subset(Y, App("a"))

    def test_needs_single_other_occurrence(self):
        c = conj([eq(X, App("a")), subset(Y, X), subset(X, Z)])
        assert inline_ground_definitions(c) == c

    def test_non_ground_not_inlined(self):
        c = conj([eq(X, App("f", (Z,))), subset(Y, X)])
        assert inline_ground_definitions(c) == c


@pytest.mark.parametrize("sig,c", instances(23, 40))
def test_full_pipeline_preserves_verdict(sig, c):
    budget = Budget(max_n=3)
    out, _ = simplify_constraint(c)
    assert set(free_set_vars(out)) <= set(free_set_vars(c))
    assert oracle_solve(out, sig, budget).status == oracle_solve(c, sig, budget).status


def test_simplify_atoms_preserves_structure():
    c = Or(subset(Inter(X, TOP), Y), Not(subset(Neg(Neg(Z)), X)))
    assert simplify_atoms(c) == Or(subset(X, Y), Not(subset(Z, X)))


def test_empty_argument_rewrite_can_change_the_translated_verdict():
    # f(a) ⊄ ¬f(⊥): over finite trees f(⊥) is empty, so this is unsat. The
    # translation lets an element outside every image sit in both f(a) and
    # f(⊥), so it is sat until the rewrite removes f(⊥) or images are forced
    sig = Signature.of(("a", 0), ("f", 1))
    c = Not(subset(App("f", (App("a"),)), Neg(App("f", (BOT,)))))
    budget = Budget(max_n=5)
    assert oracle_solve(c, sig, budget).status == "sat"
    assert oracle_solve(simplify_atoms(c), sig, budget).status == "unsat"
    assert oracle_solve(c, sig, budget, image_axiom=True).status == "unsat"
