import itertools

import pytest

from helpers import CORPUS, EXHAUSTIVE, cons_result_conjuncts, corpus, needs_z3, oracle_cfg, z3_cfg
from setpat import constraints as sc
from setpat.constraints import FALSE, TOP, Inter, Neg, Proj, Union, format_formula
from setpat.lang import (
    AArrow, AData, ATVar, DataEnv, LangSyntaxError, LangTypeError, analyze_expr,
    analyze_program, bind_pattern, equate, erase, freshen, is_exhaustive,
    not_yet_covered, parse_program, pattern_set, typecheck,
)
from setpat.lang.analysis import Analyzer, program_signature
from setpat.lang.syntax import (
    App, Arrow, Ctor, Data, Lam, Let, Lit, Match, PCtor, PVar, Span, TVar, Var,
    format_type,
)

V = sc.Var
LIST = DataEnv({"List": [("Nil", []), ("Cons", [Data("Int"), Data("List")])]})
SHAPE = DataEnv({"Shape": [("Square", [Data("Double")]), ("Circle", [Data("Double")]),
                           ("Ngon", [Data("Double")])]})
AREA_CORE = """\
data Sides = NoSides | Side(Double, Sides)
data Shape = Square(Double) | Circle(Double) | Ngon(Sides)

area = \\shape.
  let simpleArea = \\sshape. match sshape with {
      Square(len) -> len;
      Circle(r) -> r;
    } in
  match shape with {
    Ngon(sides) -> 0.0;
    other -> simpleArea shape;
  }
"""


def counter():
    c = itertools.count(1)
    return lambda: f"V{next(c)}"


def lets(t):
    if isinstance(t, Let):
        return 1 + lets(t.defn) + lets(t.body)
    if isinstance(t, Ctor):
        return sum(lets(a) for a in t.args)
    if isinstance(t, Lam):
        return lets(t.body)
    if isinstance(t, App):
        return lets(t.fn) + lets(t.arg)
    if isinstance(t, Match):
        return lets(t.scrutinee) + sum(lets(r) for _, r in t.branches)
    return 0


class TestParse:
    def test_area_is_two_lets(self):
        prog = parse_program(AREA_CORE)
        assert lets(prog.term) == 2
        assert isinstance(prog.term, Let) and prog.term.name == "area"
        assert prog.term.body == Var("area")
        inner = prog.term.defn.body
        assert isinstance(inner, Let) and inner.name == "simpleArea"

    def test_nullary_constructor(self):
        prog = parse_program("data D = K\nmain = K")
        assert prog.data.types == {"D": [("K", [])]}
        assert prog.term == Let("main", Ctor("K", "D", ()), Var("main"))

    def test_dangling_keyword(self):
        with pytest.raises(LangSyntaxError) as info:
            parse_program("main = case")
        assert info.value.span == Span(1, 8)

    def test_multi_argument_lambda(self):
        prog = parse_program("k = \\a b. a")
        assert prog.term.defn == Lam("a", Lam("b", Var("a")))

    def test_literals(self):
        prog = parse_program("x = 1\ny = 2.5")
        assert prog.term.defn == Lit(1, "Int")
        assert prog.term.body.defn == Lit(2.5, "Double")

    @pytest.mark.parametrize("text", [
        "data L = Nil | Cons(Int, L)\nmain = Cons(1)",           # arity
        "main = Foo",                                           # unknown constructor
        "data L = Nil\ndata M = Nil\nmain = Nil",                # duplicate constructor
        "data L = K(Bogus)\nmain = K",                          # unknown type
        "main = match x with { }",
        "main = (\\x. x",
    ])
    def test_rejects(self, text):
        with pytest.raises(LangSyntaxError):
            parse_program(text)

    def test_spans_follow_source(self):
        prog = parse_program(corpus("shapes.lang"))
        assert [(n, str(s)) for n, s in prog.definitions] == [
            ("times", "6:1"), ("area", "8:1"), ("main", "18:1")]


class TestTypecheck:
    def test_intmap(self):
        prog = parse_program(corpus("intmap.lang"))
        typing = typecheck(prog.data, prog.term)
        assert format_type(typing.schemes[prog.term.nid].body) == "(Int -> Int) -> List -> List"

    def test_identity(self):
        t = Lam("x", Var("x"))
        ty = typecheck(DataEnv(), t).types[t.nid]
        assert isinstance(ty, Arrow) and isinstance(ty.dom, TVar) and ty.dom == ty.cod

    def test_constructor_pattern_on_function(self):
        prog = parse_program("data L = Nil\nf = \\g. match (\\x. x) with { Nil -> Nil; }")
        with pytest.raises(LangTypeError):
            typecheck(prog.data, prog.term)

    def test_unbound(self):
        with pytest.raises(LangTypeError, match="unbound"):
            typecheck(DataEnv(), Var("nope"))

    def test_occurs_check(self):
        t = Lam("x", App(Var("x"), Var("x")))
        with pytest.raises(LangTypeError, match="infinite"):
            typecheck(DataEnv(), t)

    def test_let_generalizes(self):
        prog = parse_program("data B = T | F\nid = \\x. x\nmain = id id T")
        typing = typecheck(prog.data, prog.term)
        assert typing.generalized[prog.term.nid]

    def test_recursion_is_monomorphic(self):
        prog = parse_program("data B = T | F\nf = \\x. let u = f T in f (\\y. y)")
        with pytest.raises(LangTypeError):
            typecheck(prog.data, prog.term)

    def test_non_exhaustive_match_typechecks(self):
        prog = parse_program(corpus("head_unsafe.lang"))
        typecheck(prog.data, prog.term)


CONS = lambda *ps: PCtor("Cons", "List", tuple(ps))  # noqa: E731
NIL = PCtor("Nil", "List")


class TestMetafunctions:
    def test_pattern_sets(self):
        assert pattern_set(PVar("x")) == TOP
        assert pattern_set(CONS(PVar("h"), NIL)) == sc.App("Cons", (TOP, sc.App("Nil")))
        assert pattern_set(PCtor("Square", "Shape", (PVar("x"),))) == sc.App("Square", (TOP,))

    def test_not_yet_covered(self):
        sq = PCtor("Square", "Shape", (PVar("x"),))
        ci = PCtor("Circle", "Shape", (PVar("r"),))
        ngon = PCtor("Ngon", "Shape", (PVar("s"),))
        assert not_yet_covered([sq], 0) == TOP
        assert not_yet_covered([ngon, PVar("o")], 1) == Neg(sc.App("Ngon", (TOP,)))
        assert not_yet_covered([sq, ci], 2) == Inter(Neg(sc.App("Square", (TOP,))),
                                                     Neg(sc.App("Circle", (TOP,))))
        with pytest.raises(IndexError):
            not_yet_covered([sq], 2)

    def test_equate(self):
        e1, e2 = V("A"), V("B")
        assert equate(ATVar(0, e1), ATVar(0, e2)) == sc.eq(e1, e2)
        assert equate(AData("D", e1), ATVar(0, e2)) == FALSE
        a, b, c, x, y, z = map(V, "abcxyz")
        got = equate(AArrow(AData("D", a), AData("D", b), c), AArrow(AData("D", x), AData("D", y), z))
        assert got == sc.conj([sc.eq(a, x), sc.eq(b, y), sc.eq(c, z)])

    def test_freshen(self):
        fresh = counter()
        assert freshen(Data("D"), fresh) == AData("D", V("V1"))
        t = freshen(Arrow(Data("D"), TVar(3)), fresh)
        assert t == AArrow(AData("D", V("V2")), ATVar(3, V("V3")), V("V4"))
        again = freshen(t, fresh)
        assert not ({a for a in ("V2", "V3", "V4")} & {e.name for e in (again.dom.ann, again.cod.ann, again.ann)})

    def test_freshen_opaque(self):
        assert freshen(Data("Int"), counter(), LIST) == AData("Int", TOP)

    def test_bind_variable(self):
        env = bind_pattern({}, PVar("x"), AData("List", V("V2")), LIST, counter())
        assert env["x"].body == AData("List", V("V2"))

    def test_bind_constructor(self):
        env = bind_pattern({}, CONS(PVar("h"), PVar("t")), AData("List", V("V2")), LIST, counter())
        assert env["h"].body == AData("Int", TOP)          # opaque heads carry ⊤
        assert env["t"].body == AData("List", Proj("Cons", 2, V("V2")))

    def test_bind_projection_on_non_opaque(self):
        data = DataEnv({"Shape": [("Square", [Data("Len")])], "Len": [("L", [])]})
        env = bind_pattern({}, PCtor("Square", "Shape", (PVar("len"),)), AData("Shape", V("E")), data, counter())
        assert env["len"].body == AData("Len", Proj("Square", 1, V("E")))

    def test_later_bindings_shadow(self):
        env = bind_pattern({}, CONS(PVar("x"), PVar("x")), AData("List", V("E")), LIST, counter())
        assert env["x"].body.name == "List"


class TestExhaustive:
    def test_catch_all(self):
        assert is_exhaustive([NIL, PVar("o")], Data("List"), LIST)

    def test_all_heads(self):
        assert is_exhaustive([NIL, CONS(PVar("h"), PVar("t"))], Data("List"), LIST)

    def test_missing_head(self):
        assert not is_exhaustive([CONS(PVar("h"), PVar("t"))], Data("List"), LIST)

    def test_nested(self):
        pats = [NIL, CONS(PVar("x"), NIL), CONS(PVar("x"), CONS(PVar("y"), PVar("r")))]
        assert is_exhaustive(pats, Data("List"), LIST)
        assert not is_exhaustive(pats[:2], Data("List"), LIST)

    def test_opaque_needs_variable(self):
        assert is_exhaustive([PVar("n")], Data("Int"), LIST)


def analyze_text(text, solver=None, **kw):
    return analyze_program(parse_program(text), solver or oracle_cfg(max_n=8), **kw)


class TestAnalysis:
    def test_simple_area_safety_conjunct(self):
        rep = analyze_text(AREA_CORE)
        d = rep.get("simpleArea")
        dom = d.scheme.body.dom.ann
        safety = [c.formula for c in d.scheme.constraint if c.origin is not None]
        assert safety == [sc.subset(dom, Union(sc.App("Square", (TOP,)), sc.App("Circle", (TOP,))))]
        assert dom.name in d.scheme.set_vars

    def test_intmap_result_conjunct(self):
        rep = analyze_text(corpus("intmap.lang"))
        assert rep.all_safe
        found = cons_result_conjuncts(rep.get("intMap").constraint)
        assert found
        v, lhs, w = found[0]
        assert lhs == sc.App("Cons", (TOP, w))

    def test_nullary_constructor(self):
        prog = parse_program("data L = Nil | Cons(L)\nmain = Nil")
        typing = typecheck(prog.data, prog.term)
        ann, cs, _ = analyze_expr({}, sc.TRUE, prog.term.defn, prog.data, typing)
        assert ann == AData("L", sc.App("Nil")) and cs == []

    def test_lambda_tops_the_arrow(self):
        prog = parse_program("data L = Nil\nf = \\x. x")
        typing = typecheck(prog.data, prog.term)
        ann, _, _ = analyze_expr({}, sc.TRUE, prog.term.defn, prog.data, typing)
        assert ann.ann == TOP and ann.dom == ann.cod

    def test_shapes_safe(self):
        rep = analyze_text(corpus("shapes.lang"))
        assert [d.line() for d in rep.definitions] == [
            "times 6:1 Safe", "area 8:1 Safe", "simpleArea 9:7 Safe", "main 18:1 Safe"]
        assert rep.get("simpleArea").solver.is_sat
        assert rep.exit_code() == 0

    def test_triangle_unsafe(self):
        rep = analyze_text(corpus("shapes_triangle.lang"))
        main = rep.get("main")
        assert main.verdict == "Unsafe" and main.unsafe_spans == (Span(10, 29),)
        assert rep.get("simpleArea").verdict == "Safe"
        assert rep.exit_code() == 1
        assert "  match at 10:29 may fail" in rep.lines()

    def test_head(self):
        assert analyze_text(corpus("head_safe.lang")).all_safe
        rep = analyze_text(corpus("head_unsafe.lang"))
        assert rep.get("head").verdict == "Safe" and rep.get("main").verdict == "Unsafe"

    @pytest.mark.parametrize("name", EXHAUSTIVE)
    def test_exhaustive_programs_need_no_solver(self, name):
        rep = analyze_text(corpus(name))
        assert rep.backend_calls == 0 and rep.all_safe
        assert all(d.safety_conjuncts == 0 and d.elided for d in rep.definitions)

    def test_catch_all_has_no_safety_conjunct(self):
        rep = analyze_text("data C = R | G\nf = \\c. match c with { R -> G; x -> R; }")
        assert rep.get("f").safety_conjuncts == 0

    def test_branch_binding_is_narrowed(self):
        rep = analyze_text(corpus("intmap.lang"))
        text = format_formula(rep.get("intMap").constraint)
        assert "(proj Cons 2 (inter (var V7) (neg Nil)))" in text

    def test_unknown_is_never_safe(self):
        rep = analyze_text(corpus("head_unsafe.lang"), oracle_cfg(max_n=1))
        assert rep.get("main").verdict == "Unknown" and rep.exit_code() == 2
        assert any("solver gave up" in line for line in rep.lines())

    def test_approximate_projections(self):
        rep = analyze_text(corpus("head_safe.lang"), approx_proj=True)
        assert rep.all_safe

    def test_path_constraint_blocks_unreachable_failure(self):
        text = """\
data B = T | F
data L = Nil | Cons(B, L)
head = \\l. match l with { Cons(x, r) -> x; }
safeHead = \\l. match l with { Nil -> F; other -> head l; }
main = safeHead Nil
"""
        assert analyze_text(text, oracle_cfg(max_n=12)).all_safe

    @pytest.mark.parametrize("name", CORPUS)
    def test_erasure_matches_typing(self, name):
        prog = parse_program(corpus(name))
        typing = typecheck(prog.data, prog.term)
        az = Analyzer(prog.data, typing, oracle_cfg(max_n=8), check=False)
        az.analyze({}, sc.TRUE, prog.term)
        assert az.node_types
        for nid, ann in az.node_types.items():
            assert erase(ann) == typing.types[nid]

    @pytest.mark.parametrize("name", CORPUS)
    def test_deterministic(self, name):
        a, b = analyze_text(corpus(name)), analyze_text(corpus(name))
        assert a.lines() == b.lines()
        assert [format_formula(d.constraint) for d in a.definitions] == \
               [format_formula(d.constraint) for d in b.definitions]

    @pytest.mark.parametrize("name", CORPUS)
    def test_generalized_variables_are_not_shared(self, name):
        rep = analyze_text(corpus(name))
        binders = [v for d in rep.definitions for v in d.scheme.set_vars]
        assert len(binders) == len(set(binders))

    def test_signature_adds_opaque_constant(self):
        assert "opaque" in program_signature(LIST)
        prog = parse_program("data N = Z | S(N)\nmain = S(Z)")
        rep = analyze_program(prog)
        assert "opaque" not in rep.signature

    @needs_z3
    def test_z3_agrees_on_shapes(self):
        assert analyze_text(corpus("shapes.lang"), z3_cfg()).all_safe
        rep = analyze_text(corpus("shapes_triangle.lang"), z3_cfg())
        assert rep.get("main").verdict == "Unsafe"


@needs_z3
def test_polymorphic_use_in_recursion_is_reported_unsafe():
    # intMap's recursive call sees its own monomorphic annotation, so the
    # result of intMap is only known to be Nil-or-Cons and head rejects it
    text = corpus("intmap.lang").replace(
        "main = intMap inc (Cons(1, Cons(2, Nil)))",
        "head = \\l. match l with { Cons(x, r) -> x; }\n\n"
        "main = head (intMap inc (Cons(1, Cons(2, Nil))))")
    rep = analyze_text(text, z3_cfg())
    assert rep.get("intMap").verdict == "Safe"
    assert rep.get("main").verdict == "Unsafe"
