from hypothesis import given, settings, strategies as st

from lmd.kernel import (
    App, Bracket, Code, Const, Csp, Entry, Escape, INT, Lam, Pi, StageApp, StageLam,
    TApp, TConst, Var, alpha_eq, free_stage_vars, free_vars, rename_apart, size,
    spine, subst_stage, subst_term,
)
from lmd.prelude import corpus_path, prelude_signature
from lmd.surface import load_source

from conftest import term
from strategies import raw_terms, raw_types, stages, svars, names


def test_subst_term_hits_free_occurrence():
    assert subst_term(Var("x"), "x", Const("c")) == Const("c")


def test_subst_term_respects_shadowing():
    lam = Lam("x", INT, Var("x"))
    assert subst_term(lam, "x", Const("c")) == lam


def test_subst_term_contracts_identity_application():
    redex = term(r"(\x:Int. x) 1")
    assert subst_term(redex.fun.body, "x", redex.arg) == Const("1")


def test_subst_term_avoids_capture():
    out = subst_term(Lam("y", INT, App(Var("x"), Var("y"))), "x", Var("y"))
    assert free_vars(out) == {"y"}
    assert not alpha_eq(out, Lam("y", INT, App(Var("y"), Var("y"))))


def test_subst_term_into_type_and_environment():
    vec = TApp(TConst("Vector"), Var("n"))
    assert subst_term(Pi("x", INT, vec), "n", Const("3")) == Pi("x", INT, TApp(TConst("Vector"), Const("3")))
    env = (Entry("v", vec, ()),)
    assert subst_term(env, "n", Const("2"))[0].type == TApp(TConst("Vector"), Const("2"))


def test_subst_stage_expands_bracket_left_to_right():
    assert subst_stage(Bracket("a", Var("x")), "a", ("b", "c")) == Bracket("b", Bracket("c", Var("x")))


def test_subst_stage_expands_escape_in_reverse():
    assert subst_stage(Escape("a", Var("x")), "a", ("b", "c")) == Escape("c", Escape("b", Var("x")))


def test_subst_stage_epsilon_erases_operators():
    assert subst_stage(Csp("a", Var("x")), "a", ()) == Var("x")
    assert subst_stage(Code("a", INT), "a", ()) == INT
    assert subst_stage(StageApp(Var("f"), ("a", "b")), "a", ()) == StageApp(Var("f"), ("b",))


def test_subst_stage_on_stage_and_environment():
    assert subst_stage(("a", "b", "a"), "a", ("c", "d")) == ("c", "d", "b", "c", "d")
    env = (Entry("y", Code("a", INT), ("a",)),)
    assert subst_stage(env, "a", ()) == (Entry("y", INT, ()),)


def test_subst_stage_avoids_capture():
    out = subst_stage(StageLam("b", Bracket("a", Bracket("b", Var("x")))), "a", ("b",))
    assert free_stage_vars(out) == {"b"}
    assert out.sv != "b"


def test_alpha_eq_examples():
    assert alpha_eq(term(r"\x:Int. x"), term(r"\y:Int. y"))
    assert alpha_eq(term(r"/\a. |>a x"), term(r"/\b. |>b x"))
    assert not alpha_eq(term(r"\x:Int. x"), term(r"\x:Bool. x"))
    assert not alpha_eq(term(r"/\a. |>a x"), term(r"/\b. |>a x"))


def test_free_variable_examples():
    assert free_vars(term(r"\x:Int. x y")) == {"y"}
    assert free_stage_vars(StageLam("a", Bracket("a", Csp("b", Var("x"))))) == {"b"}
    assert free_stage_vars(term(r"f @[a b]")) == {"a", "b"}


def test_unrolled_vector_addition_is_closed():
    with open(corpus_path("vadd-unrolled.lmd")) as fh:
        _, sf = load_source(fh.read(), "vadd", prelude_signature())
    main = sf.main.value
    assert free_vars(main) == set() and free_stage_vars(main) == set()


def test_spine():
    head, args = spine(term("f @[a] 1 2"))
    assert head == Var("f") and args == [("a",), Const("1"), Const("2")]


@given(raw_terms)
def test_renaming_apart_is_alpha_equivalent(t):
    assert alpha_eq(t, rename_apart(t))


@given(raw_terms, names, raw_terms)
def test_subst_term_commutes_with_alpha(t, x, n):
    assert alpha_eq(subst_term(t, x, n), subst_term(rename_apart(t), x, n))


@given(raw_terms, raw_terms)
def test_substitution_removes_the_variable(t, n):
    if "x" not in free_vars(n):
        assert "x" not in free_vars(subst_term(t, "x", n))


@given(raw_terms, svars, stages)
def test_subst_stage_of_absent_variable_is_identity(t, a, rep):
    if a not in free_stage_vars(t):
        assert alpha_eq(subst_stage(t, a, rep), t)


@given(st.one_of(raw_terms, raw_types), svars)
def test_subst_stage_epsilon_never_grows(t, a):
    assert size(subst_stage(t, a, ())) <= size(t)


@settings(max_examples=300)
@given(raw_terms, stages, stages)
def test_stage_substitution_composition(t, rep_a, rep_b):
    a, b = "a", "b"
    if a in rep_b:
        return
    left = subst_stage(subst_stage(t, a, rep_a), b, rep_b)
    right = subst_stage(subst_stage(t, b, rep_b), a, subst_stage(rep_a, b, rep_b))
    assert alpha_eq(left, right)


@given(raw_terms, raw_terms)
def test_alpha_eq_is_symmetric(s, t):
    assert alpha_eq(s, t) == alpha_eq(t, s)
