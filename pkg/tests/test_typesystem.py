import json

import pytest
from hypothesis import assume, given, settings, strategies as st

from lmd.kernel import (
    Bracket, Code, Entry, StageApp, StageLam, ForallStage, KPi, STAR, Signature, Star, alpha_eq, free_stage_vars,
    subst_stage, subst_term,
)
from lmd.surface import parse_signature, pretty
from lmd.testkit import inhabit
from lmd.typesystem import (
    JUDGMENT_FORMS, Checker, Derivation, InvalidDerivation, LmdTypeError, NotEquivalent,
    Typing, percent_erase, validate,
)

from conftest import SIG, term, ty
from strategies import typed_cases


def env(*entries):
    return tuple(Entry(x, ty(t), tuple(s)) for x, t, s in entries)


# ---------------------------------------------------------------- signatures, envs, kinds


def test_eight_judgment_forms():
    assert len(JUDGMENT_FORMS) == 8


def test_bool_signature():
    sig = parse_signature("type Bool :: *; const true : Bool; const false : Bool;")
    d = Checker(sig).wf_signature()
    assert d.rule == "Sig-Const" and list(d.rules()).count("Sig-Const") == 2


def test_empty_signature():
    assert Checker(Signature()).wf_signature().rule == "Sig-Empty"


def test_vector_needs_int():
    ok = parse_signature("type Int :: *; type Vector :: Pi n:Int. *;")
    Checker(ok).wf_signature()
    bad = parse_signature("type Vector :: Pi n:Int. *;")
    with pytest.raises(LmdTypeError):
        Checker(bad).wf_signature()


def test_duplicate_declaration():
    with pytest.raises(LmdTypeError, match="duplicate"):
        Checker(parse_signature("type Int :: *; type Int :: *;")).wf_signature()


def test_environments(checker):
    assert checker.wf_env(()).rule == "Env-Empty"
    checker.wf_env(env(("x", "Int", ()), ("y", "Vector x", ())))
    with pytest.raises(LmdTypeError):
        checker.wf_env((Entry("x", ty("Int"), ("a",)), Entry("y", ty("Vector x"), ())))
    with pytest.raises(LmdTypeError, match="duplicate"):
        checker.wf_env(env(("x", "Int", ()), ("x", "Int", ())))


def test_kinds(checker):
    assert checker.wf_kind((), Star(), ("a", "b")).rule == "W-Star"
    assert checker.wf_kind((), KPi("x", ty("Int"), STAR), ()).rule == "W-Abs"
    with pytest.raises(LmdTypeError):
        checker.wf_kind((), KPi("x", ty("Vector y"), STAR), ())


def test_vector_kinding_by_stage(checker):
    gamma = env(("x", "Int", ()))
    assert checker.infer_kind(gamma, ty("Vector x"), ())[0] == STAR
    with pytest.raises(LmdTypeError):
        checker.infer_kind(gamma, ty("Vector x"), ("a",))
    assert checker.infer_kind(gamma, ty("Vector (%a x)"), ("a",))[0] == STAR


def test_constant_index_kinds_at_every_stage(checker):
    for stage in [(), ("a",), ("a", "b")]:
        kind, d = checker.infer_kind((), ty("Vector 3"), stage)
        assert kind == STAR


def test_vector_partial_application_kind(checker):
    kind, _ = checker.infer_kind((), ty("Vector"), ())
    assert isinstance(kind, KPi)


# ---------------------------------------------------------------- typing


def test_variable_stage(checker):
    gamma = env(("y", "Int", ("a",)))
    t, _ = checker.infer_type(gamma, term(r"\x:Int. y"), ("a",))
    assert pretty(t) == "Int -> Int"
    with pytest.raises(LmdTypeError) as info:
        checker.infer_type(gamma, term(r"\x:Int. y"), ())
    assert info.value.rule == "T-Var"
    assert "a" in info.value.message and "ε" in info.value.message
    assert info.value.stack and "y" in info.value.stack[0]


def test_bracket_and_escape(checker):
    t, d = checker.infer_type((), term("|>a 3"), ())
    assert t == Code("a", ty("Int")) and d.rule == "T-TB"
    t, d = checker.infer_type(env(("v", "|>a Int", ())), term("<|a v"), ("a",))
    assert t == ty("Int") and d.rule == "T-TBL"
    with pytest.raises(LmdTypeError):
        checker.infer_type(env(("v", "|>a Int", ())), term("<|b v"), ("a",))


def test_csp_lifts_a_constant(checker):
    t, d = checker.infer_type((), term("%a add"), ("a",))
    assert pretty(t) == "Int -> Int -> Int" and d.rule == "T-Csp"
    with pytest.raises(LmdTypeError):
        checker.infer_type((), term("%a 1"), ())


def test_generalize_and_run(checker):
    t, d = checker.infer_type((), term(r"/\a. |>a 1"), ())
    assert isinstance(t, ForallStage) and d.rule == "T-Gen"
    t, d = checker.infer_type((), term(r"(/\a. |>a 1) @[]"), ())
    assert t == ty("Int") and d.rule == "T-Ins"
    with pytest.raises(LmdTypeError):
        checker.infer_type((), term("1 @[]"), ())


def test_generalization_freshness(checker):
    # the bound name clashes with the current stage; the checker renames it
    t, _ = checker.infer_type((), term(r"/\a. |>a 1"), ("a",))
    assert isinstance(t, ForallStage) and t.sv != "a"


def test_application_errors(checker):
    with pytest.raises(LmdTypeError):
        checker.infer_type((), term("1 2"), ())
    with pytest.raises(LmdTypeError):
        checker.infer_type((), term(r"(\x:Int. x) true"), ())
    with pytest.raises(LmdTypeError):
        checker.infer_type((), term("zz"), ())


def test_conversion_on_index_arithmetic(checker):
    d = checker.check_type((), term("cons 4 1 (cons 3 2 (cons 2 3 (cons 1 4 (cons 0 5 nil))))"),
                           ty("Vector 5"), ())
    assert d.rule == "T-Conv"


def test_vadd_at_literal_size(checker):
    from lmd.cli import Session
    from lmd.prelude import corpus_path
    s = Session.create(prelude=True)
    with open(corpus_path("vadd-unrolled.lmd")) as fh:
        s.load(fh.read())
    vadd = s.defs["vadd3"].term
    t, _ = checker.infer_type((), StageApp(vadd, ()), ())
    checker.equiv_type((), t, ty("Vector 3 -> Vector 3 -> Vector 3"), STAR, ())


# ---------------------------------------------------------------- equivalence


def test_equivalences(checker):
    assert checker.equiv_type((), ty("Vector 5"), ty("Vector 5"), STAR, ("a",)).rule == "QT-Refl"
    d = checker.equiv_type((), ty("Vector (add 2 3)"), ty("Vector 5"), STAR, ())
    assert "Q-Delta" in d.rules()
    d = checker.equiv_type((), ty("Vector (%g 5)"), ty("Vector 5"), STAR, ("g",))
    assert "Q-Percent" in d.rules()
    d = checker.equiv_term((), term(r"(/\a. |>a 1) @[]"), term("1"), ty("Int"), ())
    assert "Q-Lambda" in d.rules()
    d = checker.equiv_term((), term("<|a |>a 3"), term("3"), ty("Int"), ("a",))
    assert "Q-TBLTB" in d.rules()


def test_not_equivalent_reports_mismatch(checker):
    with pytest.raises(NotEquivalent) as info:
        checker.equiv_type((), ty("Int -> Vector 4"), ty("Int -> Vector 5"), STAR, ())
    assert (pretty(info.value.left), pretty(info.value.right)) == ("4", "5")


def test_variable_csp_is_not_erased(checker):
    gamma = env(("x", "Int", ()))
    with pytest.raises(NotEquivalent):
        checker.equiv_type(gamma, ty("Vector (%a x)"), ty("Vector x"), STAR, ("a",))


@pytest.mark.parametrize("before,after", [
    ("%a 5", "5"),
    ("%a x", "%a x"),
    ("%b (%a 5)", "5"),
    ("%a (add 1 2)", "add 1 2"),
    ("%a (<|a y)", "%a (<|a y)"),
    ("%a (|>b 2)", "|>b 2"),
])
def test_percent_erase(before, after):
    assert percent_erase(term(before)) == term(after)


# ---------------------------------------------------------------- derivations


def test_derivation_json(checker):
    _, d = checker.infer_type((), term(r"(\x:Int. x) 1"), ())
    js = json.loads(json.dumps(d.to_json()))
    assert js["rule"] == "T-App" and set(js) >= {"rule", "conclusion", "premises"}
    assert js["conclusion"] == "∅ ⊢ (\\x:Int. x) 1 : Int @ ε"


def test_validator_rejects_tampering(checker):
    _, d = checker.infer_type((), term(r"\x:Int. x"), ())
    validate(d, checker)
    bad = Derivation(d.rule, Typing((), term(r"\x:Int. x"), ty("Int -> Bool"), ()), d.premises)
    with pytest.raises(InvalidDerivation):
        validate(bad, checker)
    with pytest.raises(InvalidDerivation):
        validate(Derivation("T-Var", d.conclusion, d.premises), checker)


# ---------------------------------------------------------------- properties


@settings(max_examples=200, deadline=None)
@given(typed_cases)
def test_derivations_validate(case):
    ck = Checker(SIG, delta=True)
    _, d = ck.infer_type(case.env, case.term, case.stage)
    assert validate(d, ck) >= 1


@settings(max_examples=200, deadline=None)
@given(typed_cases)
def test_agreement(case):
    ck = Checker(SIG, delta=True)
    t, _ = ck.infer_type(case.env, case.term, case.stage)
    assert ck.infer_kind(case.env, t, case.stage)[0] == STAR


@settings(max_examples=150, deadline=None)
@given(typed_cases, st.sampled_from([("Int", ()), ("Bool", ("b",)), ("|>a Int", ("a",))]))
def test_weakening(case, extra):
    ck = Checker(SIG, delta=True)
    t, _ = ck.infer_type(case.env, case.term, case.stage)
    for i in range(len(case.env) + 1):
        wider = case.env[:i] + (Entry("unused", ty(extra[0]), extra[1]),) + case.env[i:]
        t2, _ = ck.infer_type(wider, case.term, case.stage)
        assert alpha_eq(t, t2)


@settings(max_examples=150, deadline=None)
@given(typed_cases)
def test_term_substitution(case):
    assume(case.env)
    ck = Checker(SIG, delta=True)
    z = case.env[-1]
    rest = case.env[:-1]
    value = inhabit(SIG, rest, z.type, z.stage)
    ck.check_type(rest, value, z.type, z.stage)
    t2, _ = ck.infer_type(rest, subst_term(case.term, z.var, value), case.stage)
    ck.equiv_type(rest, t2, subst_term(case.type, z.var, value), STAR, case.stage)


@settings(max_examples=150, deadline=None)
@given(typed_cases, st.sampled_from([(), ("c",), ("b", "c")]))
def test_stage_substitution(case, rep):
    ck = Checker(SIG, delta=True)
    for a in sorted(free_stage_vars(case.term) | set(case.stage) | {"a"}):
        gamma = subst_stage(case.env, a, rep)
        m = subst_stage(case.term, a, rep)
        stage = subst_stage(case.stage, a, rep)
        t2, _ = ck.infer_type(gamma, m, stage)
        ck.equiv_type(gamma, t2, subst_stage(case.type, a, rep), STAR, stage)


@settings(max_examples=150, deadline=None)
@given(typed_cases)
def test_inversion(case):
    ck = Checker(SIG, delta=True)
    if case.stage:
        *outer, a = case.stage
        wrapped = Bracket(a, case.term)
        t, _ = ck.infer_type(case.env, wrapped, tuple(outer))
        assert isinstance(t, Code) and t.sv == a
        ck.equiv_type(case.env, t.body, case.type, STAR, case.stage)
    elif not case.env:
        t, _ = ck.infer_type((), StageLam("q", case.term), ())
        assert isinstance(t, ForallStage)
