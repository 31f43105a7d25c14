import pytest
from hypothesis import given, settings, strategies as st

from lmd.kernel import (
    App, Bracket, Code, Const, ForallStage, INT, KPi, Lam, Pi, STAR, StageLam, TApp,
    TConst, TypeConstDecl, ConstDecl, Var, alpha_eq,
)
from lmd.surface import (
    Diagnostic, ParseError, Span, load_source, parse_decls, parse_kind, parse_signature,
    parse_term, parse_type, pretty,
)

from conftest import CONSTS, term, ty
from strategies import raw_terms, raw_types, typed_cases


def add(a, b):
    return App(App(Const("add"), a), b)


def test_stage_abstraction_over_quoted_application():
    got = term(r"\a. |>a ((\x:Int. x + 10) 5)")
    want = StageLam("a", Bracket("a", App(Lam("x", INT, add(Var("x"), Const("10"))), Const("5"))))
    assert got == want


def test_forall_extends_over_code_type():
    want = ForallStage("a", Code("a", Pi("x", INT, TApp(TConst("Vector"), Const("5")))))
    assert ty("forall a. |>a (Pi x:Int. Vector 5)") == want


def test_binders_extend_to_the_right():
    # the bracket binds only x; the application to y stays inside the lambda body
    got = term(r"/\a. \x:Int. |>a x y")
    assert got == StageLam("a", Lam("x", INT, App(Bracket("a", Var("x")), Var("y"))))


def test_infix_precedence_and_associativity():
    assert term("1 + 2 * 3") == add(Const("1"), App(App(Const("mul"), Const("2")), Const("3")))
    sub = lambda a, b: App(App(Const("sub"), a), b)
    assert term("5 - 2 - 1") == sub(sub(Const("5"), Const("2")), Const("1"))
    assert term("1 + 1 = 2") == App(App(Const("eq"), add(Const("1"), Const("1"))), Const("2"))


def test_prefix_operators_bind_tighter_than_application():
    assert term("%a f 1") == App(parse_term("%a f"), Const("1"))


def test_stage_application_forms():
    assert term("f @[]").stage == ()
    assert term("f @[a b c]").stage == ("a", "b", "c")


def test_kinds():
    assert parse_kind("*") == STAR
    assert parse_kind("Pi n:Int. *") == KPi("n", INT, STAR)
    assert isinstance(parse_kind("Int -> *"), KPi)


def test_pretty_round_trip_examples():
    assert pretty(term(r"(\x:Int. x) 1")) == r"(\x:Int. x) 1"
    assert pretty(ty("Pi x:Int. Int")) == "Int -> Int"
    assert pretty(ty("Pi n:Int. Vector n")) == "Pi n:Int. Vector n"
    assert pretty(parse_term("|>a <|a m")) == "|>a <|a m"
    assert pretty(term("1 + 2 * 3")) == "1 + 2 * 3"
    assert pretty(term("(1 + 2) * 3")) == "(1 + 2) * 3"


def test_signature_file():
    sig = parse_signature("type Bool :: *; const true : Bool; const false : Bool;")
    assert sig.decls == (TypeConstDecl("Bool", STAR), ConstDecl("true", TConst("Bool")),
                         ConstDecl("false", TConst("Bool")))
    assert "type Bool :: *;" in pretty(sig)


def test_load_source_inlines_definitions():
    sig, sf = load_source("type Int :: *; def one = 1; main = (\\x:Int. x) one;")
    assert sf.main.value == App(Lam("x", INT, Var("x")), Const("1"))
    assert [d.kind for d in sf.decls] == ["type", "def", "main"]


def test_comments_are_ignored():
    assert parse_decls("-- nothing here\nmain = 0; -- trailing\n")[0].value == Const("0")


@pytest.mark.parametrize("text", ["(1 + 2", r"\x:Int x", "f @[a", "1 $ 2", "/\\. x", ")"])
def test_parse_errors_carry_spans(text):
    with pytest.raises(ParseError) as info:
        parse_term(text)
    span = info.value.span
    assert isinstance(span, Span) and span.line == 1 and 1 <= span.col <= len(text) + 1


def test_diagnostic_rendering():
    d = Diagnostic("error", Span(3, 7), "T-Var: stage mismatch", ("frame one",))
    assert d.render("f.lmd") == "f.lmd:3:7: error: T-Var: stage mismatch\n    in frame one"


@settings(max_examples=400)
@given(raw_terms)
def test_parse_inverts_pretty_on_terms(t):
    text = pretty(t)
    back = parse_term(text, CONSTS)
    assert alpha_eq(back, t)
    assert pretty(back) == text


@settings(max_examples=300)
@given(raw_types)
def test_parse_inverts_pretty_on_types(t):
    back = parse_type(pretty(t), CONSTS)
    assert alpha_eq(back, t)


@settings(max_examples=200, deadline=None)
@given(typed_cases)
def test_parse_inverts_pretty_on_generated_terms(case):
    assert alpha_eq(parse_term(pretty(case.term), CONSTS), case.term)


@settings(max_examples=10_000, deadline=None)
@given(st.text(alphabet="\\/|<>%@[]():.*+-=; xyabInt0123PiforallVector\n", max_size=40))
def test_parser_never_crashes(text):
    try:
        parse_term(text, CONSTS)
    except ParseError as err:
        assert err.span is not None
        assert err.span.line <= text.count("\n") + 1


@settings(max_examples=500)
@given(st.binary(max_size=60))
def test_parser_survives_arbitrary_bytes(data):
    text = data.decode("utf-8", errors="replace")
    try:
        parse_decls(text)
    except ParseError as err:
        assert err.span is not None
