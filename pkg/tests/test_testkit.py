from collections import Counter
from dataclasses import replace

import pytest

from lmd.kernel import Entry, Lam, StageApp, alpha_eq, children, size
from lmd.reduction import ValueJudgment, decompose, is_value
from lmd.surface import pretty
from lmd.testkit import (
    GenConfig, GeneratedCase, gen_cases, gen_typed, inhabit, oracle_decompose_all,
    oracle_is_value, shrink, sn_check, staged_steps_in_full,
)
from lmd.testkit.suites import SUITES, run_suite
from lmd.typesystem import Checker

from conftest import SIG, term, ty

FORMERS = ("Const", "Var", "Lam", "App", "Bracket", "Escape", "StageLam", "StageApp", "Csp")


def _count(node, acc):
    acc[type(node).__name__] += 1
    for c in children(node):
        _count(c, acc)


def test_every_term_former_is_generated():
    acc = Counter()
    for case in gen_cases(1000, seed=0):
        _count(case.term, acc)
    assert {f: acc[f] for f in FORMERS if acc[f] < 20} == {}


def test_run_with_empty_stage_is_generated():
    acc = Counter()
    for case in gen_cases(300, seed=1):
        stack = [case.term]
        while stack:
            n = stack.pop()
            if isinstance(n, StageApp) and n.stage == ():
                acc["run"] += 1
            stack.extend(x for x in children(n) if not isinstance(x, tuple))
    assert acc["run"] >= 20


def test_generation_is_deterministic():
    assert gen_typed(GenConfig(seed=42)) == gen_typed(GenConfig(seed=42))
    assert gen_cases(5, seed=3) == gen_cases(5, seed=3)


def test_generated_cases_check():
    ck = Checker(SIG, delta=True)
    for case in gen_cases(100, seed=7):
        got, _ = ck.infer_type(case.env, case.term, case.stage)
        ck.equiv_type(case.env, got, case.type, None, case.stage)


def test_depth_one_applies_a_single_rule():
    for seed in range(40):
        case = gen_typed(GenConfig(seed=seed, max_depth=1))
        assert set(case.trace[1:]) <= {"inhabit", "const", "var"}


def test_environment_modes():
    for seed in range(20):
        assert gen_typed(GenConfig(seed=seed, env_mode="closed")).env == ()
        staged = gen_typed(GenConfig(seed=seed, env_mode="staged"))
        assert all(e.stage != () for e in staged.env)
        assert gen_typed(GenConfig(seed=seed, target_stage=())).stage == ()


@pytest.mark.parametrize("bad", [
    {"max_depth": 0}, {"weights": {"lam": -1}}, {"stage_pool": ("a", "b", "c")}, {"env_mode": "open"},
])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        GenConfig(**bad)


def test_inhabit():
    ck = Checker(SIG, delta=True)
    for text, stage in [("Vector 3", ()), ("|>a (Int -> Bool)", ()), ("forall b. |>b Int", ("a",))]:
        m = inhabit(SIG, (), ty(text), stage)
        ck.check_type((), m, ty(text), stage)


# ---------------------------------------------------------------- oracles


def test_oracle_on_value():
    assert oracle_decompose_all(term(r"\x:Int. x")) == []
    assert oracle_is_value(term(r"\x:Int. x"), ())


def test_oracle_on_staged_example():
    m = term(r"(/\a. |>a <|a |>a ((\x:Int. x) 10)) @[]")
    found = oracle_decompose_all(m)
    assert found == [decompose(m)]


def test_oracle_on_stuck_term():
    m = term("x 1")
    assert oracle_decompose_all(m) == [] and not oracle_is_value(m, ())


def test_oracle_independent_of_reduction_decompose():
    import lmd.testkit.oracles as oracles
    source = open(oracles.__file__).read()
    assert "decompose(" not in source.replace("oracle_decompose_all(", "")
    assert "is_value" not in source.replace("oracle_is_value", "")


def test_oracle_value_agrees_with_reduction():
    for case in gen_cases(200, seed=11):
        assert oracle_is_value(case.term, case.stage, False) == is_value(case.term, case.stage)


# ---------------------------------------------------------------- shrinking and budgets


def _has_lambda(case):
    stack = [case.term]
    while stack:
        n = stack.pop()
        if isinstance(n, Lam):
            return True
        stack.extend(x for x in children(n) if not isinstance(x, tuple))
    return False


def test_shrinker_preserves_failure_and_type():
    ck = Checker(SIG, delta=True)
    shrunk_any = False
    for case in gen_cases(40, seed=5):
        if not _has_lambda(case):
            continue
        small = shrink(case, _has_lambda, ck)
        assert _has_lambda(small) and size(small.term) <= size(case.term)
        got, _ = ck.infer_type(small.env, small.term, small.stage)
        ck.equiv_type(small.env, got, small.type, None, small.stage)
        shrunk_any |= size(small.term) < size(case.term)
    assert shrunk_any


def test_shrinker_without_failure_is_identity():
    ck = Checker(SIG, delta=True)
    case = gen_typed(GenConfig(seed=9))
    assert shrink(case, lambda c: alpha_eq(c.term, case.term), ck) == case


def test_sn_budget_path():
    # self-application cannot be typed; this term is never handed to the checker
    omega = term(r"(\x:Int. x x) (\x:Int. x x)")
    assert "within 1000 steps" in sn_check(omega, budget=1000)


def test_sn_check_passes_on_example():
    assert sn_check(term(r"(\f:Int->Int. (/\a. |>a (%a f 1 + <|a |>a 3)) @[]) (\x:Int. x)")) is None


def test_staged_subset_on_example():
    steps, missing = staged_steps_in_full(term(r"(/\a. |>a <|a |>a ((\x:Int. x) 10)) @[]"))
    assert len(steps) == 3 and missing == []


# ---------------------------------------------------------------- suites


@pytest.mark.parametrize("name", sorted(SUITES))
def test_suites_pass_on_small_runs(name):
    report = SUITES[name](20, seed=3)
    assert report.ok, [c.render() for c in report.counterexamples]
    assert report.summary() == f"suite={name} pass=20 fail=0 seed=3"


def test_failing_property_is_reported_with_minimized_case():
    report = run_suite("lambda-free", lambda c, ck: "has a lambda" if _has_lambda(c) else None, 15, seed=2)
    assert report.failed > 0 and report.passed + report.failed == 15
    cx = report.counterexamples[0]
    assert _has_lambda(cx.minimized) and size(cx.minimized.term) <= size(cx.case.term)
    assert "minimized:" in cx.render()


def test_suite_rejects_nonpositive_count():
    with pytest.raises(ValueError):
        run_suite("x", lambda c, ck: None, 0)
