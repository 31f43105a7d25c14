"""Property suites for the metatheory: each runs a property over generated cases.

Failures are collected with a greedily shrunk counterexample rather than
raised.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

from ..kernel import (
    App, Bracket, Csp, Entry, Escape, Lam, StageApp, StageLam, Var, alpha_eq,
    children, free_stage_vars, free_vars, replace_at, size,
)
from ..natural import (
    StlcTypeError, nat_env, nat_signature, nat_term, nat_type, stlc_alpha_eq,
    stlc_check, stlc_contracta, stlc_normalize,
)
from ..prelude import prelude_signature
from ..reduction import (
    RuleTag, StepBudgetExceeded, Stuck, ValueJudgment, decompose, enumerate_redexes,
    normalize, step_staged,
)
from ..surface import pretty
from ..typesystem import Checker, LmdTypeError
from .generator import GenConfig, GeneratedCase, gen_typed, inhabit
from .oracles import oracle_decompose_all, oracle_is_value


# The calculus proper has no delta rules, so the suites reduce without them.
# The checker still uses them to compare arithmetic inside vector indices.
REDUCTION_DELTA = False


@dataclass
class Counterexample:
    case: GeneratedCase
    minimized: GeneratedCase
    message: str

    def render(self) -> str:
        return (f"seed: {self.case.seed}\nmessage: {self.message}\n"
                f"stage: {self.case.stage}\nterm: {pretty(self.case.term)}\n"
                f"type: {pretty(self.case.type)}\nminimized: {pretty(self.minimized.term)}\n")


@dataclass
class SuiteReport:
    name: str
    seed: int
    passed: int = 0
    failed: int = 0
    counterexamples: list = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def ok(self) -> bool:
        return self.failed == 0

    def summary(self) -> str:
        return f"suite={self.name} pass={self.passed} fail={self.failed} seed={self.seed}"


def _checker(case_sig=None) -> Checker:
    return Checker(case_sig or prelude_signature(), delta=True)


def _equiv(ck, env, got, want, stage) -> bool:
    try:
        ck.equiv_type(env, got, want, None, stage)
        return True
    except LmdTypeError:
        return False


# ---------------------------------------------------------------- properties


def prop_preservation(case: GeneratedCase, ck: Checker, path_budget: int = 200) -> Optional[str]:
    """Every one-step reduct of the term, and of each term on its normalization path, re-checks."""
    m = case.term
    for _ in range(path_budget):
        steps = enumerate_redexes(m, delta=REDUCTION_DELTA)
        if not steps:
            return None
        for s in steps:
            try:
                got, _ = ck.infer_type(case.env, s.after, case.stage)
            except LmdTypeError as err:
                return f"{s.rule.value}-reduct at {s.path} ill-typed: {err}"
            if not _equiv(ck, case.env, got, case.type, case.stage):
                return f"{s.rule.value}-reduct at {s.path} has inequivalent type {pretty(got)}"
        m = steps[0].after
    return None


def prop_confluence(case: GeneratedCase, ck: Checker, seeds=(1, 2, 3)) -> Optional[str]:
    base, _ = normalize(case.term, "leftmost-outermost", ck.max_steps, delta=REDUCTION_DELTA)
    for s in seeds:
        rng = random.Random(f"{case.seed}:{s}")
        other, _ = normalize(case.term, rng, ck.max_steps, delta=REDUCTION_DELTA)
        if not alpha_eq(base, other):
            return f"normal forms differ: {pretty(base)} vs {pretty(other)} (strategy seed {s})"
    return None


def sn_measure(m) -> tuple:
    """Lexicographic measure that every non-beta step must decrease."""
    counts = [0, 0, 0]

    def walk(n):
        counts[2] += 1
        if isinstance(n, StageLam):
            counts[0] += 1
        elif isinstance(n, (Bracket, Escape)):
            counts[1] += 1
        for c in children(n):
            walk(c)

    walk(m)
    return tuple(counts)


def sn_check(term, budget: int = 100_000, strategy="leftmost-outermost") -> Optional[str]:
    """Normalize within ``budget`` steps and audit every step against the STLC image."""
    try:
        _, steps = normalize(term, strategy, budget, delta=REDUCTION_DELTA)
    except StepBudgetExceeded:
        return f"no normal form within {budget} steps"
    stlc_steps = 0
    for s in steps:
        before, after = nat_term(s.before), nat_term(s.after)
        if s.rule is RuleTag.BETA:
            if not any(stlc_alpha_eq(c, after) for c in stlc_contracta(before)):
                return f"beta step at {s.path} is not matched by an STLC beta step"
            stlc_steps += 1
            continue
        if s.rule is not RuleTag.DELTA and not stlc_alpha_eq(before, after):
            return f"{s.rule.value} step at {s.path} changes the STLC image"
        if not sn_measure(s.after) < sn_measure(s.before):
            return f"{s.rule.value} step at {s.path} does not decrease the measure"
    betas = sum(s.rule is RuleTag.BETA for s in steps)
    if betas > stlc_steps:
        return "more beta steps than STLC steps"
    return None


def prop_sn(case: GeneratedCase, ck: Checker, budget: int = 100_000) -> Optional[str]:
    msg = sn_check(case.term, budget)
    if msg is not None:
        return msg
    try:
        stlc_normalize(nat_term(case.term), budget)
    except RuntimeError as err:
        return f"STLC image diverges: {err}"
    return None


def prop_natural(case: GeneratedCase, ck: Checker) -> Optional[str]:
    env = {**nat_signature(ck.signature), **nat_env(case.env)}
    try:
        got = stlc_check(env, nat_term(case.term))
    except StlcTypeError as err:
        return f"STLC rejects the image: {err}"
    want = nat_type(case.type)
    if got != want:
        return f"STLC type {got} differs from image type {want}"
    return None


def prop_decomposition(case: GeneratedCase, ck: Checker, steps: int = 60) -> Optional[str]:
    """Unique decomposition agrees with the oracle, at the term and along its staged run."""
    if any(e.stage == () for e in case.env):
        return "environment declares a variable at stage epsilon"
    m = case.term
    for _ in range(steps):
        try:
            d = decompose(m, case.stage, delta=REDUCTION_DELTA)
        except Stuck as err:
            return f"decompose stuck: {err}"
        found = oracle_decompose_all(m, case.stage, delta=REDUCTION_DELTA)
        if isinstance(d, ValueJudgment):
            if found or not oracle_is_value(m, case.stage, REDUCTION_DELTA):
                return f"decompose says value, oracle found {len(found)} decompositions"
            return None
        if len(found) != 1:
            return f"oracle found {len(found)} decompositions of {pretty(m)}"
        o = found[0]
        if (o.path, o.rule, o.hole_stage) != (d.path, d.rule, d.hole_stage):
            return f"decompose chose {d.rule.value} at {d.path}, oracle {o.rule.value} at {o.path}"
        if oracle_is_value(m, case.stage, REDUCTION_DELTA):
            return "term is both a value and decomposable"
        if case.stage != ():
            return None
        s = step_staged(m, delta=REDUCTION_DELTA)
        m = s.after
    return None


def staged_steps_in_full(term, max_steps: int = 10_000, delta: bool = REDUCTION_DELTA):
    """Run staged evaluation; return ``(steps, missing)`` where ``missing`` lists steps not found among full reducts."""
    steps, missing = [], []
    m = term
    for _ in range(max_steps):
        s = step_staged(m, delta=delta)
        if s is None:
            break
        steps.append(s)
        if not any(alpha_eq(r.after, s.after) for r in enumerate_redexes(s.before, delta=delta)):
            missing.append(s)
        m = s.after
    return steps, missing


def prop_staged_subset(case: GeneratedCase, ck: Checker) -> Optional[str]:
    try:
        _, missing = staged_steps_in_full(case.term)
    except Stuck as err:
        return f"staged evaluation stuck: {err}"
    if missing:
        s = missing[0]
        return f"staged {s.rule.value} step at {s.path} is not a full-reduction step"
    return None


# ---------------------------------------------------------------- shrinking


def _positions(m, env, stage, path=()):
    yield path, env, stage, m
    match m:
        case Lam(x, annot, body):
            yield from _positions(body, env + (Entry(x, annot, stage),), stage, path + (1,))
            return
        case Bracket(a, body):
            yield from _positions(body, env, stage + (a,), path + (0,))
            return
        case Escape(_, body) | Csp(_, body):
            yield from _positions(body, env, stage[:-1], path + (0,))
            return
    for i, c in enumerate(children(m)):
        yield from _positions(c, env, stage, path + (i,))


def _replacements(ck, env, sub, stage):
    match sub:
        case App(Lam(x, _, body), _) if x not in free_vars(body):
            yield body
        case StageApp(StageLam(g, body), _) if g not in free_stage_vars(body):
            yield body
    try:
        ty, _ = ck.infer_type(env, sub, stage)
    except LmdTypeError:
        return
    for e in env:
        if e.stage == stage and alpha_eq(e.type, ty):
            yield Var(e.var)
    try:
        yield inhabit(ck.signature, env, ty, stage)
    except Exception:
        return


def shrink(case: GeneratedCase, fails: Callable[[GeneratedCase], bool], ck: Checker,
           rounds: int = 100) -> GeneratedCase:
    """Greedily replace subterms by smaller same-typed ones while ``fails`` still holds."""
    for _ in range(rounds):
        improved = False
        for path, env, stage, sub in list(_positions(case.term, case.env, case.stage)):
            for rep in _replacements(ck, env, sub, stage):
                if size(rep) >= size(sub):
                    continue
                cand = replace_at(case.term, path, rep)
                try:
                    got, _ = ck.infer_type(case.env, cand, case.stage)
                except LmdTypeError:
                    continue
                if not _equiv(ck, case.env, got, case.type, case.stage):
                    continue
                trial = replace(case, term=cand)
                if fails(trial):
                    case, improved = trial, True
                    break
            if improved:
                break
        if not improved:
            return case
    return case


# ---------------------------------------------------------------- suites


def run_suite(name: str, prop, n: int, seed: int = 0, config: dict | None = None) -> SuiteReport:
    if n <= 0:
        raise ValueError("n must be positive")
    start = time.perf_counter()
    report = SuiteReport(name, seed)
    ck = _checker()
    config = config or {}
    for i in range(n):
        case = gen_typed(GenConfig(seed=seed * 1_000_003 + i, **config))
        try:
            msg = prop(case, ck)
        except (LmdTypeError, Stuck, StepBudgetExceeded, RecursionError) as err:
            msg = f"{type(err).__name__}: {err}"
        if msg is None:
            report.passed += 1
            continue
        report.failed += 1

        def still_fails(c, prop=prop):
            try:
                return prop(c, ck) is not None
            except Exception:
                return True

        report.counterexamples.append(Counterexample(case, shrink(case, still_fails, ck), msg))
    report.elapsed = time.perf_counter() - start
    return report


def suite_preservation(n: int = 500, seed: int = 0) -> SuiteReport:
    return run_suite("preservation", prop_preservation, n, seed)


def suite_confluence(n: int = 300, seed: int = 0) -> SuiteReport:
    return run_suite("confluence", prop_confluence, n, seed)


def suite_sn(n: int = 500, budget: int = 100_000, seed: int = 0) -> SuiteReport:
    return run_suite("sn", lambda c, ck: prop_sn(c, ck, budget), n, seed)


def suite_natural(n: int = 500, seed: int = 0) -> SuiteReport:
    return run_suite("natural", prop_natural, n, seed)


def suite_decomposition(n: int = 300, seed: int = 0) -> SuiteReport:
    return run_suite("decomposition", prop_decomposition, n, seed)


def suite_staged_subset(n: int = 300, seed: int = 0) -> SuiteReport:
    return run_suite("staged-subset", prop_staged_subset, n, seed, {"target_stage": ()})


SUITES = {
    "preservation": suite_preservation,
    "confluence": suite_confluence,
    "sn": suite_sn,
    "natural": suite_natural,
    "decomposition": suite_decomposition,
    "staged-subset": suite_staged_subset,
}
