"""Full reduction, values, evaluation-context decomposition and staged evaluation.

Positions are paths of child indices as returned by :func:`lmd.kernel.children`;
a lambda's annotation is child 0 and its body child 1.  Full reduction only
descends into term positions unless ``deep`` is set, in which case index terms
inside types are reduced as well (used by the equivalence checker).
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from typing import Optional

from .kernel import (
    App, Bracket, Const, Csp, Escape, Lam, StageApp, StageLam, Var, children,
    is_term, replace_at, spine, subst_stage, subst_term, subterm,
)


class RuleTag(str, enum.Enum):
    BETA = "beta"
    DIAMOND = "diamond"
    STAGE_BETA = "Lambda"
    DELTA = "delta"


@dataclass(frozen=True)
class ReductionStep:
    rule: RuleTag
    path: tuple
    before: object
    after: object


class Stuck(Exception):
    def __init__(self, term, stage):
        from .surface import pretty, pretty_stage

        super().__init__(f"stuck at stage {pretty_stage(stage)}: {pretty(term)}")
        self.term = term
        self.stage = stage


class StepBudgetExceeded(Exception):
    def __init__(self, budget: int, term):
        super().__init__(f"no normal form within {budget} steps")
        self.budget = budget
        self.term = term


# ---------------------------------------------------------------- delta rules

_ARITH = {"add": lambda a, b: a + b, "sub": lambda a, b: a - b, "mul": lambda a, b: a * b}


def delta_step(m) -> Optional[object]:
    """Contract a prelude primitive applied to literal arguments, or ``None``.

    ``sub`` is left alone when the result would be negative, since negative
    numerals have no syntax.
    """
    head, args = spine(m)
    if not isinstance(head, Const) or any(isinstance(a, tuple) for a in args):
        return None
    name = head.name
    if name in _ARITH or name == "eq":
        if len(args) != 2 or not all(isinstance(a, Const) and a.is_literal for a in args):
            return None
        x, y = int(args[0].name), int(args[1].name)
        if name == "eq":
            return Const("true" if x == y else "false")
        r = _ARITH[name](x, y)
        return Const(str(r)) if r >= 0 else None
    if name in ("head", "tail") and len(args) == 2:
        vhead, vargs = spine(args[1])
        if isinstance(vhead, Const) and vhead.name == "cons" and len(vargs) == 3:
            if not any(isinstance(a, tuple) for a in vargs):
                return vargs[1] if name == "head" else vargs[2]
    return None


# ---------------------------------------------------------------- full reduction


def redex_rule(m, delta: bool = False) -> Optional[RuleTag]:
    match m:
        case App(Lam(), _):
            return RuleTag.BETA
        case Escape(a, Bracket(b, _)) if a == b:
            return RuleTag.DIAMOND
        case StageApp(StageLam(), _):
            return RuleTag.STAGE_BETA
    if delta and isinstance(m, App) and delta_step(m) is not None:
        return RuleTag.DELTA
    return None


def contract(m, rule: RuleTag):
    match rule:
        case RuleTag.BETA:
            return subst_term(m.fun.body, m.fun.var, m.arg)
        case RuleTag.DIAMOND:
            return m.body.body
        case RuleTag.STAGE_BETA:
            return subst_stage(m.fun.body, m.fun.sv, m.stage)
        case RuleTag.DELTA:
            return delta_step(m)
    raise ValueError(rule)


def redex_positions(m, delta: bool = False, deep: bool = False) -> list:
    """``(path, rule)`` for every redex, in pre-order (leftmost-outermost first)."""
    out = []
    _positions(m, (), delta, deep, out)
    return out


def _positions(n, path, delta, deep, out):
    if is_term(n):
        rule = redex_rule(n, delta)
        if rule is not None:
            out.append((path, rule))
    for i, c in enumerate(children(n)):
        if deep or is_term(c):
            _positions(c, path + (i,), delta, deep, out)


def _first_position(n, path, delta, deep):
    if is_term(n):
        rule = redex_rule(n, delta)
        if rule is not None:
            return path, rule
    for i, c in enumerate(children(n)):
        if deep or is_term(c):
            r = _first_position(c, path + (i,), delta, deep)
            if r is not None:
                return r
    return None


def contract_at(m, path: tuple, rule: RuleTag):
    return replace_at(m, path, contract(subterm(m, path), rule))


def enumerate_redexes(m, delta: bool = False, deep: bool = False) -> list:
    return [
        ReductionStep(rule, path, m, contract_at(m, path, rule))
        for path, rule in redex_positions(m, delta, deep)
    ]


def step_full(m, choice: int, delta: bool = False):
    positions = redex_positions(m, delta)
    if not 0 <= choice < len(positions):
        raise IndexError(f"redex choice {choice} out of range (term has {len(positions)} redexes)")
    path, rule = positions[choice]
    return contract_at(m, path, rule)


def normalize(m, strategy="leftmost-outermost", max_steps: int = 100_000,
              delta: bool = False, deep: bool = False):
    """Reduce to a term without redexes.

    ``strategy`` is ``"leftmost-outermost"``, ``"staged"`` (take the staged
    step when there is one, otherwise leftmost-outermost), ``"random"`` or an
    ``int`` seed / :class:`random.Random` for a seeded random choice.
    Returns ``(normal_form, steps)``.
    """
    if max_steps <= 0:
        raise ValueError("max_steps must be positive")
    rng = None
    if isinstance(strategy, random.Random):
        rng = strategy
    elif isinstance(strategy, int) and not isinstance(strategy, bool):
        rng = random.Random(strategy)
    elif strategy == "random":
        rng = random.Random(0)
    elif strategy not in ("leftmost-outermost", "staged"):
        raise ValueError(f"unknown strategy {strategy!r}")

    steps = []
    while True:
        chosen = None
        if rng is not None:
            positions = redex_positions(m, delta, deep)
            if positions:
                chosen = positions[rng.randrange(len(positions))]
        else:
            if strategy == "staged":
                try:
                    d = decompose(m, (), delta)
                    if isinstance(d, Decomposition):
                        chosen = d.path, d.rule
                except Stuck:
                    pass
            if chosen is None:
                chosen = _first_position(m, (), delta, deep)
        if chosen is None:
            return m, steps
        if len(steps) >= max_steps:
            raise StepBudgetExceeded(max_steps, m)
        path, rule = chosen
        after = contract_at(m, path, rule)
        steps.append(ReductionStep(rule, path, m, after))
        m = after


# ---------------------------------------------------------------- values


def is_value(m, stage: tuple, delta: bool = False) -> bool:
    """Membership in the stage-indexed value grammar.

    Constants, and constant heads applied to values at stage epsilon, count as
    values: they have no reduction of their own.
    """
    stage = tuple(stage)
    if not stage:
        match m:
            case Lam() | Const():
                return True
            case Bracket(a, b):
                return is_value(b, (a,), delta)
            case StageLam(_, b):
                return is_value(b, (), delta)
            case App() | StageApp():
                return _neutral(m, delta)
        return False
    match m:
        case Var() | Const():
            return True
        case Lam(_, _, b) | StageLam(_, b):
            return is_value(b, stage, delta)
        case App(f, a):
            return is_value(f, stage, delta) and is_value(a, stage, delta)
        case StageApp(f, _):
            return is_value(f, stage, delta)
        case Bracket(a, b):
            return is_value(b, stage + (a,), delta)
        case Escape(a, b):
            return len(stage) >= 2 and stage[-1] == a and is_value(b, stage[:-1], delta)
        case Csp(a, b):
            return stage[-1] == a and is_value(b, stage[:-1], delta)
    return False


def _neutral(m, delta) -> bool:
    head, args = spine(m)
    if not isinstance(head, Const):
        return False
    if not all(isinstance(a, tuple) or is_value(a, (), delta) for a in args):
        return False
    return not (delta and delta_step(m) is not None)


# ---------------------------------------------------------------- decomposition


class _Hole:
    def __repr__(self):
        return "[]"


HOLE = _Hole()


@dataclass(frozen=True)
class ValueJudgment:
    term: object
    stage: tuple
    is_value: bool = True


@dataclass(frozen=True)
class Decomposition:
    """``term = context[redex]`` with the context at ``context_stage`` and the hole at ``hole_stage``."""

    term: object
    context_stage: tuple
    hole_stage: tuple
    path: tuple
    redex: object
    rule: RuleTag

    @property
    def context(self):
        return replace_at(self.term, self.path, HOLE)

    def plug(self, filler):
        return replace_at(self.term, self.path, filler)


def decompose(m, stage: tuple = (), delta: bool = False):
    """Split ``m`` into evaluation context and redex, or report it is a value.

    A single syntax-directed pass indexed by the current stage.  Raises
    :class:`Stuck` when neither alternative applies.
    """
    stage = tuple(stage)
    r = _dec(m, stage, delta)
    if r is None:
        return ValueJudgment(m, stage)
    path, hole_stage, rule = r
    return Decomposition(m, stage, hole_stage, path, subterm(m, path), rule)


def _under(i, r):
    if r is None:
        return None
    path, hs, rule = r
    return (i,) + path, hs, rule


def _dec(m, stage, delta):
    if not stage:
        match m:
            case Lam() | Const():
                return None
            case Bracket(a, b):
                return _under(0, _dec(b, (a,), delta))
            case StageLam(_, b):
                return _under(0, _dec(b, (), delta))
            case App(f, a):
                r = _dec(f, (), delta)
                if r is not None:
                    return _under(0, r)
                r = _dec(a, (), delta)
                if r is not None:
                    return _under(1, r)
                if isinstance(f, Lam):
                    return (), (), RuleTag.BETA
                if delta and delta_step(m) is not None:
                    return (), (), RuleTag.DELTA
                if _neutral(m, delta):
                    return None
                raise Stuck(m, stage)
            case StageApp(f, _):
                r = _dec(f, (), delta)
                if r is not None:
                    return _under(0, r)
                if isinstance(f, StageLam):
                    return (), (), RuleTag.STAGE_BETA
                if _neutral(m, delta):
                    return None
                raise Stuck(m, stage)
        raise Stuck(m, stage)

    match m:
        case Var() | Const():
            return None
        case Lam(_, _, b):
            return _under(1, _dec(b, stage, delta))
        case App(f, a):
            r = _dec(f, stage, delta)
            if r is not None:
                return _under(0, r)
            return _under(1, _dec(a, stage, delta))
        case Bracket(a, b):
            return _under(0, _dec(b, stage + (a,), delta))
        case StageLam(_, b) | StageApp(b, _):
            return _under(0, _dec(b, stage, delta))
        case Escape(a, b):
            if stage[-1] != a:
                raise Stuck(m, stage)
            inner = stage[:-1]
            r = _dec(b, inner, delta)
            if r is not None:
                return _under(0, r)
            if inner:
                return None
            if isinstance(b, Bracket) and b.sv == a:
                return (), stage, RuleTag.DIAMOND
            raise Stuck(m, stage)
        case Csp(a, b):
            if stage[-1] != a:
                raise Stuck(m, stage)
            return _under(0, _dec(b, stage[:-1], delta))
    raise Stuck(m, stage)


# ---------------------------------------------------------------- staged evaluation


def step_staged(m, delta: bool = False) -> Optional[ReductionStep]:
    """One staged step from stage epsilon, or ``None`` if ``m`` is a value."""
    d = decompose(m, (), delta)
    if isinstance(d, ValueJudgment):
        return None
    after = d.plug(contract(d.redex, d.rule))
    return ReductionStep(d.rule, d.path, m, after)


def eval_staged(m, max_steps: int = 100_000, delta: bool = False):
    """Iterate staged steps to a value.  Returns ``(value, steps)``."""
    steps = []
    while True:
        s = step_staged(m, delta)
        if s is None:
            return m, steps
        if len(steps) >= max_steps:
            raise StepBudgetExceeded(max_steps, m)
        steps.append(s)
        m = s.after
