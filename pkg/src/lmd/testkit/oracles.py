"""Brute-force oracles written directly from the grammars, independent of :mod:`lmd.reduction`.

``oracle_decompose_all`` tries every position of a term as the hole of an
evaluation context, so it finds all decompositions rather than the one a
deterministic pass would pick.
"""

from __future__ import annotations

from ..kernel import (
    App, Bracket, Const, Csp, Escape, Lam, StageApp, StageLam, Var, children, subterm,
)
from ..reduction import Decomposition, RuleTag

_BINARY = {"add", "sub", "mul", "eq"}


def _args(m):
    args = []
    while isinstance(m, (App, StageApp)):
        args.append(m.arg if isinstance(m, App) else m.stage)
        m = m.fun
    return m, args[::-1]


def oracle_delta_redex(m) -> bool:
    head, args = _args(m)
    if not isinstance(head, Const) or any(isinstance(a, tuple) for a in args):
        return False
    if head.name in _BINARY:
        if len(args) != 2 or not all(isinstance(a, Const) and a.name.isdigit() for a in args):
            return False
        return head.name != "sub" or int(args[0].name) >= int(args[1].name)
    if head.name in ("head", "tail") and len(args) == 2:
        h, inner = _args(args[1])
        return (isinstance(h, Const) and h.name == "cons" and len(inner) == 3
                and not any(isinstance(a, tuple) for a in inner))
    return False


def oracle_is_value(m, stage, delta=True) -> bool:
    stage = tuple(stage)
    if stage == ():
        if isinstance(m, (Lam, Const)):
            return True
        if isinstance(m, Bracket):
            return oracle_is_value(m.body, (m.sv,), delta)
        if isinstance(m, StageLam):
            return oracle_is_value(m.body, (), delta)
        if isinstance(m, (App, StageApp)):
            head, args = _args(m)
            return (isinstance(head, Const)
                    and all(isinstance(a, tuple) or oracle_is_value(a, (), delta) for a in args)
                    and not (delta and oracle_delta_redex(m)))
        return False
    if isinstance(m, (Var, Const)):
        return True
    if isinstance(m, (Lam, StageLam)):
        return oracle_is_value(m.body, stage, delta)
    if isinstance(m, App):
        return oracle_is_value(m.fun, stage, delta) and oracle_is_value(m.arg, stage, delta)
    if isinstance(m, StageApp):
        return oracle_is_value(m.fun, stage, delta)
    if isinstance(m, Bracket):
        return oracle_is_value(m.body, stage + (m.sv,), delta)
    if isinstance(m, Escape):
        return len(stage) > 1 and stage[-1] == m.sv and oracle_is_value(m.body, stage[:-1], delta)
    if isinstance(m, Csp):
        return stage[-1] == m.sv and oracle_is_value(m.body, stage[:-1], delta)
    return False


def _redex_at(m, hole_stage, delta):
    if hole_stage == ():
        if isinstance(m, App) and isinstance(m.fun, Lam) and oracle_is_value(m.arg, (), delta):
            return RuleTag.BETA
        if isinstance(m, StageApp) and isinstance(m.fun, StageLam) and oracle_is_value(m.fun.body, (), delta):
            return RuleTag.STAGE_BETA
        if delta and isinstance(m, App) and oracle_delta_redex(m):
            if all(oracle_is_value(a, (), delta) for a in _args(m)[1] if not isinstance(a, tuple)):
                return RuleTag.DELTA
        return None
    if (len(hole_stage) == 1 and isinstance(m, Escape) and m.sv == hole_stage[0]
            and isinstance(m.body, Bracket) and m.body.sv == m.sv
            and oracle_is_value(m.body.body, hole_stage, delta)):
        return RuleTag.DIAMOND
    return None


def _context_step(n, i, stage, delta):
    """Stage of child ``i`` if descending into it stays inside an evaluation context."""
    if stage == ():
        match n:
            case App(f, _):
                return stage if i == 0 or oracle_is_value(f, (), delta) else None
            case Bracket(a, _):
                return (a,)
            case StageLam() | StageApp():
                return stage
        return None
    match n:
        case Lam():
            return stage if i == 1 else None
        case App(f, _):
            return stage if i == 0 or oracle_is_value(f, stage, delta) else None
        case Bracket(a, _):
            return stage + (a,)
        case Escape(a, _) | Csp(a, _):
            return stage[:-1] if stage[-1] == a else None
        case StageLam() | StageApp():
            return stage
    return None


def oracle_decompose_all(m, stage=(), delta=True) -> list:
    """Every ``(context, redex)`` split of ``m`` at ``stage``, as :class:`Decomposition` records."""
    stage = tuple(stage)
    out = []

    def visit(n, path, st):
        if len(st) <= 1:
            rule = _redex_at(n, st, delta)
            if rule is not None:
                out.append(Decomposition(m, stage, st, path, n, rule))
        for i, _ in enumerate(children(n)):
            nst = _context_step(n, i, st, delta)
            if nst is not None:
                visit(subterm(n, (i,)), path + (i,), nst)

    visit(m, (), stage)
    return out
