"""Stage- and dependency-erasing translation into the simply typed lambda calculus.

The target calculus is deliberately tiny: variables, annotated lambdas and
application, with base types named after the source type constants.  It has
its own checker and one-step beta reducer so it can serve as an oracle
independent of :mod:`lmd.typesystem` and :mod:`lmd.reduction`.
"""

from __future__ import annotations

from dataclasses import dataclass

from .kernel import (
    App, Bracket, Code, Const, ConstDecl, Csp, Escape, ForallStage, KPi, Lam, Pi,
    Signature, StageApp, StageLam, Star, TApp, TConst, Var, fresh,
)


@dataclass(frozen=True)
class Base:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Arrow:
    dom: object
    cod: object

    def __str__(self):
        dom = f"({self.dom})" if isinstance(self.dom, Arrow) else str(self.dom)
        return f"{dom} -> {self.cod}"


@dataclass(frozen=True)
class SVar:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class SLam:
    var: str
    annot: object
    body: object

    def __str__(self):
        return f"\\{self.var}:{self.annot}. {self.body}"


@dataclass(frozen=True)
class SApp:
    fun: object
    arg: object

    def __str__(self):
        fun = f"({self.fun})" if isinstance(self.fun, SLam) else str(self.fun)
        arg = str(self.arg) if isinstance(self.arg, SVar) else f"({self.arg})"
        return f"{fun} {arg}"


KIND_IMAGE = Base("*")
INT_BASE = Base("Int")


class StlcTypeError(Exception):
    pass


# ---------------------------------------------------------------- translation


def nat_term(m):
    match m:
        case Var(x) | Const(x):
            return SVar(x)
        case Lam(x, annot, body):
            return SLam(x, nat_type(annot), nat_term(body))
        case App(f, a):
            return SApp(nat_term(f), nat_term(a))
        case Bracket(_, b) | Escape(_, b) | Csp(_, b) | StageLam(_, b) | StageApp(b, _):
            return nat_term(b)
    raise TypeError(f"not a term: {m!r}")


def nat_type(t):
    match t:
        case TConst(x):
            return Base(x)
        case Pi(_, dom, cod):
            return Arrow(nat_type(dom), nat_type(cod))
        case TApp(head, _):
            return nat_type(head)
        case Code(_, b) | ForallStage(_, b):
            return nat_type(b)
    raise TypeError(f"not a type: {t!r}")


def nat_kind(k):
    if isinstance(k, (Star, KPi)):
        return KIND_IMAGE
    raise TypeError(f"not a kind: {k!r}")


def nat_env(env) -> dict:
    """Variables keep their names; stages are dropped.  Later entries shadow."""
    return {e.var: nat_type(e.type) for e in env}


def nat_signature(sig: Signature) -> dict:
    return {d.name: nat_type(d.type) for d in sig.decls if isinstance(d, ConstDecl)}


# ---------------------------------------------------------------- STLC


def stlc_check(env: dict, t):
    """Synthesize the STLC type of ``t``.  Numerals are constants of base type Int."""
    match t:
        case SVar(x):
            if x in env:
                return env[x]
            if x.isdigit():
                return INT_BASE
            raise StlcTypeError(f"unbound variable {x}")
        case SLam(x, annot, body):
            return Arrow(annot, stlc_check({**env, x: annot}, body))
        case SApp(f, a):
            ft = stlc_check(env, f)
            at = stlc_check(env, a)
            if not isinstance(ft, Arrow):
                raise StlcTypeError(f"applying non-function {f} : {ft}")
            if ft.dom != at:
                raise StlcTypeError(f"argument {a} : {at}, expected {ft.dom}")
            return ft.cod
    raise TypeError(f"not an STLC term: {t!r}")


def stlc_free_vars(t) -> set:
    match t:
        case SVar(x):
            return {x}
        case SLam(x, _, b):
            return stlc_free_vars(b) - {x}
        case SApp(f, a):
            return stlc_free_vars(f) | stlc_free_vars(a)
    raise TypeError(t)


def stlc_subst(t, x: str, v):
    match t:
        case SVar(y):
            return v if y == x else t
        case SApp(f, a):
            return SApp(stlc_subst(f, x, v), stlc_subst(a, x, v))
        case SLam(y, annot, b):
            if y == x:
                return t
            if y in stlc_free_vars(v):
                z = fresh(y, stlc_free_vars(v) | stlc_free_vars(b) | {x})
                b, y = stlc_subst(b, y, SVar(z)), z
            return SLam(y, annot, stlc_subst(b, x, v))
    raise TypeError(t)


def stlc_alpha_eq(a, b, env_a=None, env_b=None, depth=0) -> bool:
    env_a, env_b = env_a or {}, env_b or {}
    match a, b:
        case SVar(x), SVar(y):
            return env_a.get(x, x) == env_b.get(y, y)
        case SApp(f1, a1), SApp(f2, a2):
            return (stlc_alpha_eq(f1, f2, env_a, env_b, depth)
                    and stlc_alpha_eq(a1, a2, env_a, env_b, depth))
        case SLam(x, t1, b1), SLam(y, t2, b2):
            key = f"#{depth}"
            return t1 == t2 and stlc_alpha_eq(b1, b2, {**env_a, x: key}, {**env_b, y: key}, depth + 1)
    return False


def stlc_contracta(t) -> list:
    """Every term reachable from ``t`` by exactly one beta step."""
    out = []
    match t:
        case SApp(f, a):
            if isinstance(f, SLam):
                out.append(stlc_subst(f.body, f.var, a))
            out += [SApp(f2, a) for f2 in stlc_contracta(f)]
            out += [SApp(f, a2) for a2 in stlc_contracta(a)]
        case SLam(x, annot, b):
            out += [SLam(x, annot, b2) for b2 in stlc_contracta(b)]
    return out


def stlc_step(t):
    """Leftmost-outermost beta step, or ``None`` at a normal form."""
    match t:
        case SApp(SLam(x, _, b), a):
            return stlc_subst(b, x, a)
        case SApp(f, a):
            f2 = stlc_step(f)
            if f2 is not None:
                return SApp(f2, a)
            a2 = stlc_step(a)
            return None if a2 is None else SApp(f, a2)
        case SLam(x, annot, b):
            b2 = stlc_step(b)
            return None if b2 is None else SLam(x, annot, b2)
    return None


def stlc_normalize(t, max_steps: int = 100_000):
    n = 0
    while (t2 := stlc_step(t)) is not None:
        n += 1
        if n > max_steps:
            raise RuntimeError("STLC normalization budget exceeded")
        t = t2
    return t, n
