"""Abstract syntax of the calculus, binding, substitution and alpha-equivalence.

Terms, types and kinds are immutable dataclasses.  A stage is a plain tuple
of stage-variable names; ``()`` is the empty stage.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Union

Stage = tuple  # tuple[str, ...]
EPSILON: Stage = ()


# ---------------------------------------------------------------- terms


@dataclass(frozen=True)
class Const:
    name: str

    @property
    def is_literal(self) -> bool:
        return self.name.isdigit()


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Lam:
    var: str
    annot: "Type"
    body: "Term"


@dataclass(frozen=True)
class App:
    fun: "Term"
    arg: "Term"


@dataclass(frozen=True)
class Bracket:
    sv: str
    body: "Term"


@dataclass(frozen=True)
class Escape:
    sv: str
    body: "Term"


@dataclass(frozen=True)
class StageLam:
    sv: str
    body: "Term"


@dataclass(frozen=True)
class StageApp:
    fun: "Term"
    stage: Stage


@dataclass(frozen=True)
class Csp:
    sv: str
    body: "Term"


Term = Union[Const, Var, Lam, App, Bracket, Escape, StageLam, StageApp, Csp]
TERM_CLASSES = (Const, Var, Lam, App, Bracket, Escape, StageLam, StageApp, Csp)


# ---------------------------------------------------------------- types


@dataclass(frozen=True)
class TConst:
    name: str


@dataclass(frozen=True)
class Pi:
    var: str
    dom: "Type"
    cod: "Type"


@dataclass(frozen=True)
class TApp:
    head: "Type"
    arg: Term


@dataclass(frozen=True)
class Code:
    sv: str
    body: "Type"


@dataclass(frozen=True)
class ForallStage:
    sv: str
    body: "Type"


Type = Union[TConst, Pi, TApp, Code, ForallStage]
TYPE_CLASSES = (TConst, Pi, TApp, Code, ForallStage)


# ---------------------------------------------------------------- kinds


@dataclass(frozen=True)
class Star:
    pass


@dataclass(frozen=True)
class KPi:
    var: str
    dom: Type
    body: "Kind"


Kind = Union[Star, KPi]
STAR = Star()

Node = Union[Term, Type, Kind]


def arrow(dom: Type, cod: Type) -> Pi:
    """Non-dependent function type; the bound name is fresh for ``cod``."""
    return Pi(fresh("_", free_vars(cod)), dom, cod)


def is_term(n) -> bool:
    return isinstance(n, TERM_CLASSES)


def is_type(n) -> bool:
    return isinstance(n, TYPE_CLASSES)


# ---------------------------------------------------------------- signatures / environments


@dataclass(frozen=True)
class TypeConstDecl:
    name: str
    kind: Kind


@dataclass(frozen=True)
class ConstDecl:
    name: str
    type: Type


INT = TConst("Int")


@dataclass(frozen=True)
class Signature:
    decls: tuple = ()

    def kind_of(self, name: str):
        for d in self.decls:
            if isinstance(d, TypeConstDecl) and d.name == name:
                return d.kind
        return None

    def type_of(self, name: str):
        if name.isdigit():
            return INT
        for d in self.decls:
            if isinstance(d, ConstDecl) and d.name == name:
                return d.type
        return None

    def names(self) -> list:
        return [d.name for d in self.decls]

    def const_names(self) -> set:
        return {d.name for d in self.decls if isinstance(d, ConstDecl)}

    def extend(self, *decls) -> "Signature":
        return Signature(self.decls + tuple(decls))


@dataclass(frozen=True)
class Entry:
    var: str
    type: Type
    stage: Stage


TypeEnv = tuple  # tuple[Entry, ...]


def env_lookup(env: TypeEnv, name: str):
    for e in reversed(env):
        if e.var == name:
            return e
    return None


def env_ftv(env: TypeEnv) -> set:
    out = set()
    for e in env:
        out |= free_stage_vars(e.type) | set(e.stage)
    return out


def env_fv(env: TypeEnv) -> set:
    out = set()
    for e in env:
        out |= free_vars(e.type) | {e.var}
    return out


# ---------------------------------------------------------------- fresh names

def fresh(base: str, avoid: Iterable[str] = ()) -> str:
    """The first name ``stem_1, stem_2, ...`` derived from ``base`` that is not in ``avoid``."""
    avoid = set(avoid)
    stem = base.split("_")[0] or "v"
    for i in itertools.count(1):
        name = f"{stem}_{i}"
        if name not in avoid:
            return name


# ---------------------------------------------------------------- generic traversal


def children(n) -> tuple:
    """Immediate sub-nodes (terms, types or kinds) in a fixed order."""
    match n:
        case Const() | Var() | TConst() | Star():
            return ()
        case Lam(_, t, b):
            return (t, b)
        case App(f, a):
            return (f, a)
        case Bracket(_, b) | Escape(_, b) | StageLam(_, b) | Csp(_, b):
            return (b,)
        case StageApp(f, _):
            return (f,)
        case Pi(_, d, c):
            return (d, c)
        case TApp(h, a):
            return (h, a)
        case Code(_, b) | ForallStage(_, b):
            return (b,)
        case KPi(_, d, b):
            return (d, b)
    raise TypeError(f"not a syntax node: {n!r}")


def replace_child(n, i: int, new):
    kids = list(children(n))
    kids[i] = new
    match n:
        case Lam(x, _, _):
            return Lam(x, *kids)
        case App():
            return App(*kids)
        case Bracket(s, _):
            return Bracket(s, *kids)
        case Escape(s, _):
            return Escape(s, *kids)
        case StageLam(s, _):
            return StageLam(s, *kids)
        case Csp(s, _):
            return Csp(s, *kids)
        case StageApp(_, st):
            return StageApp(kids[0], st)
        case Pi(x, _, _):
            return Pi(x, *kids)
        case TApp():
            return TApp(*kids)
        case Code(s, _):
            return Code(s, *kids)
        case ForallStage(s, _):
            return ForallStage(s, *kids)
        case KPi(x, _, _):
            return KPi(x, *kids)
    raise TypeError(f"no child {i} in {n!r}")


def subterm(n, path: tuple):
    for i in path:
        n = children(n)[i]
    return n


def replace_at(n, path: tuple, new):
    if not path:
        return new
    return replace_child(n, path[0], replace_at(children(n)[path[0]], path[1:], new))


def size(n) -> int:
    return 1 + sum(size(c) for c in children(n))


def term_size(n) -> int:
    """Number of term nodes, ignoring type annotations."""
    if not is_term(n):
        return 0
    return 1 + sum(term_size(c) for c in children(n) if is_term(c))


# ---------------------------------------------------------------- free variables


def free_vars(n) -> set:
    match n:
        case Var(x):
            return {x}
        case Lam(x, t, b) | Pi(x, t, b) | KPi(x, t, b):
            return free_vars(t) | (free_vars(b) - {x})
    out = set()
    for c in children(n):
        out |= free_vars(c)
    return out


def free_stage_vars(n) -> set:
    match n:
        case Bracket(s, b) | Escape(s, b) | Csp(s, b) | Code(s, b):
            return {s} | free_stage_vars(b)
        case StageLam(s, b) | ForallStage(s, b):
            return free_stage_vars(b) - {s}
        case StageApp(f, st):
            return free_stage_vars(f) | set(st)
    out = set()
    for c in children(n):
        out |= free_stage_vars(c)
    return out


def bound_names(n) -> set:
    """Every name bound anywhere inside ``n`` (term and stage binders)."""
    out = set()
    match n:
        case Lam(x, _, _) | Pi(x, _, _) | KPi(x, _, _) | StageLam(x, _) | ForallStage(x, _):
            out.add(x)
    for c in children(n):
        out |= bound_names(c)
    return out


def all_names(n) -> set:
    return free_vars(n) | free_stage_vars(n) | bound_names(n)


# ---------------------------------------------------------------- term substitution


def subst_term(target, x: str, value: Term):
    """Capture-avoiding ``target[x := value]`` on terms, types, kinds or environments."""
    if isinstance(target, tuple):
        return tuple(Entry(e.var, subst_term(e.type, x, value), e.stage) for e in target)
    fv = free_vars(value)
    ftv = free_stage_vars(value)
    return _subst(target, x, value, fv, ftv)


def _subst(n, x, value, fv, ftv):
    match n:
        case Var(y):
            return value if y == x else n
        case Const() | TConst() | Star():
            return n
        case Lam(y, t, b) | Pi(y, t, b) | KPi(y, t, b):
            t2 = _subst(t, x, value, fv, ftv)
            if y == x:
                return type(n)(y, t2, b)
            if y in fv and x in free_vars(b):
                z = fresh(y, fv | free_vars(b) | {x})
                b = _subst(b, y, Var(z), {z}, set())
                y = z
            return type(n)(y, t2, _subst(b, x, value, fv, ftv))
        case StageLam(s, b) | ForallStage(s, b):
            if s in ftv and x in free_vars(b):
                s2 = fresh(s, ftv | free_stage_vars(b))
                b = subst_stage(b, s, (s2,))
                s = s2
            return type(n)(s, _subst(b, x, value, fv, ftv))
    kids = children(n)
    out = n
    for i, c in enumerate(kids):
        c2 = _subst(c, x, value, fv, ftv)
        if c2 is not c:
            out = replace_child(out, i, c2)
    return out


# ---------------------------------------------------------------- stage substitution


def stage_subst_seq(stage: Stage, a: str, rep: Stage) -> Stage:
    out = []
    for s in stage:
        out.extend(rep if s == a else (s,))
    return tuple(out)


def subst_stage(target, a: str, rep: Stage):
    """``target[a := rep]``.

    A bracket or code type over a sequence nests left to right; escapes and
    CSP nest in reverse; substituting the empty stage removes the operator.
    """
    if isinstance(target, tuple) and all(isinstance(s, str) for s in target):
        return stage_subst_seq(target, a, rep)
    if isinstance(target, tuple):
        return tuple(
            Entry(e.var, subst_stage(e.type, a, rep), stage_subst_seq(e.stage, a, rep))
            for e in target
        )
    return _ssubst(target, a, tuple(rep), set(rep))


def _wrap(ctor, svs, body):
    for s in reversed(svs):
        body = ctor(s, body)
    return body


def _ssubst(n, a, rep, rep_set):
    match n:
        case Bracket(s, b) | Code(s, b):
            b2 = _ssubst(b, a, rep, rep_set)
            return _wrap(type(n), rep if s == a else (s,), b2)
        case Escape(s, b) | Csp(s, b):
            b2 = _ssubst(b, a, rep, rep_set)
            return _wrap(type(n), tuple(reversed(rep)) if s == a else (s,), b2)
        case StageApp(f, st):
            return StageApp(_ssubst(f, a, rep, rep_set), stage_subst_seq(st, a, rep))
        case StageLam(s, b) | ForallStage(s, b):
            if s == a:
                return n
            if s in rep_set and a in free_stage_vars(b):
                s2 = fresh(s, rep_set | free_stage_vars(b) | {a})
                b = _ssubst(b, s, (s2,), {s2})
                s = s2
            return type(n)(s, _ssubst(b, a, rep, rep_set))
        case Var() | Const() | TConst() | Star():
            return n
    out = n
    for i, c in enumerate(children(n)):
        c2 = _ssubst(c, a, rep, rep_set)
        if c2 is not c:
            out = replace_child(out, i, c2)
    return out


# ---------------------------------------------------------------- alpha-equivalence


def alpha_eq(a, b) -> bool:
    """Equality up to renaming of bound term and stage variables."""
    return _aeq(a, b, {}, {}, {}, {}, [0])


def _aeq(a, b, va, vb, sa, sb, depth) -> bool:
    if type(a) is not type(b):
        return False
    match a:
        case Var(x):
            return va.get(x, x) == vb.get(b.name, b.name)
        case Const(c) | TConst(c):
            return c == b.name
        case Star():
            return True
        case Lam(x, t, body) | Pi(x, t, body) | KPi(x, t, body):
            if not _aeq(t, children(b)[0], va, vb, sa, sb, depth):
                return False
            depth[0] += 1
            tag = f"#{depth[0]}"
            return _aeq(body, children(b)[1], {**va, x: tag}, {**vb, b.var: tag}, sa, sb, depth)
        case StageLam(s, body) | ForallStage(s, body):
            depth[0] += 1
            tag = f"#{depth[0]}"
            return _aeq(body, b.body, va, vb, {**sa, s: tag}, {**sb, b.sv: tag}, depth)
        case Bracket(s, body) | Escape(s, body) | Csp(s, body) | Code(s, body):
            return sa.get(s, s) == sb.get(b.sv, b.sv) and _aeq(body, b.body, va, vb, sa, sb, depth)
        case StageApp(f, st):
            if len(st) != len(b.stage):
                return False
            if any(sa.get(x, x) != sb.get(y, y) for x, y in zip(st, b.stage)):
                return False
            return _aeq(f, b.fun, va, vb, sa, sb, depth)
    return all(
        _aeq(x, y, va, vb, sa, sb, depth) for x, y in zip(children(a), children(b))
    )


# ---------------------------------------------------------------- loading helpers


def rename_apart(n, avoid: Iterable[str] = ()):
    """Give every binder in ``n`` a name distinct from all others and from ``avoid``."""
    seen = set(avoid) | free_vars(n) | free_stage_vars(n)
    return _rename_apart(n, seen)


def _rename_apart(n, seen):
    match n:
        case Lam(x, t, b) | Pi(x, t, b) | KPi(x, t, b):
            t = _rename_apart(t, seen)
            if x in seen:
                y = fresh(x, seen)
                b = subst_term(b, x, Var(y))
                x = y
            seen.add(x)
            return type(n)(x, t, _rename_apart(b, seen))
        case StageLam(s, b) | ForallStage(s, b):
            if s in seen:
                s2 = fresh(s, seen)
                b = subst_stage(b, s, (s2,))
                s = s2
            seen.add(s)
            return type(n)(s, _rename_apart(b, seen))
    out = n
    for i, c in enumerate(children(n)):
        out = replace_child(out, i, _rename_apart(c, seen))
    return out


def spine(m: Term):
    """Split ``m`` into its head and the list of term/stage arguments."""
    args = []
    while True:
        match m:
            case App(f, a):
                args.append(a)
                m = f
            case StageApp(f, st):
                args.append(st)
                m = f
            case _:
                return m, args[::-1]


def apply(head: Term, *args) -> Term:
    for a in args:
        head = StageApp(head, a) if isinstance(a, tuple) else App(head, a)
    return head
