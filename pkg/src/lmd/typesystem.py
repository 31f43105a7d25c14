"""Type checker: well-formedness, kinding, typing and the three equivalences.

Every successful check returns a :class:`Derivation`.  Synthesis is used
everywhere; checking (and hence T-Conv) happens at application arguments,
index terms of type applications and explicit ascriptions.

Equivalence is decided by a sound but incomplete procedure: index terms are
normalized by full reduction (plus delta rules when enabled), closed
cross-stage-persistent subterms are erased, and the results are compared up
to alpha-equivalence.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass, field

from .kernel import (
    App, Bracket, Code, Const, ConstDecl, Csp, Entry, Escape, ForallStage, KPi, Lam,
    Pi, STAR, Signature, StageApp, StageLam, Star, TApp, TConst, TypeConstDecl, Var,
    alpha_eq, children, env_ftv, env_lookup, free_stage_vars, free_vars, fresh,
    replace_child, subst_stage, subst_term,
)
from .reduction import RuleTag, normalize, redex_positions, contract_at
from .surface import pretty as _pretty, pretty_stage


def pretty(node) -> str:
    return "?" if node is None else _pretty(node)

# ---------------------------------------------------------------- judgments


def pretty_env(env) -> str:
    if not env:
        return "∅"
    return ", ".join(f"{e.var}:{pretty(e.type)}@{pretty_stage(e.stage)}" for e in env)


@dataclass(frozen=True)
class SigOk:
    signature: Signature

    def __str__(self):
        return f"⊢ {len(self.signature.decls)} declarations"


@dataclass(frozen=True)
class EnvOk:
    env: tuple

    def __str__(self):
        return f"⊢ {pretty_env(self.env)}"


@dataclass(frozen=True)
class KindOk:
    env: tuple
    kind: object
    stage: tuple

    def __str__(self):
        return f"{pretty_env(self.env)} ⊢ {pretty(self.kind)} kind @ {pretty_stage(self.stage)}"


@dataclass(frozen=True)
class Kinding:
    env: tuple
    type: object
    kind: object
    stage: tuple

    def __str__(self):
        return f"{pretty_env(self.env)} ⊢ {pretty(self.type)} :: {pretty(self.kind)} @ {pretty_stage(self.stage)}"


@dataclass(frozen=True)
class Typing:
    env: tuple
    term: object
    type: object
    stage: tuple

    def __str__(self):
        return f"{pretty_env(self.env)} ⊢ {pretty(self.term)} : {pretty(self.type)} @ {pretty_stage(self.stage)}"


@dataclass(frozen=True)
class KindEq:
    env: tuple
    left: object
    right: object
    stage: tuple

    def __str__(self):
        return f"{pretty_env(self.env)} ⊢ {pretty(self.left)} ≡ {pretty(self.right)} @ {pretty_stage(self.stage)}"


@dataclass(frozen=True)
class TypeEq:
    env: tuple
    left: object
    right: object
    kind: object
    stage: tuple

    def __str__(self):
        return (f"{pretty_env(self.env)} ⊢ {pretty(self.left)} ≡ {pretty(self.right)}"
                f" :: {pretty(self.kind)} @ {pretty_stage(self.stage)}")


@dataclass(frozen=True)
class TermEq:
    env: tuple
    left: object
    right: object
    type: object
    stage: tuple

    def __str__(self):
        return (f"{pretty_env(self.env)} ⊢ {pretty(self.left)} ≡ {pretty(self.right)}"
                f" : {pretty(self.type)} @ {pretty_stage(self.stage)}")


JUDGMENT_FORMS = (SigOk, EnvOk, KindOk, Kinding, Typing, KindEq, TypeEq, TermEq)


@dataclass(frozen=True)
class Derivation:
    rule: str
    conclusion: object
    premises: tuple = ()
    note: str = ""

    def to_json(self) -> dict:
        out = {"rule": self.rule, "conclusion": str(self.conclusion),
               "premises": [p.to_json() for p in self.premises]}
        if self.note:
            out["note"] = self.note
        return out

    def rules(self):
        yield self.rule
        for p in self.premises:
            yield from p.rules()


class LmdTypeError(Exception):
    def __init__(self, rule: str, message: str, judgment=None, expected=None,
                 actual=None, stack=(), span=None):
        super().__init__(f"{rule}: {message}")
        self.rule = rule
        self.message = message
        self.judgment = judgment
        self.expected = expected
        self.actual = actual
        self.stack = tuple(stack)
        self.span = span


class NotEquivalent(LmdTypeError):
    def __init__(self, left, right, **kw):
        super().__init__("equivalence", f"{pretty(left)} is not equivalent to {pretty(right)}",
                         expected=right, actual=left, **kw)
        self.left = left
        self.right = right


# ---------------------------------------------------------------- percent erasure


def percent_erase(n):
    """Drop every ``%a P`` whose body is closed and stage-independent, to a fixpoint.

    ``P`` must have no free variables and no escape or CSP outside all of
    its own brackets; such a ``P`` types at any stage.
    """
    match n:
        case Csp(a, b):
            b2 = percent_erase(b)
            if not free_vars(b2) and not _stage_demanding(b2, 0):
                return b2
            return n if b2 is b else Csp(a, b2)
    out = n
    for i, c in enumerate(children(n)):
        c2 = percent_erase(c)
        if c2 is not c:
            out = replace_child(out, i, c2)
    return out


def _stage_demanding(n, depth: int) -> bool:
    match n:
        case Bracket(_, b) | Code(_, b):
            return _stage_demanding(b, depth + 1)
        case Escape(_, b) | Csp(_, b):
            return depth == 0 or _stage_demanding(b, depth - 1)
    return any(_stage_demanding(c, depth) for c in children(n))


# ---------------------------------------------------------------- the checker

_EQ_RULE = {RuleTag.BETA: "Q-Beta", RuleTag.DIAMOND: "Q-TBLTB",
            RuleTag.STAGE_BETA: "Q-Lambda", RuleTag.DELTA: "Q-Delta"}


@dataclass
class Checker:
    signature: Signature = field(default_factory=Signature)
    delta: bool = False
    max_steps: int = 100_000
    _frames: list = field(default_factory=list, repr=False)

    # -- error plumbing
    @contextlib.contextmanager
    def _frame(self, judgment):
        self._frames.append(judgment)
        try:
            yield
        finally:
            self._frames.pop()

    def _fail(self, rule, message, expected=None, actual=None):
        stack = [str(j) for j in self._frames[-5:]][::-1]
        judgment = self._frames[-1] if self._frames else None
        raise LmdTypeError(rule, message, judgment, expected, actual, stack)

    # -- signatures and environments
    def wf_signature(self, signature=None) -> Derivation:
        sig = self.signature if signature is None else signature
        deriv = Derivation("Sig-Empty", SigOk(Signature()))
        prefix = Signature()
        for d in sig.decls:
            sub = Checker(prefix, self.delta, self.max_steps)
            if d.name in prefix.names() or d.name.isdigit():
                self._fail("Sig-Decl", f"duplicate declaration of {d.name!r}")
            with self._frame(SigOk(prefix.extend(d))):
                if isinstance(d, TypeConstDecl):
                    prem = sub.wf_kind((), d.kind, ())
                    rule = "Sig-TConst"
                else:
                    prem = sub.expect_star((), d.type, ())
                    rule = "Sig-Const"
            prefix = prefix.extend(d)
            deriv = Derivation(rule, SigOk(prefix), (deriv, prem))
        return deriv

    def wf_env(self, env) -> Derivation:
        deriv = Derivation("Env-Empty", EnvOk(()))
        seen = set()
        for i, e in enumerate(env):
            if e.var in seen:
                self._fail("Env-Var", f"duplicate variable {e.var!r} in environment")
            seen.add(e.var)
            with self._frame(EnvOk(tuple(env[: i + 1]))):
                prem = self.expect_star(tuple(env[:i]), e.type, e.stage)
            deriv = Derivation("Env-Var", EnvOk(tuple(env[: i + 1])), (deriv, prem))
        return deriv

    # -- kinds
    def wf_kind(self, env, kind, stage) -> Derivation:
        env, stage = tuple(env), tuple(stage)
        j = KindOk(env, kind, stage)
        with self._frame(j):
            match kind:
                case Star():
                    return Derivation("W-Star", j)
                case KPi(x, dom, body):
                    d1 = self.expect_star(env, dom, stage)
                    x2, body = self._bind_var(env, x, body)
                    d2 = self.wf_kind(env + (Entry(x2, dom, stage),), body, stage)
                    return Derivation("W-Abs", j, (d1, d2))
        raise TypeError(f"not a kind: {kind!r}")

    def _bind_var(self, env, x, body):
        if env_lookup(env, x) is None:
            return x, body
        y = fresh(x, {e.var for e in env} | free_vars(body))
        return y, subst_term(body, x, Var(y))

    def _bind_stage(self, env, stage, a, body):
        taken = env_ftv(env) | set(stage)
        if a not in taken:
            return a, body
        b = fresh(a, taken | free_stage_vars(body))
        return b, subst_stage(body, a, (b,))

    # -- kinding
    def infer_kind(self, env, ty, stage):
        """Synthesize ``K`` with ``env ⊢ ty :: K @ stage``.

        When the direct attempt fails and ``ty`` has no free term variables,
        kinding is retried at each shorter prefix of the stage and lifted back
        with K-Csp.
        """
        env, stage = tuple(env), tuple(stage)
        try:
            return self._kind_direct(env, ty, stage)
        except LmdTypeError as err:
            if not stage or free_vars(ty):
                raise
            for k in range(len(stage) - 1, -1, -1):
                try:
                    kind, d = self._kind_direct(env, ty, stage[:k])
                except LmdTypeError:
                    continue
                if not isinstance(kind, Star):
                    continue
                for m in range(k + 1, len(stage) + 1):
                    d = Derivation("K-Csp", Kinding(env, ty, STAR, stage[:m]), (d,))
                return STAR, d
            raise err

    def _kind_direct(self, env, ty, stage):
        j = Kinding(env, ty, None, stage)
        with self._frame(j):
            match ty:
                case TConst(name):
                    kind = self.signature.kind_of(name)
                    if kind is None:
                        self._fail("K-TConst", f"unknown type constant {name!r}")
                    return kind, Derivation("K-TConst", Kinding(env, ty, kind, stage))
                case Pi(x, dom, cod):
                    d1 = self.expect_star(env, dom, stage)
                    x2, cod2 = self._bind_var(env, x, cod)
                    d2 = self.expect_star(env + (Entry(x2, dom, stage),), cod2, stage)
                    return STAR, Derivation("K-Abs", Kinding(env, ty, STAR, stage), (d1, d2))
                case TApp(head, arg):
                    hk, d1 = self.infer_kind(env, head, stage)
                    if not isinstance(hk, KPi):
                        self._fail("K-App", f"type {pretty(head)} of kind {pretty(hk)} "
                                   f"is applied to the term {pretty(arg)}",
                                   expected="Pi-kind", actual=hk)
                    d2 = self.check_type(env, arg, hk.dom, stage)
                    kind = subst_term(hk.body, hk.var, arg)
                    return kind, Derivation("K-App", Kinding(env, ty, kind, stage), (d1, d2))
                case Code(a, body):
                    d = self.expect_star(env, body, stage + (a,))
                    return STAR, Derivation("K-TW", Kinding(env, ty, STAR, stage), (d,))
                case ForallStage(a, body):
                    a2, body2 = self._bind_stage(env, stage, a, body)
                    kind, d = self.infer_kind(env, body2, stage)
                    return kind, Derivation("K-Gen", Kinding(env, ty, kind, stage), (d,),
                                            note=f"bound as {a2}")
        raise TypeError(f"not a type: {ty!r}")

    def expect_star(self, env, ty, stage) -> Derivation:
        kind, d = self.infer_kind(env, ty, stage)
        if isinstance(kind, Star):
            return d
        self._fail("K-Conv", f"{pretty(ty)} has kind {pretty(kind)}, expected a proper type",
                   expected=STAR, actual=kind)

    # -- typing
    def infer_type(self, env, term, stage):
        """Synthesize ``τ`` with ``env ⊢ term : τ @ stage``; returns ``(τ, derivation)``."""
        env, stage = tuple(env), tuple(stage)
        with self._frame(Typing(env, term, None, stage)):
            ty, rule, prems, note = self._infer(env, term, stage)
        return ty, Derivation(rule, Typing(env, term, ty, stage), prems, note)

    def _infer(self, env, term, stage):
        match term:
            case Const(c):
                ty = self.signature.type_of(c)
                if ty is None:
                    self._fail("T-Const", f"unknown constant {c!r}")
                return ty, "T-Const", (), ""
            case Var(x):
                e = env_lookup(env, x)
                if e is None:
                    self._fail("T-Var", f"unbound variable {x!r}")
                if e.stage != stage:
                    self._fail("T-Var", f"stage mismatch: {x} is declared at "
                               f"{pretty_stage(e.stage)} but used at {pretty_stage(stage)}",
                               expected=e.stage, actual=stage)
                return e.type, "T-Var", (), ""
            case Lam(x, annot, body):
                d1 = self.expect_star(env, annot, stage)
                x2, body2 = self._bind_var(env, x, body)
                ty, d2 = self.infer_type(env + (Entry(x2, annot, stage),), body2, stage)
                return Pi(x2, annot, ty), "T-Abs", (d1, d2), ""
            case App(fun, arg):
                fty, d1 = self.infer_type(env, fun, stage)
                if not isinstance(fty, Pi):
                    self._fail("T-App", f"applying {pretty(fun)} of non-function type {pretty(fty)}",
                               expected="Pi-type", actual=fty)
                d2 = self.check_type(env, arg, fty.dom, stage)
                return subst_term(fty.cod, fty.var, arg), "T-App", (d1, d2), ""
            case Bracket(a, body):
                ty, d = self.infer_type(env, body, stage + (a,))
                return Code(a, ty), "T-TB", (d,), ""
            case Escape(a, body):
                if not stage or stage[-1] != a:
                    self._fail("T-TBL", f"escape <|{a} used at stage {pretty_stage(stage)}, "
                               f"which does not end in {a}", expected=f"stage ending in {a}",
                               actual=stage)
                ty, d = self.infer_type(env, body, stage[:-1])
                if not (isinstance(ty, Code) and ty.sv == a):
                    self._fail("T-TBL", f"escaped term {pretty(body)} has type {pretty(ty)}, "
                               f"expected code type |>{a} _", expected=f"|>{a} _", actual=ty)
                return ty.body, "T-TBL", (d,), ""
            case StageLam(a, body):
                a2, body2 = self._bind_stage(env, stage, a, body)
                ty, d = self.infer_type(env, body2, stage)
                return ForallStage(a2, ty), "T-Gen", (d,), ""
            case StageApp(fun, st):
                fty, d = self.infer_type(env, fun, stage)
                if not isinstance(fty, ForallStage):
                    self._fail("T-Ins", f"stage application of {pretty(fun)} whose type "
                               f"{pretty(fty)} is not stage-closed (forall)",
                               expected="forall-type", actual=fty)
                return subst_stage(fty.body, fty.sv, st), "T-Ins", (d,), ""
            case Csp(a, body):
                if not stage or stage[-1] != a:
                    self._fail("T-Csp", f"%{a} used at stage {pretty_stage(stage)}, "
                               f"which does not end in {a}", expected=f"stage ending in {a}",
                               actual=stage)
                ty, d = self.infer_type(env, body, stage[:-1])
                dk = self.expect_star(env, ty, stage)
                return ty, "T-Csp", (d, dk), ""
        raise TypeError(f"not a term: {term!r}")

    def check_type(self, env, term, ty, stage) -> Derivation:
        env, stage = tuple(env), tuple(stage)
        got, d = self.infer_type(env, term, stage)
        if alpha_eq(got, ty):
            return d
        with self._frame(Typing(env, term, ty, stage)):
            deq = self.equiv_type(env, got, ty, STAR, stage)
        return Derivation("T-Conv", Typing(env, term, ty, stage), (d, deq))

    # -- equivalence
    def canon(self, node):
        """Normal form used for comparison, plus the rewrite steps taken."""
        steps = []
        while True:
            nf, red = normalize(node, "leftmost-outermost", self.max_steps, self.delta, deep=True)
            steps += [(_EQ_RULE[s.rule], s.before, s.after) for s in red]
            erased = percent_erase(nf)
            if alpha_eq(erased, nf):
                return nf, steps
            steps.append(("Q-Percent", nf, erased))
            node = erased

    def equiv_kind(self, env, k1, k2, stage) -> Derivation:
        env, stage = tuple(env), tuple(stage)
        j = KindEq(env, k1, k2, stage)
        with self._frame(j):
            if alpha_eq(k1, k2):
                return Derivation("QK-Refl", j)
            match k1, k2:
                case KPi(x, d1, b1), KPi(y, d2, b2):
                    dd = self.equiv_type(env, d1, d2, STAR, stage)
                    x2, b1 = self._bind_var(env, x, b1)
                    b2 = subst_term(b2, y, Var(x2))
                    db = self.equiv_kind(env + (Entry(x2, d1, stage),), b1, b2, stage)
                    return Derivation("QK-Abs", j, (dd, db))
            raise NotEquivalent(k1, k2, stack=[str(f) for f in self._frames[-5:]][::-1])

    def equiv_type(self, env, t1, t2, kind, stage) -> Derivation:
        env, stage = tuple(env), tuple(stage)
        if alpha_eq(t1, t2):
            return Derivation("QT-Refl", TypeEq(env, t1, t2, kind, stage))
        c1, _ = self.canon(t1)
        c2, _ = self.canon(t2)
        if not alpha_eq(c1, c2):
            l, r = first_mismatch(c1, c2)
            raise NotEquivalent(l, r, stack=[str(f) for f in self._frames[-5:]][::-1])
        return self._type_eq(env, t1, t2, kind, stage)

    def _type_eq(self, env, t1, t2, kind, stage) -> Derivation:
        j = TypeEq(env, t1, t2, kind, stage)
        if alpha_eq(t1, t2):
            return Derivation("QT-Refl", j)
        match t1, t2:
            case Pi(x, d1, c1), Pi(y, d2, c2):
                dd = self._type_eq(env, d1, d2, STAR, stage)
                x2, c1 = self._bind_var(env, x, c1)
                c2 = subst_term(c2, y, Var(x2))
                dc = self._type_eq(env + (Entry(x2, d1, stage),), c1, c2, STAR, stage)
                return Derivation("QT-Abs", j, (dd, dc))
            case TApp(h1, m1), TApp(h2, m2):
                try:
                    hk, _ = self.infer_kind(env, h1, stage)
                except LmdTypeError:
                    hk = None
                dom = hk.dom if isinstance(hk, KPi) else None
                dh = self._type_eq(env, h1, h2, hk, stage)
                dm = self.equiv_term(env, m1, m2, dom, stage)
                return Derivation("QT-App", j, (dh, dm))
            case Code(a, b1), Code(_, b2):
                return Derivation("QT-TW", j, (self._type_eq(env, b1, b2, STAR, stage + (a,)),))
            case ForallStage(a, b1), ForallStage(b, b2):
                a2, b1 = self._bind_stage(env, stage, a, b1)
                b2 = subst_stage(b2, b, (a2,))
                return Derivation("QT-Gen", j, (self._type_eq(env, b1, b2, kind, stage),))
        raise NotEquivalent(t1, t2)

    def equiv_term(self, env, m, n, ty, stage) -> Derivation:
        env, stage = tuple(env), tuple(stage)
        j = TermEq(env, m, n, ty, stage)
        if alpha_eq(m, n):
            return Derivation("Q-Refl", j)
        c1, s1 = self.canon(m)
        c2, s2 = self.canon(n)
        if not alpha_eq(c1, c2):
            l, r = first_mismatch(c1, c2)
            raise NotEquivalent(l, r, stack=[str(f) for f in self._frames[-5:]][::-1])
        left = self._chain(env, m, s1, ty, stage)
        right = self._chain(env, n, s2, ty, stage)
        right = Derivation("Q-Sym", TermEq(env, c2, n, ty, stage), (right,))
        return Derivation("Q-Trans", j, (left, right))

    def _chain(self, env, start, steps, ty, stage) -> Derivation:
        d = Derivation("Q-Refl", TermEq(env, start, start, ty, stage))
        for rule, before, after in steps:
            step = Derivation(rule, TermEq(env, before, after, ty, stage))
            d = Derivation("Q-Trans", TermEq(env, start, after, ty, stage), (d, step))
        return d


def first_mismatch(a, b):
    """The outermost pair of differing sub-nodes of two non-alpha-equal nodes."""
    if type(a) is not type(b):
        return a, b
    ka, kb = children(a), children(b)
    if len(ka) != len(kb):
        return a, b
    diffs = [(x, y) for x, y in zip(ka, kb) if not alpha_eq(x, y)]
    if len(diffs) == 1 and type(diffs[0][0]) is type(diffs[0][1]):
        return first_mismatch(*diffs[0])
    return a, b


# ---------------------------------------------------------------- derivation validation


class InvalidDerivation(Exception):
    pass


def validate(d: Derivation, checker: Checker) -> int:
    """Re-check every node of ``d`` against its rule schema; returns the node count."""
    count = 1
    for p in d.premises:
        count += validate(p, checker)
    try:
        _validate_node(d, checker)
    except (AttributeError, TypeError, ValueError, IndexError) as err:
        # the node's shape does not fit the rule it names
        raise InvalidDerivation(f"{d.rule}: malformed node ({err}) in {d.conclusion}") from err
    return count


def _need(cond, d, msg):
    if not cond:
        raise InvalidDerivation(f"{d.rule}: {msg} in {d.conclusion}")


def _ty(p):
    return p.conclusion.type


def _validate_node(d: Derivation, ch: Checker):
    c, ps, r = d.conclusion, d.premises, d.rule
    _need(isinstance(c, JUDGMENT_FORMS), d, "conclusion is not a judgment")
    if r.startswith("T-") and r != "T-Conv":
        _need(isinstance(c, Typing), d, "typing rule without typing conclusion")
        for p in ps:
            _need(p.conclusion.env[: len(c.env)] == c.env, d, "premise environment differs")
    match r:
        case "T-Const":
            _need(alpha_eq(ch.signature.type_of(c.term.name), c.type), d, "signature type")
        case "T-Var":
            e = env_lookup(c.env, c.term.name)
            _need(e is not None and e.stage == c.stage and alpha_eq(e.type, c.type), d, "entry")
        case "T-Abs":
            k, b = ps
            _need(isinstance(k.conclusion, Kinding) and alpha_eq(k.conclusion.type, c.term.annot), d, "annot")
            bj = b.conclusion
            x = bj.env[-1].var
            _need(bj.env[-1].stage == c.stage and alpha_eq(bj.env[-1].type, c.term.annot), d, "binder")
            _need(alpha_eq(Lam(x, c.term.annot, bj.term), c.term), d, "body")
            _need(alpha_eq(Pi(x, c.term.annot, bj.type), c.type), d, "Pi type")
        case "T-App":
            f, a = ps
            fty = _ty(f)
            _need(isinstance(fty, Pi) and alpha_eq(f.conclusion.term, c.term.fun), d, "function")
            _need(alpha_eq(_ty(a), fty.dom) and alpha_eq(a.conclusion.term, c.term.arg), d, "argument")
            _need(alpha_eq(subst_term(fty.cod, fty.var, c.term.arg), c.type), d, "result type")
        case "T-Conv":
            t, q = ps
            _need(isinstance(q.conclusion, TypeEq), d, "equivalence premise")
            _need(alpha_eq(t.conclusion.term, c.term), d, "term")
            _need(alpha_eq(q.conclusion.left, _ty(t)) and alpha_eq(q.conclusion.right, c.type), d, "types")
        case "T-TB":
            (p,) = ps
            _need(p.conclusion.stage == c.stage + (c.term.sv,), d, "stage")
            _need(alpha_eq(Code(c.term.sv, _ty(p)), c.type), d, "code type")
        case "T-TBL":
            (p,) = ps
            _need(p.conclusion.stage + (c.term.sv,) == c.stage, d, "stage")
            _need(alpha_eq(_ty(p), Code(c.term.sv, c.type)), d, "code type")
        case "T-Gen":
            (p,) = ps
            a = _ty_binder(c.type)
            _need(a is not None and a not in env_ftv(c.env) | set(c.stage), d, "freshness")
            _need(alpha_eq(StageLam(a, p.conclusion.term), c.term), d, "body")
            _need(alpha_eq(ForallStage(a, _ty(p)), c.type), d, "forall type")
        case "T-Ins":
            (p,) = ps
            fty = _ty(p)
            _need(isinstance(fty, ForallStage), d, "premise not forall")
            _need(alpha_eq(subst_stage(fty.body, fty.sv, c.term.stage), c.type), d, "instance")
        case "T-Csp":
            p, k = ps
            _need(p.conclusion.stage + (c.term.sv,) == c.stage, d, "stage")
            _need(alpha_eq(_ty(p), c.type), d, "type")
            _need(isinstance(k.conclusion, Kinding) and k.conclusion.stage == c.stage, d, "implicit CSP kinding")
        case "K-TConst":
            _need(alpha_eq(ch.signature.kind_of(c.type.name), c.kind), d, "signature kind")
        case "K-Abs" | "K-TW":
            _need(isinstance(c.kind, Star), d, "kind")
            if r == "K-TW":
                _need(ps[0].conclusion.stage == c.stage + (c.type.sv,), d, "stage")
        case "K-App":
            h, m = ps
            hk = h.conclusion.kind
            _need(isinstance(hk, KPi), d, "head kind")
            _need(alpha_eq(subst_term(hk.body, hk.var, c.type.arg), c.kind), d, "result kind")
        case "K-Gen":
            _need(alpha_eq(ps[0].conclusion.kind, c.kind), d, "kind")
        case "K-Csp":
            (p,) = ps
            _need(p.conclusion.stage == c.stage[:-1] and isinstance(p.conclusion.kind, Star), d, "lift")
            _need(not free_vars(c.type), d, "open type lifted")
        case "W-Star":
            _need(isinstance(c.kind, Star), d, "kind")
        case "W-Abs":
            _need(isinstance(c.kind, KPi), d, "kind")
        case "QT-Refl" | "QK-Refl" | "Q-Refl":
            _need(alpha_eq(c.left, c.right), d, "sides differ")
        case "Q-Sym":
            (p,) = ps
            _need(alpha_eq(p.conclusion.left, c.right) and alpha_eq(p.conclusion.right, c.left), d, "swap")
        case "Q-Trans":
            a, b = ps
            _need(alpha_eq(a.conclusion.left, c.left) and alpha_eq(a.conclusion.right, b.conclusion.left)
                  and alpha_eq(b.conclusion.right, c.right), d, "chain")
        case "Q-Beta" | "Q-TBLTB" | "Q-Lambda" | "Q-Delta":
            tag = {v: k for k, v in _EQ_RULE.items()}[r]
            ok = any(alpha_eq(contract_at(c.left, path, rule), c.right)
                     for path, rule in redex_positions(c.left, ch.delta, deep=True) if rule == tag)
            _need(ok, d, "not a one-step contraction")
        case "Q-Percent":
            _need(alpha_eq(percent_erase(c.left), c.right), d, "not a CSP erasure")
        case "QT-Abs" | "QT-App" | "QT-TW" | "QT-Gen" | "QK-Abs":
            _need(type(c.left) is type(c.right), d, "constructor mismatch")
            if r == "QT-TW":
                _need(c.left.sv == c.right.sv and ps[0].conclusion.stage == c.stage + (c.left.sv,), d, "stage")
        case "Sig-Empty" | "Env-Empty":
            _need(not ps, d, "axiom with premises")
        case "Sig-TConst" | "Sig-Const" | "Env-Var":
            _need(len(ps) == 2, d, "premises")
        case _:
            raise InvalidDerivation(f"unknown rule {r}")


def _ty_binder(ty):
    return ty.sv if isinstance(ty, ForallStage) else None
