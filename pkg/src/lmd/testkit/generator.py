"""Goal-directed generation of well-typed terms.

``Generator.gen`` builds a term for a requested type, stage and environment
by choosing a typing rule whose conclusion can match and recursing on its
premises.  Every result is re-checked by the type checker; a case that fails
the check is a generator bug and raises instead of being dropped.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from ..kernel import (
    App, Bracket, Code, Const, ConstDecl, Csp, Entry, Escape, ForallStage, INT, Lam,
    Pi, Signature, StageApp, StageLam, TApp, TConst, Var, alpha_eq, arrow, env_ftv,
    free_stage_vars, subst_stage, subst_term,
)
from ..prelude import prelude_signature
from ..typesystem import Checker, LmdTypeError

DEFAULT_WEIGHTS = {
    "var": 4, "const": 2, "lam": 4, "app": 3, "bracket": 4, "escape": 2,
    "stagelam": 4, "csp": 2, "run": 2, "instantiate": 1, "vacuous": 1,
    "dep": 2, "add": 1,
}

ENV_MODES = ("closed", "staged", "any")


class GenFail(Exception):
    """The chosen rule cannot produce the goal; try another."""


class GeneratorBug(AssertionError):
    pass


@dataclass
class GenConfig:
    seed: int = 0
    max_depth: int = 4
    stage_pool: tuple = ("a", "b")
    signature: Signature | None = None
    weights: dict = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    env_mode: str = "any"
    target_stage: tuple | None = None
    attempts: int = 50

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        if any(w < 0 for w in self.weights.values()):
            raise ValueError("weights must be nonnegative")
        if not 1 <= len(self.stage_pool) <= 2:
            raise ValueError("stage pool holds one or two names")
        if self.env_mode not in ENV_MODES:
            raise ValueError(f"env_mode must be one of {ENV_MODES}")
        if self.signature is None:
            self.signature = prelude_signature()


@dataclass(frozen=True)
class GeneratedCase:
    env: tuple
    term: object
    type: object
    stage: tuple
    trace: tuple
    seed: object = None


class Generator:
    def __init__(self, config: GenConfig, rng: random.Random):
        self.config = config
        self.rng = rng
        self.sig = config.signature
        self.checker = Checker(self.sig, delta=True)
        self.pool = tuple(config.stage_pool)
        self.trace: list = []
        self._vars = 0
        self._canon: dict = {}

    # -- helpers
    def canon(self, ty):
        if ty not in self._canon:
            self._canon[ty] = self.checker.canon(ty)[0]
        return self._canon[ty]

    def same_type(self, a, b) -> bool:
        return alpha_eq(self.canon(a), self.canon(b))

    def new_var(self) -> str:
        self._vars += 1
        return f"v{self._vars}"

    def fresh_stage(self, env, stage, scope, ty, prefer=None):
        taken = env_ftv(env) | set(stage) | set(scope) | free_stage_vars(ty)
        if prefer in self.pool and prefer not in taken:
            return prefer
        free = [s for s in self.pool if s not in taken]
        if not free:
            raise GenFail("stage pool exhausted")
        return self.rng.choice(free)

    def vector_index(self, ty):
        """The literal length of a ``Vector`` type, or ``None``."""
        c = self.canon(ty)
        if isinstance(c, TApp) and c.head == TConst("Vector") and isinstance(c.arg, Const) and c.arg.is_literal:
            return int(c.arg.name)
        return None

    def index_term(self, k: int, depth: int = 2):
        """A closed Int term evaluating to ``k``: a literal, an addition or an identity application."""
        forms = ["lit"]
        if depth > 0:
            forms.append("id")
            if k >= 1:
                forms.append("add")
        match self.rng.choice(forms):
            case "lit":
                return Const(str(k))
            case "add":
                return App(App(Const("add"), self.index_term(k - 1, depth - 1)), Const("1"))
            case _:
                x = self.new_var()
                return App(Lam(x, INT, Var(x)), self.index_term(k, depth - 1))

    def rand_type(self, scope, depth: int = 2):
        opts = [("Int", 4), ("Bool", 1), ("Vector", 2)]
        if depth > 0:
            opts += [("arrow", 2), ("forall", 1)]
            if scope:
                opts.append(("code", 3))
        kind = self.rng.choices([o for o, _ in opts], [w for _, w in opts])[0]
        match kind:
            case "Int":
                return INT
            case "Bool":
                return TConst("Bool")
            case "Vector":
                return TApp(TConst("Vector"), self.index_term(self.rng.randrange(4), 1))
            case "arrow":
                return arrow(self.rand_type(scope, depth - 1), self.rand_type(scope, depth - 1))
            case "code":
                return Code(self.rng.choice(sorted(scope)), self.rand_type(scope, depth - 1))
        free = [s for s in self.pool if s not in scope]
        if not free:
            return self.rand_type(scope, 0)
        g = self.rng.choice(free)
        return ForallStage(g, Code(g, self.rand_type(set(scope) | {g}, depth - 1)))

    # -- the generator proper
    def gen(self, env, ty, stage, depth, scope):
        rules = self._applicable(env, ty, stage, depth)
        while rules:
            names = [r for r, _ in rules]
            weights = [w for _, w in rules]
            if sum(weights) <= 0:
                break
            rule = self.rng.choices(names, weights)[0]
            rules = [r for r in rules if r[0] != rule]
            mark = len(self.trace)
            try:
                self.trace.append(rule)
                return getattr(self, f"_rule_{rule}")(env, ty, stage, depth, scope)
            except GenFail:
                del self.trace[mark:]
        self.trace.append("inhabit")
        return self.inhabit(env, ty, stage, scope)

    def _applicable(self, env, ty, stage, depth):
        w = self.config.weights
        out = []
        if self._var_candidates(env, ty, stage):
            out.append(("var", w["var"] * (3 if depth <= 1 else 1)))
        if self._const_candidates(ty):
            out.append(("const", w["const"] * (3 if depth <= 1 else 1)))
        if depth <= 0:
            return out
        match ty:
            case Pi():
                out.append(("lam", w["lam"] * 2))
            case Code():
                out.append(("bracket", w["bracket"] * 2))
            case ForallStage():
                out.append(("stagelam", w["stagelam"] * 2))
        if stage:
            out += [("escape", w["escape"]), ("csp", w["csp"])]
        out += [("app", w["app"]), ("run", w["run"]), ("vacuous", w["vacuous"])]
        if free_stage_vars(ty):
            out.append(("instantiate", w["instantiate"]))
        if self.same_type(ty, INT):
            out += [("dep", w["dep"]), ("add", w["add"])]
        elif self.vector_index(ty) is not None:
            out.append(("dep", w["dep"]))
        return out

    def _var_candidates(self, env, ty, stage):
        return [e.var for e in env if e.stage == tuple(stage) and self.same_type(e.type, ty)]

    def _const_candidates(self, ty):
        out = [Const(d.name) for d in self.sig.decls
               if isinstance(d, ConstDecl) and self.same_type(d.type, ty)]
        if self.same_type(ty, INT):
            out.append(Const(str(self.rng.randrange(6))))
        return out

    def _rule_var(self, env, ty, stage, depth, scope):
        return Var(self.rng.choice(self._var_candidates(env, ty, stage)))

    def _rule_const(self, env, ty, stage, depth, scope):
        return self.rng.choice(self._const_candidates(ty))

    def _rule_lam(self, env, ty, stage, depth, scope):
        x = self.new_var()
        body_ty = subst_term(ty.cod, ty.var, Var(x))
        body = self.gen(env + (Entry(x, ty.dom, stage),), body_ty, stage, depth - 1, scope)
        return Lam(x, ty.dom, body)

    def _rule_bracket(self, env, ty, stage, depth, scope):
        return Bracket(ty.sv, self.gen(env, ty.body, stage + (ty.sv,), depth - 1, scope))

    def _rule_stagelam(self, env, ty, stage, depth, scope):
        g = self.fresh_stage(env, stage, scope, ty, prefer=ty.sv)
        body_ty = subst_stage(ty.body, ty.sv, (g,))
        return StageLam(g, self.gen(env, body_ty, stage, depth - 1, set(scope) | {g}))

    def _rule_escape(self, env, ty, stage, depth, scope):
        a = stage[-1]
        return Escape(a, self.gen(env, Code(a, ty), stage[:-1], depth - 1, scope))

    def _rule_csp(self, env, ty, stage, depth, scope):
        a = stage[-1]
        return Csp(a, self.gen(env, ty, stage[:-1], depth - 1, scope))

    def _rule_app(self, env, ty, stage, depth, scope):
        dom = self.rand_type(scope, 1)
        fun = self.gen(env, arrow(dom, ty), stage, depth - 1, scope)
        return App(fun, self.gen(env, dom, stage, depth - 1, scope))

    def _rule_run(self, env, ty, stage, depth, scope):
        g = self.fresh_stage(env, stage, scope, ty)
        inner = self.gen(env, ForallStage(g, Code(g, ty)), stage, depth - 1, scope)
        return StageApp(inner, ())

    def _rule_instantiate(self, env, ty, stage, depth, scope):
        c = self.rng.choice(sorted(free_stage_vars(ty)))
        g = self.fresh_stage(env, stage, scope, ty)
        inner = self.gen(env, ForallStage(g, subst_stage(ty, c, (g,))), stage, depth - 1, scope)
        return StageApp(inner, (c,))

    def _rule_vacuous(self, env, ty, stage, depth, scope):
        g = self.fresh_stage(env, stage, scope, ty)
        options = [()] + [(c,) for c in sorted(scope)]
        if len(scope) >= 2:
            options.append(tuple(sorted(scope)))
        inner = self.gen(env, ForallStage(g, ty), stage, depth - 1, scope)
        return StageApp(inner, self.rng.choice(options))

    def _rule_add(self, env, ty, stage, depth, scope):
        a = self.gen(env, INT, stage, depth - 1, scope)
        return App(App(Const("add"), a), self.gen(env, INT, stage, depth - 1, scope))

    def _rule_dep(self, env, ty, stage, depth, scope):
        k = self.vector_index(ty)
        if k is None:
            name, n = "head", self.rng.randrange(3)
        elif k >= 1 and self.rng.random() < 0.6:
            name, n = "cons", k - 1
        else:
            name, n = "tail", k
        if self.sig.type_of(name) is None:
            raise GenFail(f"no {name} in signature")
        idx = self.index_term(n, 1)
        fty = self.sig.type_of(name)
        fty = subst_term(fty.cod, fty.var, idx)
        term = App(Const(name), idx)
        while isinstance(fty, Pi):
            arg = self.gen(env, fty.dom, stage, depth - 1, scope)
            term = App(term, arg)
            fty = subst_term(fty.cod, fty.var, arg)
        return term

    # -- canonical inhabitants
    def inhabit(self, env, ty, stage, scope):
        match ty:
            case Pi(x, dom, cod):
                v = self.new_var()
                body = self.inhabit(env + (Entry(v, dom, stage),), subst_term(cod, x, Var(v)), stage, scope)
                return Lam(v, dom, body)
            case Code(a, body):
                return Bracket(a, self.inhabit(env, body, stage + (a,), scope))
            case ForallStage(a, body):
                g = self.fresh_stage(env, stage, scope, ty, prefer=a)
                return StageLam(g, self.inhabit(env, subst_stage(body, a, (g,)), stage, set(scope) | {g}))
        if self.same_type(ty, INT):
            return Const("0")
        k = self.vector_index(ty)
        if k is not None:
            out = Const("nil")
            for i in range(k):
                out = App(App(App(Const("cons"), Const(str(i))), Const("0")), out)
            return out
        consts = self._const_candidates(ty)
        if consts:
            return consts[0]
        raise GenFail(f"no inhabitant for {ty}")


def _top(config: GenConfig, rng: random.Random):
    mode = config.env_mode
    if mode == "any":
        mode = rng.choice(["closed", "staged"])
    env = () if mode == "closed" else (Entry("y", INT, ("a",)),)
    stage = config.target_stage
    if stage is None:
        stage = rng.choice([(), ("a",)])
    scope = {"a"} if env or stage else set()
    return env, tuple(stage), scope


def gen_typed(config: GenConfig) -> GeneratedCase:
    """One well-typed case; deterministic in ``config.seed``."""
    for attempt in range(config.attempts):
        rng = random.Random(f"{config.seed}/{attempt}")
        g = Generator(config, rng)
        env, stage, scope = _top(config, rng)
        ty = g.rand_type(scope, 2)
        try:
            term = g.gen(env, ty, stage, config.max_depth, scope)
        except GenFail:
            continue
        try:
            got, _ = g.checker.infer_type(env, term, stage)
            g.checker.equiv_type(env, got, ty, None, stage)
        except LmdTypeError as err:
            raise GeneratorBug(f"generated ill-typed term {term!r}: {err}") from err
        return GeneratedCase(env, term, ty, stage, tuple(g.trace), config.seed)
    raise GenFail(f"generation budget exhausted for seed {config.seed}")


def gen_cases(n: int, seed: int = 0, **kw):
    """``n`` cases with seeds derived from ``seed``."""
    return [gen_typed(GenConfig(seed=seed * 100_003 + i, **kw)) for i in range(n)]


def inhabit(signature: Signature, env, ty, stage, scope=None, pool=("a", "b")):
    g = Generator(GenConfig(signature=signature, stage_pool=pool), random.Random(0))
    scope = set(scope) if scope is not None else env_ftv(env) | set(stage) | free_stage_vars(ty)
    return g.inhabit(tuple(env), ty, tuple(stage), scope)
