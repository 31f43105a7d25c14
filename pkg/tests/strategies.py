"""Hypothesis strategies for raw (not necessarily well-typed) syntax trees."""

from hypothesis import strategies as st

from lmd.kernel import (
    App, Bracket, Code, Const, Csp, Escape, ForallStage, Lam, Pi, StageApp, StageLam,
    TApp, TConst, Var,
)
from lmd.testkit import GenConfig, gen_typed

names = st.sampled_from(["x", "y", "z"])
svars = st.sampled_from(["a", "b", "c"])
stages = st.lists(svars, max_size=3).map(tuple)
consts = st.sampled_from(["add", "nil", "cons", "0", "7", "true"])


def _types(terms):
    base = st.one_of(st.just(TConst("Int")), st.just(TConst("Bool")))
    return st.recursive(
        base,
        lambda t: st.one_of(
            st.builds(Pi, names, t, t),
            st.builds(TApp, st.just(TConst("Vector")), terms),
            st.builds(Code, svars, t),
            st.builds(ForallStage, svars, t),
        ),
        max_leaves=4,
    )


_leaf_terms = st.one_of(st.builds(Var, names), st.builds(Const, consts))
small_types = _types(_leaf_terms)

raw_terms = st.recursive(
    _leaf_terms,
    lambda t: st.one_of(
        st.builds(Lam, names, small_types, t),
        st.builds(App, t, t),
        st.builds(Bracket, svars, t),
        st.builds(Escape, svars, t),
        st.builds(StageLam, svars, t),
        st.builds(StageApp, t, stages),
        st.builds(Csp, svars, t),
    ),
    max_leaves=12,
)

raw_types = _types(raw_terms)

typed_cases = st.integers(0, 10**6).map(lambda s: gen_typed(GenConfig(seed=s)))
