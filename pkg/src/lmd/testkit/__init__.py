"""Term generator, brute-force oracles and metatheory property suites."""

from .generator import GenConfig, GeneratedCase, GenFail, GeneratorBug, gen_cases, gen_typed, inhabit
from .oracles import oracle_decompose_all, oracle_is_value
from .suites import (
    SUITES, SuiteReport, shrink, sn_check, staged_steps_in_full, suite_confluence,
    suite_decomposition, suite_natural, suite_preservation, suite_sn, suite_staged_subset,
)
