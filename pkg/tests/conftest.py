import pytest

from lmd.prelude import prelude_signature
from lmd.surface import parse_term, parse_type
from lmd.typesystem import Checker

SIG = prelude_signature()
CONSTS = set(SIG.const_names())


def term(text):
    return parse_term(text, CONSTS)


def ty(text):
    return parse_type(text, CONSTS)


@pytest.fixture
def checker():
    return Checker(SIG, delta=True)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
