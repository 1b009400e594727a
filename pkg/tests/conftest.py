import pytest

from helpers import ACCEPTANCE_LINES
from rcrdesign import BasisSpec


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def linear():
    return BasisSpec.linear()


@pytest.fixture
def quadratic():
    return BasisSpec.quadratic()
