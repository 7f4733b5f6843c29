import sys
from pathlib import Path

import pytest

from ramanmem import PAPER_NOMINAL, Discretization, build_greens, derive_couplings

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def nominal_couplings():
    return derive_couplings(PAPER_NOMINAL)


@pytest.fixture(scope="session")
def nominal_greens(nominal_couplings):
    return build_greens(nominal_couplings, Discretization(128, 128))


@pytest.fixture(scope="session")
def passive_couplings(nominal_couplings):
    return nominal_couplings.with_ratio(0.0)


@pytest.fixture(scope="session")
def passive_greens(passive_couplings):
    return build_greens(passive_couplings, Discretization(128, 128))


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def pytest_terminal_summary(terminalreporter):
    import acceptance_report

    lines = acceptance_report.summary()
    if lines:
        terminalreporter.section("acceptance criteria")
        for text in lines:
            terminalreporter.write_line(text)
