import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gxmfg import Graphex, make_sis, solve  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def sis50():
    return make_sis(T=50)


@pytest.fixture(scope="session")
def sis50_solution(sis50):
    """SIS, T=50, M=10, 500 mirror steps, k_max=8."""
    return solve(sis50, Graphex(0.5), M=10, tau_max=500, k_max=8)


@pytest.fixture
def acceptance():
    """Record one pass/fail line per criterion and fail the test on a miss."""

    def record(name, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
