import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from kakeya_lab import PrimeModulus, parallel_pencil_family  # noqa: E402


@pytest.fixture(scope="session")
def pencil5():
    return parallel_pencil_family(None, PrimeModulus(5, 4), 6)


@pytest.fixture(scope="session")
def pencil3():
    return parallel_pencil_family(None, PrimeModulus(3, 4), 4)


# one verdict line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
