import numpy as np
import pytest

from latticeheat.kernel_exact import QuadSpec

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def tight():
    return QuadSpec(target_rel_tol=1e-14)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
