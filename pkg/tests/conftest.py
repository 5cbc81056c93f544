import numpy as np
import pytest

from rcns.grid import RadialGrid
from rcns.model import ModelParams

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def params2():
    return ModelParams(n=2, alpha=0.5, gamma=2.0, A=1.0)


@pytest.fixture
def grid2():
    return RadialGrid.uniform(400, 10.0, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
