import numpy as np
import pytest

from qhd_lab import objectives
from qhd_lab.mesh import make_grid


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def sine_grid():
    return make_grid(objectives.sine_1d().box, 32)


def pytest_terminal_summary(terminalreporter):
    from tests import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.LINES:
            terminalreporter.write_line(line)
