import numpy as np
import pytest

from h22sigma.lattice import Lattice
from h22sigma.model import ModelParams, PinningScheme

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def two_site():
    return ModelParams(1.0, Lattice.chain(2), PinningScheme.uniform(0.5))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
