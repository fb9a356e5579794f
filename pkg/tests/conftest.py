import numpy as np
import pytest

from spinwitness.spin_models import SpinChainModel


@pytest.fixture
def dimer():
    return SpinChainModel.dimer(4.0, g=2.0)


@pytest.fixture
def altdimer():
    return SpinChainModel.alternating_dimer(4.0, 1.0, g=2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_density(rng, dim, rank=None):
    rank = rank or dim
    a = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
