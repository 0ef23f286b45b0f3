import numpy as np
import pytest

from oamturb.grid import make_grid

WAVELENGTH = 1064e-9
W0 = 0.03
L = 500.0


@pytest.fixture(scope="session")
def grid():
    return make_grid(256, 0.4)


@pytest.fixture(scope="session")
def small_grid():
    return make_grid(128, 0.4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_density_matrix(rng, rank=4):
    A = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    rho = A @ A.conj().T
    return rho / np.trace(rho).real


def random_unitary2(rng):
    A = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(A)
    return q * (np.diag(r) / np.abs(np.diag(r)))


# One line per acceptance criterion, printed after the run (see test_acceptance.py).
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
