import numpy as np
import pytest

from kacspec._accel import HAVE_NUMBA
from kacspec.spectral import FourierGrid, SpectralState

BACKENDS = ["numba", "numpy"] if HAVE_NUMBA else ["numpy"]


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture(scope="session")
def grid():
    return FourierGrid(32.0, 257)


@pytest.fixture(scope="session")
def gaussian(grid):
    return SpectralState.from_function(grid, lambda x: np.exp(-0.5 * x * x))


@pytest.fixture(scope="session")
def laplace(grid):
    return SpectralState.from_function(grid, lambda x: 1.0 / (1.0 + x * x))


# acceptance verdicts, filled in by tests/test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
