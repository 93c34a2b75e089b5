import math

import numpy as np
import pytest

from heisenphase.core import Params
from heisenphase.grid import PhaseFn, self_dual_grids
from heisenphase.reps import phase_mesh


@pytest.fixture(scope="session")
def params():
    return Params(hbar=1.0, tau=1.0, sigma=2.0, upsilon=math.sqrt(2.0))


@pytest.fixture(scope="session")
def grids():
    """(config, phase) pair at N = 64."""
    return self_dual_grids(1.0, 64)


@pytest.fixture(scope="session")
def config(grids):
    return grids[0]


@pytest.fixture(scope="session")
def phase(grids):
    return grids[1]


@pytest.fixture(scope="session")
def dense_grids():
    return self_dual_grids(1.0, 16)


@pytest.fixture(scope="session")
def bump(phase):
    x, y = phase_mesh(phase)
    return PhaseFn(phase, np.exp(-(x**2 + y**2)) * (1 + 0.3j * x))
