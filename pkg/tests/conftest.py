import numpy as np
import pytest

from lanelab import lane_emden as le
from lanelab import spectral as sp


@pytest.fixture(scope="session")
def grid64():
    return sp.make_grid(64)


@pytest.fixture(scope="session")
def grid32():
    return sp.make_grid(32)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def ground_states(grid64):
    return {p: le.solve_ground_state(p, grid64) for p in (1.5, 2.0, 3.0)}


@pytest.fixture(scope="session")
def ball_maximizers(grid64):
    opts = le.SolverOptions(tol=1e-12)
    return {p: le.maximize_energy_ball(p, grid64, opts) for p in (1.5, 2.0, 3.0)}
