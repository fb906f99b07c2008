import numpy as np
import pytest

from oblab.grid import Grid2
from oblab.geometry import ChannelDomain


@pytest.fixture(scope="session")
def grid():
    return Grid2(Lx=1.0, Ly=2.0, nx=64, ny=129)


@pytest.fixture(scope="session")
def domain(grid):
    return ChannelDomain(grid)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
