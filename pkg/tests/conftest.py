import pytest

from selfbound.radial import RadialGrid
from selfbound.stationary import solve_stationary

_CACHE = {}


def stationary(a, branch, n=1023, r_max=60.0):
    key = (a, branch, n, r_max)
    if key not in _CACHE:
        _CACHE[key] = solve_stationary(a, branch, RadialGrid.from_extent(n, r_max))
    return _CACHE[key]


@pytest.fixture(scope="session")
def ground_m1():
    return stationary(-1.0, "ground")


@pytest.fixture(scope="session")
def excited_m1():
    return stationary(-1.0, "excited")


@pytest.fixture(scope="session")
def get_state():
    return stationary
