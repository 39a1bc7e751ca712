import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from selfbound.units import (
    A_CRITICAL,
    from_scaled,
    is_above_bifurcation,
    radial_norm,
    rescale_solution,
    scale_transform,
    to_scaled,
)


def test_critical_value():
    assert A_CRITICAL == pytest.approx(-1.1780972450961724, abs=1e-15)
    assert round(A_CRITICAL, 4) == -1.1781
    assert is_above_bifurcation(-1.17809)
    assert not is_above_bifurcation(-1.17811)


@given(st.floats(0.1, 1e4), st.floats(-10, 10), st.floats(0, 100))
def test_scaled_round_trip(N, a, t):
    a_s, t_s = to_scaled(N, a, t)
    back = from_scaled(N, a_s, t_s)
    assert back[0] == pytest.approx(a, rel=1e-12, abs=1e-300)
    assert back[1] == pytest.approx(t, rel=1e-12, abs=1e-300)


def test_nonpositive_particle_number():
    with pytest.raises(ValueError):
        to_scaled(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        from_scaled(-1.0, 1.0, 1.0)


def _gaussian(r, A=0.3):
    return np.exp(-A * r * r)


def test_radial_norm_gaussian():
    r = 0.01 * np.arange(1, 3001)
    # 4 pi int exp(-2A r^2) r^2 dr = (pi/(2A))^(3/2)
    assert radial_norm(r, _gaussian(r)) == pytest.approx((math.pi / 0.6) ** 1.5, rel=1e-12)


@given(st.floats(0.3, 3.0), st.floats(0.3, 3.0))
def test_scale_transform_composes(nu1, nu2):
    r = np.linspace(0.1, 5.0, 7)
    psi = np.exp(-r)
    one = scale_transform(r, psi, -0.5, -1.0, nu1, lam=0.2j)
    two = scale_transform(one.r, one.psi, one.eps, one.a, nu2, lam=one.lam)
    direct = scale_transform(r, psi, -0.5, -1.0, nu1 * nu2, lam=0.2j)
    np.testing.assert_allclose(two.r, direct.r, rtol=1e-13)
    np.testing.assert_allclose(two.psi, direct.psi, rtol=1e-13)
    assert two.eps == pytest.approx(direct.eps, rel=1e-13)
    assert two.a == pytest.approx(direct.a, rel=1e-13)
    assert two.lam == pytest.approx(direct.lam, rel=1e-13)


def test_rescale_gives_unit_norm():
    r = 0.01 * np.arange(1, 3001)
    sol = rescale_solution(r, 2.5 * _gaussian(r), -0.3, -0.2)
    assert radial_norm(sol.r, sol.psi) == pytest.approx(1.0, rel=1e-12)
    # the invariant combination a * eps is unchanged
    assert sol.a * sol.eps == pytest.approx(-0.3 * -0.2, rel=1e-13)


def test_rescale_zero_norm():
    r = np.linspace(0.1, 1.0, 10)
    with pytest.raises(ValueError):
        rescale_solution(r, np.zeros_like(r), -1.0, -1.0)
