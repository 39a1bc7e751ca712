import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import erf

from selfbound import radial
from selfbound.radial import GridViolation, RadialGrid, RadialWaveFunction

GRID = RadialGrid.from_extent(1023, 40.0)


def gauss(A_i, grid=GRID):
    return radial.gaussian_state(grid, 1j * A_i)


def test_grid_geometry():
    g = RadialGrid.from_extent(100, 10.0)
    assert g.dr == pytest.approx(0.1)
    assert g.r[0] == pytest.approx(0.1) and g.r[-1] == pytest.approx(10.0)
    assert g.length == pytest.approx(10.1)
    assert g.p[0] == pytest.approx(math.pi / 10.1)
    with pytest.raises(ValueError):
        RadialGrid(2, 0.1)
    with pytest.raises(ValueError):
        RadialGrid(10, 0.0)


def test_wrong_sample_count():
    with pytest.raises(ValueError):
        RadialWaveFunction(GRID, np.zeros(5))


@pytest.mark.parametrize("A_i", [0.05, 0.1, 0.3787])
def test_monopolar_potential_gaussian(A_i):
    psi = gauss(A_i)
    V = radial.monopolar_potential(psi)
    r = GRID.r
    exact = -(2.0 / r) * erf(math.sqrt(2 * A_i) * r)
    assert np.max(np.abs(V - exact)) < 1e-10
    mean = radial.integrate(GRID, V * psi.density)
    assert mean == pytest.approx(-4 * math.sqrt(A_i / math.pi), abs=1e-12)


def test_poisson_relation_second_order():
    """Finite-difference Laplacian of V_u approaches 8 pi |psi|^2 like dr^2."""
    errs = []
    for n in (511, 1023):
        g = RadialGrid.from_extent(n, 40.0)
        psi = gauss(0.2, g)
        w = g.r * radial.monopolar_potential(psi)
        lap = (w[2:] - 2 * w[1:-1] + w[:-2]) / g.dr**2 / g.r[1:-1]
        inner = g.r[1:-1] < 10.0
        errs.append(np.max(np.abs(lap - 8 * math.pi * psi.density[1:-1])[inner]))
    assert errs[1] < 1e-2
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_observables_match_gaussian_formulas():
    a, A_i = -1.0, 0.3
    obs = radial.observables(gauss(A_i), a)
    assert obs.norm == pytest.approx(1.0, abs=1e-13)
    assert obs.kinetic == pytest.approx(3 * A_i, rel=1e-12)
    assert obs.width == pytest.approx(math.sqrt(0.75 / A_i), rel=1e-12)
    e_var = 3 * A_i + 2 * math.sqrt(A_i) * (2 * a * A_i - 1) / math.sqrt(math.pi)
    assert obs.energy == pytest.approx(e_var, rel=1e-12)
    assert obs.eps == pytest.approx(obs.kinetic + obs.contact + obs.monopolar)


def test_zero_wave_function_has_no_observables():
    with pytest.raises(ValueError):
        radial.observables(RadialWaveFunction(GRID, np.zeros(GRID.n)), -1.0)


def test_gaussian_requires_positive_imaginary_part():
    with pytest.raises(ValueError):
        radial.gaussian_state(GRID, 0.1 - 0.2j)


def test_momentum_transform_of_gaussian():
    A = 0.25
    psi = gauss(A)
    phi = radial.momentum_amplitudes(psi)
    p = GRID.p
    exact = (2 * A) ** -1.5 * np.exp(-p * p / (4 * A)) * (2 * A / math.pi) ** 0.75
    assert np.max(np.abs(phi - exact)) < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_sine_transform_inverse_and_parseval(seed):
    rng = np.random.default_rng(seed)
    g = RadialGrid.from_extent(64, 8.0)
    x = rng.normal(size=64) + 1j * rng.normal(size=64)
    y = radial.sine_transform(x, g, "forward")
    np.testing.assert_allclose(radial.sine_transform(y, g, "backward"), x, rtol=1e-10, atol=1e-12)
    lhs = np.sum(np.abs(x) ** 2 * g.r**2) * g.dr
    rhs = np.sum(np.abs(y) ** 2 * g.p**2) * g.dp
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_sine_transform_rejects_bad_direction():
    with pytest.raises(ValueError):
        radial.sine_transform(np.ones(GRID.n), GRID, "sideways")


def test_kinetic_operator_on_gaussian():
    A = 0.2
    psi = gauss(A)
    r = GRID.r
    exact = (6 * A - 4 * A * A * r * r) * psi.values
    assert np.max(np.abs(radial.apply_kinetic(GRID, psi.values) - exact)) < 1e-10


def test_sine_series_interpolation_is_exact_on_grid():
    psi = gauss(0.1)
    vals = radial.evaluate_sine_series(GRID, psi.values, GRID.r)
    np.testing.assert_allclose(vals, psi.values, atol=1e-13)
    r_mid = GRID.r[:200] + 0.5 * GRID.dr
    np.testing.assert_allclose(
        radial.evaluate_sine_series(GRID, psi.values, r_mid),
        math.exp(0) * (0.2 / math.pi) ** 0.75 * np.exp(-0.1 * r_mid**2),
        atol=1e-12,
    )


@pytest.mark.parametrize("f", [0.99, 1.001, 1.01, 1.25])
def test_deform_norm_and_width(f):
    psi = gauss(0.1)
    out = radial.deform(psi, f)
    assert out.norm() == pytest.approx(psi.norm(), abs=1e-8)
    assert radial.rms_width(out) == pytest.approx(radial.rms_width(psi) / f ** (2 / 3), rel=1e-10)


def test_deform_identity_and_errors():
    psi = gauss(0.1)
    assert radial.deform(psi, 1.0) is psi
    with pytest.raises(ValueError):
        radial.deform(psi, 0.0)
    wide = gauss(0.005)
    with pytest.raises(GridViolation):
        radial.deform(wide, 0.5)


def test_boundary_ratio():
    vals = np.zeros(10)
    assert radial.boundary_ratio(vals) == 0.0
    vals[0], vals[-1] = 2.0, 1.0
    assert radial.boundary_ratio(vals) == 0.5


def test_snapshot_round_trip(tmp_path):
    psi = radial.gaussian_state(GRID, 0.05 + 0.2j)
    path = tmp_path / "snap.dat"
    radial.write_snapshot(path, psi, extra_header="t=0")
    text = path.read_text().splitlines()
    assert text[0] == "# t=0" and text[1] == "# r re_psi im_psi density"
    back = radial.read_snapshot(path)
    assert back.grid.n == GRID.n
    np.testing.assert_array_equal(back.values, psi.values)
