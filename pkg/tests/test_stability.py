import math

import numpy as np
import pytest

from selfbound import radial, stability
from selfbound.stationary import solve_stationary

EIGHT_PI = 8 * math.pi


@pytest.fixture(scope="module")
def modes(ground_m1, excited_m1):
    return {"ground": stability.solve_modes(ground_m1), "excited": stability.solve_modes(excited_m1)}


def _grid_operator(state):
    """Dense Bogoliubov matrix [[0, L-], [-L+, 0]] on the state's own grid."""
    g = state.grid
    n = g.n
    psi = state.values.real
    eye = np.eye(n)
    S = np.column_stack([radial.dst(col) for col in eye])
    K = (S * g.p**2) @ S
    K = K * g.r[None, :] / g.r[:, None]
    W = state.eps - radial.monopolar_potential(state.psi)
    U1 = np.column_stack([-2 * radial.coulomb_from_density(g, psi * col) for col in eye])
    a8 = EIGHT_PI * state.a
    Lm = K + np.diag(a8 * psi**2 - W)
    Lp = K + np.diag(3 * a8 * psi**2 - W) - psi[:, None] * U1
    Z = np.zeros((n, n))
    return np.block([[Z, Lm], [-Lp, Z]])


def _closest(eigs, target):
    return eigs[np.argmin(np.abs(eigs - target))]


@pytest.mark.parametrize("branch", ["ground", "excited"])
def test_against_grid_eigenproblem(get_state, modes, branch):
    state = get_state(-1.0, branch)
    eigs = np.linalg.eigvals(_grid_operator(state))
    for m in modes[branch][:2]:
        assert _closest(eigs, m.lam) == pytest.approx(m.lam, abs=1e-7)
    # the neutral pair sits at zero
    assert np.min(np.abs(eigs)) < 1e-6


def test_dominant_pair_structure(modes):
    g_plus, g_minus, g_zero = modes["ground"]
    assert abs(g_plus.lam.real) < 1e-6 * abs(g_plus.lam) and g_plus.lam.imag > 0
    assert g_minus.lam == pytest.approx(-g_plus.lam, abs=1e-9)
    e_plus, e_minus, e_zero = modes["excited"]
    assert abs(e_plus.lam.imag) < 1e-6 * abs(e_plus.lam) and e_plus.lam.real > 0
    assert e_minus.lam == pytest.approx(-e_plus.lam, abs=1e-9)
    for zero in (g_zero, e_zero):
        assert zero.kind == "neutral" and zero.lam == 0 and zero.residual < 1e-10


def test_modes_are_self_consistent_and_bounded(modes):
    for branch in modes:
        for m in modes[branch]:
            assert 0.0 <= m.alpha <= math.pi / 2 and -math.pi <= m.beta <= math.pi
            assert m.residual < 1e-8
            if m.kind != "neutral":
                assert m.u1_residual < 1e-8
            env = np.abs(m.d_psi_R) + np.abs(m.d_psi_I)
            assert env[-1] < 1e-6 * env.max()


def test_same_order_as_variational(modes):
    from selfbound.variational import analytic_eigenvalues

    for branch, var in (("ground", "stable"), ("excited", "unstable")):
        ratio = abs(modes[branch][0].lam) / abs(analytic_eigenvalues(-1.0, var)[0])
        assert 0.1 < ratio < 10


def test_neutral_mode_in_linearized_rhs(ground_m1):
    prob = stability.LinearizedProblem(ground_m1)
    for r in (0.05, 0.3, 1.0, 3.0):
        p, dp, d2p = (float(prob._psi(r, k)) for k in range(3))
        first, second, _ = stability.linearized_rhs(prob, r, 0.0, 0.0, 0.0, 0.0, p, dp, d2p, 0.0, 0.0)
        assert abs(first) < 1e-5 * max(abs(d2p), 1.0)
        assert second == 0.0


def test_coefficient_asymmetry(ground_m1):
    prob = stability.LinearizedProblem(ground_m1)
    r = 0.4
    p = float(prob.psi(r))
    first, second, _ = stability.linearized_rhs(prob, r, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0)
    assert first + second == pytest.approx(-16 * math.pi * prob.a * p * p, rel=1e-12)
    prob.a = 0.0
    first, second, _ = stability.linearized_rhs(prob, r, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0)
    assert first + second == pytest.approx(0.0, abs=1e-12)


def test_poisson_part_of_linearized_rhs(ground_m1):
    prob = stability.LinearizedProblem(ground_m1)
    r = 0.7
    _, _, d2U = stability.linearized_rhs(prob, r, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5)
    assert d2U == pytest.approx(-2 / r * 0.5 - 16 * math.pi * float(prob.psi(r)), rel=1e-12)


def test_scan_finds_dominant_mode(ground_m1, modes):
    found = stability.scan_modes(ground_m1, np.linspace(0.06, 0.54, 12))
    lams = [m.lam for m in found]
    assert any(abs(l - modes["ground"][0].lam) < 1e-7 for l in lams)


def test_csv_rows(ground_m1, modes):
    rows = list(stability.modes_csv_rows(ground_m1, modes["ground"]))
    assert len(rows) == 3 and rows[0][:2] == (-1.0, "ground")
