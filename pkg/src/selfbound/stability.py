"""Linear stability modes of the stationary states by multi-parameter shooting.

Writing a perturbation as ``(dR + i dI) exp(lam t)`` around the real state
``psi`` gives, with ``W = eps - Vu`` and the linearized potential
``U1 = 4 int psi dR / |r - r'|``,

    lam dR = L- dI = -dI'' - (2/r) dI' + (8 pi a psi^2 - W) dI
    lam dI = -L+ dR = dR'' + (2/r) dR' - (24 pi a psi^2 - W) dR + U1 psi
    U1''   = -(2/r) U1' - 16 pi psi dR

integrated outward with regular initial data ``(dR, dI)(0) = (cos alpha,
sin alpha e^{i beta})`` and ``U1(0)``.  Far out the combinations
``dR +/- i dI`` obey free Coulomb equations with decay constants
``sqrt(kappa^2 -/+ i lam)`` and ``U1`` must fall off like ``1/r``; the
matching map collects the coefficients of the growing solutions at a
matching radius.  Because the equations are linear in the initial data the
map is ``M(lam) @ v``, which lets the eigenvalue be located first as a root
of ``det M(lam)`` and then polished together with ``alpha``, ``beta`` and
``U1(0)`` by damped Newton.

The problem is solved in raw units where the state has ``psi(0) = 1``;
eigenvalues are mapped back with ``lam -> nu^2 lam``.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from . import radial
from .stationary import NoConvergence, StationaryState
from .variational import analytic_eigenvalues

log = logging.getLogger(__name__)

EIGHT_PI = 8.0 * math.pi


@dataclass
class StabilityMode:
    lam: complex
    alpha: float
    beta: float
    U1_0: complex
    d_psi_R: np.ndarray = field(repr=False)
    d_psi_I: np.ndarray = field(repr=False)
    residual: float = float("nan")
    u1_residual: float = float("nan")
    kind: str = "dominant"  # or "neutral", "scan"


class LinearizedProblem:
    """Coefficients and shooting machinery for one stationary state."""

    def __init__(self, state: StationaryState, upsample: int = 8, edge: float = 1e-13,
                 rtol: float = 1e-11, atol: float = 1e-13):
        self.state = state
        self.rtol, self.atol = rtol, atol
        grid = state.grid
        psi0 = float(radial.evaluate_sine_series(grid, state.values, np.array([1e-7 * grid.dr]))[0])
        if not psi0 > 0:
            raise ValueError("stationary state must be positive at the origin")
        # raw units: psi_raw(0) = 1
        self.nu = psi0**-0.5
        nu, nu2 = self.nu, self.nu**2
        self.a = state.a / nu2
        self.eps = state.eps * nu2
        self.charge = state.psi.norm() / nu  # 4 pi int psi_raw^2 r_raw^2 dr_raw
        self.kappa = math.sqrt(-self.eps)

        mag = np.abs(state.values)
        big = np.nonzero(mag > edge * mag.max())[0]
        r_edge = grid.r[big[-1]]  # last sample with appreciable amplitude
        r_fine = np.linspace(0.0, r_edge, upsample * (big[-1] + 1) + 1)
        r_fine[0] = 1e-9 * grid.dr
        psi_f = radial.evaluate_sine_series(grid, state.values, r_fine)
        rho = state.values**2
        w = radial.dst(-EIGHT_PI * radial.dst(grid.r * rho) / grid.p**2)
        Vu_f = radial.evaluate_sine_series(grid, w / grid.r, r_fine) - 2.0 * state.psi.norm() / grid.length
        W_f = state.eps - Vu_f
        self.r_edge = r_edge / nu
        r_raw = r_fine / nu
        r_raw[0] = 0.0
        self._psi = CubicSpline(r_raw, nu2 * psi_f, bc_type=((1, 0.0), "not-a-knot"))
        self._W = CubicSpline(r_raw, nu2 * W_f, bc_type=((1, 0.0), "not-a-knot"))
        self.r_match = self.r_edge

    # -- coefficient functions (raw units) --
    def psi(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= self.r_edge, self._psi(np.minimum(r, self.r_edge)), 0.0)

    def W(self, r):
        r = np.asarray(r, dtype=float)
        tail = self.eps + 2.0 * self.charge / np.maximum(r, 1e-300)
        return np.where(r <= self.r_edge, self._W(np.minimum(r, self.r_edge)), tail)

    def decay_constants(self, lam: complex) -> tuple[complex, complex]:
        kx = cmath.sqrt(self.kappa**2 - 1j * lam)
        ky = cmath.sqrt(self.kappa**2 + 1j * lam)
        return kx, ky

    def _rhs(self, lam: complex):
        a8 = EIGHT_PI * self.a
        psi_s, W_s = self._psi, self._W
        r_edge, eps, charge = self.r_edge, self.eps, self.charge

        def f(r, y):
            Y = y.reshape(7, -1)
            R, dR, I, dI, U1, dU1, _ = Y
            if r <= r_edge:
                p = float(psi_s(r))
                Wr = float(W_s(r))
            else:
                p = 0.0
                Wr = eps + 2.0 * charge / r
            p2 = p * p
            out = np.empty_like(Y)
            out[0] = dR
            out[1] = -2.0 / r * dR + (3.0 * a8 * p2 - Wr) * R - U1 * p + lam * I
            out[2] = dI
            out[3] = -2.0 / r * dI + (a8 * p2 - Wr) * I - lam * R
            out[4] = dU1
            out[5] = -2.0 / r * dU1 - 2.0 * EIGHT_PI * p * R
            out[6] = 2.0 * EIGHT_PI * r * p * R  # running 16 pi int r psi dR
            return out.ravel()

        return f

    def _initial(self, lam: complex, v: np.ndarray, r0: float) -> np.ndarray:
        """Series start at ``r0`` for initial data columns ``v = (R0, I0, U10)``."""
        v = np.asarray(v, dtype=complex).reshape(3, -1)
        R0, I0, U10 = v
        a8 = EIGHT_PI * self.a
        W0 = float(self._W(0.0))
        # f = f0 + f2 r^2 with 6 f2 = (Laplacian of f)(0)
        R2 = ((3.0 * a8 - W0) * R0 - U10 + lam * I0) / 6.0
        I2 = ((a8 - W0) * I0 - lam * R0) / 6.0
        U2 = -2.0 * EIGHT_PI * R0 / 6.0
        y = np.array([
            R0 + R2 * r0**2, 2 * R2 * r0,
            I0 + I2 * r0**2, 2 * I2 * r0,
            U10 + U2 * r0**2, 2 * U2 * r0,
            EIGHT_PI * R0 * r0**2,
        ])
        return y.ravel()

    def shoot(self, lam: complex, v: np.ndarray, r_end: float | None = None, dense: bool = False):
        r_end = r_end or self.r_match
        r0 = 1e-4 * self.r_edge / 100.0
        sol = solve_ivp(self._rhs(lam), (r0, r_end), self._initial(lam, v, r0), method="DOP853",
                        rtol=self.rtol, atol=self.atol, dense_output=dense)
        if sol.status != 0:
            raise NoConvergence(f"mode integration failed at r={sol.t[-1]:.4g}: {sol.message}")
        return sol

    def matching_matrix(self, lam: complex) -> np.ndarray:
        """Growing-solution coefficients at ``r_match`` for unit initial data.

        Rows: ``dR + i dI``, ``dR - i dI`` and ``U1``; columns: initial
        ``dR(0)``, ``dI(0)``, ``U1(0)``.  Rows are scaled by ``exp(-k r_m)``,
        which keeps the determinant analytic in ``lam``.
        """
        sol = self.shoot(lam, np.eye(3))
        Y = sol.y[:, -1].reshape(7, 3)
        R, dR, I, dI, U1, dU1, _ = Y
        rm = sol.t[-1]
        kx, ky = self.decay_constants(lam)
        Q = self.charge

        def bc(X, dX, k):
            # annihilates the decaying Coulomb solution r^(Q/k - 1) e^(-k r)
            return (dX - (-k + (Q / k - 1.0) / rm) * X) * cmath.exp(-k * rm)

        return np.array([
            bc(R + 1j * I, dR + 1j * dI, kx),
            bc(R - 1j * I, dR - 1j * dI, ky),
            U1 + rm * dU1,
        ])

    def deflated_determinant(self, lam: complex) -> complex:
        return np.linalg.det(self.matching_matrix(lam)) / lam**2


def linearized_rhs(problem: LinearizedProblem, r: float, lam: complex, R, dR, d2R, I, dI, d2I, U1, dU1):
    """Residual form of the linearized equations at radius ``r`` (raw units).

    Returns ``(L- dI - lam dR, -L+ dR - lam dI, U1'' target)`` so that an
    exact mode makes the first two vanish; the third is the value ``U1''``
    must take.
    """
    p = float(problem.psi(r))
    Wr = float(problem.W(r))
    a8 = EIGHT_PI * problem.a
    lm = -d2I - 2.0 / r * dI + (a8 * p * p - Wr) * I
    lp = -d2R - 2.0 / r * dR + (3.0 * a8 * p * p - Wr) * R - U1 * p
    return lm - lam * R, -lp - lam * I, -2.0 / r * dU1 - 2.0 * EIGHT_PI * p * R


def _muller(f, x0: complex, x1: complex, x2: complex, tol: float = 1e-12, max_iter: int = 60) -> complex:
    f0, f1, f2 = f(x0), f(x1), f(x2)
    for _ in range(max_iter):
        h1, h2 = x1 - x0, x2 - x1
        if h1 == 0 or h2 == 0 or h1 + h2 == 0 or not all(map(cmath.isfinite, (f0, f1, f2))):
            raise NoConvergence(f"eigenvalue search degenerated near {x2}")
        d1, d2 = (f1 - f0) / h1, (f2 - f1) / h2
        A = (d2 - d1) / (h2 + h1)
        B = A * h2 + d2
        disc = cmath.sqrt(B * B - 4.0 * f2 * A)
        den = B + disc if abs(B + disc) > abs(B - disc) else B - disc
        dx = -2.0 * f2 / den if den != 0 else -h2
        x3 = x2 + dx
        if abs(dx) < tol * max(1.0, abs(x3)):
            return x3
        x0, x1, x2 = x1, x2, x3
        f0, f1, f2 = f1, f2, f(x3)
    raise NoConvergence(f"eigenvalue search did not converge (last {x2})")


def _params_to_v(x: np.ndarray) -> tuple[complex, np.ndarray]:
    alpha, beta, lr, li, ur, ui = x
    v = np.array([math.cos(alpha), math.sin(alpha) * cmath.exp(1j * beta), ur + 1j * ui])
    return complex(lr, li), v


def _v_to_params(lam: complex, v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    if abs(v[0]) > 1e-14 * np.abs(v[:2]).max():
        v = v * (abs(v[0]) / v[0])
    else:
        v = v * (abs(v[1]) / v[1])
    s = math.hypot(abs(v[0]), abs(v[1]))
    v = v / s
    alpha = math.atan2(abs(v[1]), v[0].real)
    beta = cmath.phase(v[1]) if abs(v[1]) > 0 else 0.0
    return np.array([alpha, beta, lam.real, lam.imag, v[2].real, v[2].imag])


def _matching(problem: LinearizedProblem, x: np.ndarray) -> np.ndarray:
    lam, v = _params_to_v(x)
    F = problem.matching_matrix(lam) @ v
    return np.concatenate([F.real, F.imag])


def newton_polish(problem: LinearizedProblem, x: np.ndarray, tol: float = 1e-11, max_iter: int = 20):
    """Damped Newton on the 6-real matching map ``(alpha, beta, lam, U1(0))``."""
    F = _matching(problem, x)
    for _ in range(max_iter):
        if np.linalg.norm(F) < tol:
            break
        J = np.empty((6, 6))
        for j in range(6):
            h = 1e-7 * max(1.0, abs(x[j]))
            xp = x.copy()
            xp[j] += h
            J[:, j] = (_matching(problem, xp) - F) / h
        dx = np.linalg.lstsq(J, -F, rcond=None)[0]
        t = 1.0
        while t > 1e-4:
            xn = x + t * dx
            Fn = _matching(problem, xn)
            if np.linalg.norm(Fn) < np.linalg.norm(F):
                break
            t *= 0.5
        else:
            break
        x, F = xn, Fn
    return x, float(np.linalg.norm(F))


def _null_vector(M: np.ndarray) -> tuple[np.ndarray, float]:
    _, s, vh = np.linalg.svd(M)
    return vh[-1].conj(), float(s[-1] / s[0])


def _mode_functions(problem: LinearizedProblem, lam: complex, v: np.ndarray):
    """Sample a mode on the state's grid; the growing remnant past the
    envelope minimum is discarded."""
    state = problem.state
    nu = problem.nu
    r_raw = state.grid.r / nu
    r_end = min(r_raw[-1], problem.r_match)
    sol = problem.shoot(lam, v, r_end=r_end, dense=True)
    inside = r_raw <= r_end
    Y = np.zeros((7, r_raw.size), dtype=complex)
    Y[:, inside] = sol.sol(r_raw[inside])
    R, I = Y[0], Y[2]
    env = np.abs(R) + np.abs(I)
    beyond = r_raw > 0.3 * problem.r_edge
    if np.any(beyond):
        idx = np.nonzero(beyond)[0]
        cut = idx[np.argmin(env[idx])]
        R[cut:] = 0.0
        I[cut:] = 0.0
    return R, I, sol


def _u1_residual(problem: LinearizedProblem, lam: complex, v: np.ndarray) -> float:
    """``|U1(0) - 16 pi int r psi dR dr| / |U1(0)|`` with the integral carried
    along the shot."""
    sol = problem.shoot(lam, v, r_end=problem.r_edge)
    integral = sol.y[6, -1]
    return float(abs(v[2] - integral) / max(abs(v[2]), 1e-300))


def _finish(problem: LinearizedProblem, x: np.ndarray, residual: float, kind: str) -> StabilityMode:
    lam_raw, v = _params_to_v(x)
    R, I, sol = _mode_functions(problem, lam_raw, v)
    lam = lam_raw / problem.nu**2
    u1res = _u1_residual(problem, lam_raw, v) if kind != "neutral" else 0.0
    return StabilityMode(lam=lam, alpha=float(x[0]), beta=float(x[1]), U1_0=complex(v[2]),
                         d_psi_R=R, d_psi_I=I, residual=residual, u1_residual=u1res, kind=kind)


def find_mode(problem: LinearizedProblem, lam_guess: complex, kind: str = "dominant",
              residual_tol: float = 1e-8) -> StabilityMode:
    """Locate one eigenvalue near ``lam_guess`` (scaled units) and its mode."""
    nu2 = problem.nu**2
    g = lam_guess * nu2
    lam_raw = _muller(problem.deflated_determinant, 0.9 * g, 1.1 * g, g)
    v, rel = _null_vector(problem.matching_matrix(lam_raw))
    x, res = newton_polish(problem, _v_to_params(lam_raw, v))
    if res > residual_tol:
        raise NoConvergence(f"mode near {lam_guess} rejected: matching residual {res:.2e}")
    return _finish(problem, x, res, kind)


def neutral_mode(problem: LinearizedProblem) -> StabilityMode:
    """The global-phase mode: ``lam = 0``, ``dR = 0``, ``dI`` proportional to the state."""
    x = np.array([math.pi / 2.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    res = float(np.linalg.norm(_matching(problem, x)))
    return _finish(problem, x, res, "neutral")


def variational_seed(state: StationaryState) -> complex:
    branch = "stable" if state.branch == "ground" else "unstable"
    return analytic_eigenvalues(state.a, branch)[0]


def solve_modes(state: StationaryState, seed: complex | None = None,
                problem: LinearizedProblem | None = None) -> list[StabilityMode]:
    """Dominant ``+/-`` eigenvalue pair and the neutral mode of ``state``.

    The search starts from the variational eigenvalue at the same
    scattering length unless ``seed`` is given.
    """
    problem = problem or LinearizedProblem(state)
    seed = variational_seed(state) if seed is None else seed
    plus = find_mode(problem, seed)
    minus = find_mode(problem, -plus.lam)
    if not _leads(plus.lam):
        plus, minus = minus, plus
    return [plus, minus, neutral_mode(problem)]


def _leads(lam: complex) -> bool:
    # canonical member of a +/- pair: Re > 0, or Im > 0 on the imaginary axis
    if abs(lam.real) > 1e-8 * abs(lam):
        return lam.real > 0
    return lam.imag > 0


def scan_modes(state: StationaryState, omegas, problem: LinearizedProblem | None = None) -> list[StabilityMode]:
    """Search the imaginary axis ``lam = i*omega`` for further eigenvalues.

    Local minima of ``|det M|`` on the sampled ``omegas`` (scaled units) seed
    the root search; duplicates are merged.
    """
    problem = problem or LinearizedProblem(state)
    nu2 = problem.nu**2
    omegas = np.asarray(omegas, dtype=float)
    vals = np.array([abs(problem.deflated_determinant(1j * w * nu2)) for w in omegas])
    found: list[StabilityMode] = []
    for i in range(1, omegas.size - 1):
        if vals[i] < vals[i - 1] and vals[i] < vals[i + 1]:
            try:
                mode = find_mode(problem, 1j * omegas[i], kind="scan")
            except NoConvergence:
                continue
            if all(abs(mode.lam - m.lam) > 1e-6 * max(1.0, abs(m.lam)) for m in found):
                found.append(mode)
    return found


def modes_csv_rows(state: StationaryState, modes: list[StabilityMode]):
    for m in modes:
        yield (state.a, state.branch, m.lam.real, m.lam.imag)


def follow_branch(branch: str, a_values, grid=None, a_cr: float | None = None):
    """Dominant modes along a sequence of scattering lengths.

    The first point is seeded from the variational eigenvalue; later points
    from the previous eigenvalue scaled by the saddle-node law
    ``|lam| ~ (a - a_cr)^(1/4)``.  Returns ``(state, modes)`` pairs.
    """
    from .stationary import numeric_critical_a, solve_stationary

    a_cr = numeric_critical_a() if a_cr is None else a_cr
    out = []
    seed = None
    a_prev = None
    for a in a_values:
        state = solve_stationary(float(a), branch, grid)
        if seed is not None:
            seed = seed * ((a - a_cr) / (a_prev - a_cr)) ** 0.25
        modes = solve_modes(state, seed=seed)
        out.append((state, modes))
        seed, a_prev = modes[0].lam, a
    return out
