"""Numerically exact stationary states of the scaled GPE.

Raw solutions are shot outward from the origin with ``psi(0) = 1``:

    psi'' = -(2/r) psi' + (8 pi a psi^2 - U - eps) psi
    U''   = -(2/r) U'   - 8 pi psi^2

with ``U = 2 int psi^2/|r - r'|``.  Only ``W = U + eps`` enters the ``psi``
equation, so for a given raw scattering length the shot is a one-parameter
search over ``W(0)`` for a nodeless decaying solution; ``eps`` then follows
from the Coulomb tail ``U -> 2M/r``.  The norm scaling maps a raw solution to
unit norm and scattering length ``a_raw * M**2``.  This function of
``a_raw`` has a single minimum, the bifurcation point; the ground branch is
the side containing ``a_raw = 0``.

The rescaled profile is finally polished by Newton's method on the spectral
grid, so the returned state is a fixed point of the same discretization the
propagator uses.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, minimize_scalar

from . import radial
from .radial import RadialGrid, RadialWaveFunction

log = logging.getLogger(__name__)

EIGHT_PI = 8.0 * math.pi
BRANCHES = ("ground", "excited")
RESIDUAL_TOL = 1e-8
POLISH_RADIUS = 100.0


class NoConvergence(RuntimeError):
    """A root search failed to converge."""


class NoStationaryState(LookupError):
    """No stationary state exists for the requested parameters."""


@dataclass
class ShotResult:
    r: np.ndarray
    psi: np.ndarray
    dpsi: np.ndarray
    U: np.ndarray
    dU: np.ndarray
    charge: np.ndarray  # 4 pi int_0^r psi^2 r'^2 dr'
    divergence: int  # +1 grows, -1 crosses zero, 0 reached r_max
    r_reached: float
    dense: object = field(default=None, repr=False)


def shoot_once(
    psi0: float,
    U0: float,
    eps: float,
    a: float,
    r_max: float,
    r_start: float = 1e-3,
    potential=None,
    density=None,
    rtol: float = 1e-12,
    atol: float = 1e-14,
    dense: bool = False,
) -> ShotResult:
    """Integrate the stationary equations outward from the origin.

    Regularity fixes ``psi'(0) = U'(0) = 0``; the first step uses the series
    ``psi = psi0 (1 + c r^2)``.  The integration stops when ``psi`` crosses
    zero (``divergence=-1``: the trial is over-bound) or turns upward
    (``+1``: under-bound), which brackets the decaying solution.

    ``potential`` replaces the self-consistent ``U`` by a fixed callable;
    ``density`` replaces the Poisson source ``psi**2`` by a fixed callable.
    """
    if not psi0 > 0:
        raise ValueError(f"psi0 must be positive, got {psi0}")
    r0 = r_start
    if potential is None:
        W0 = U0 + eps
    else:
        W0 = potential(0.0) + eps
    rho0 = psi0 * psi0 if density is None else density(0.0)
    c = (EIGHT_PI * a * psi0 * psi0 - W0) / 6.0
    y0 = [
        psi0 * (1.0 + c * r0 * r0),
        2.0 * psi0 * c * r0,
        U0 - EIGHT_PI * rho0 / 6.0 * r0 * r0,
        -EIGHT_PI * rho0 / 3.0 * r0,
        4.0 * math.pi / 3.0 * psi0 * psi0 * r0**3,
    ]

    def rhs(r, y):
        p, dp, U, dU, _ = y
        Ur = U if potential is None else potential(r)
        src = p * p if density is None else density(r)
        return [
            dp,
            -2.0 / r * dp + (EIGHT_PI * a * p * p - Ur - eps) * p,
            dU,
            -2.0 / r * dU - EIGHT_PI * src,
            4.0 * math.pi * p * p * r * r,
        ]

    def crosses(r, y):
        return y[0]

    crosses.terminal = True

    def turns(r, y):
        return y[1]

    turns.terminal = True
    turns.direction = 1

    if c >= 0.0:
        # curvature at the origin already points upward
        return ShotResult(np.array([r0]), np.array([psi0]), np.array([0.0]), np.array([U0]),
                          np.array([0.0]), np.array([0.0]), +1, r0)
    sol = solve_ivp(rhs, (r0, r_max), y0, method="DOP853", rtol=rtol, atol=atol,
                    events=[crosses, turns], dense_output=dense)
    if sol.status == -1:
        raise NoConvergence(f"shooting integration failed at r={sol.t[-1]:.4g}: {sol.message}")
    if sol.t_events[0].size:
        div = -1
    elif sol.t_events[1].size:
        div = +1
    else:
        div = 0
    y = sol.y
    return ShotResult(sol.t, y[0], y[1], y[2], y[3], y[4], div, float(sol.t[-1]),
                      sol.sol if dense else None)


@dataclass(frozen=True)
class RawProfile:
    """Decaying solution of the raw problem with ``psi(0) = 1``."""

    a_raw: float
    W0: float
    eps: float
    charge: float
    r_cut: float
    shot: ShotResult = field(repr=False)

    @property
    def a_scaled(self) -> float:
        return self.a_raw * self.charge**2

    @property
    def eps_scaled(self) -> float:
        return self.eps / self.charge**2

    def psi(self, r: np.ndarray) -> np.ndarray:
        """Raw profile with an asymptotic Coulomb tail beyond ``r_cut``."""
        r = np.asarray(r, dtype=float)
        shot = self.shot
        out = np.empty_like(r)
        inside = r <= self.r_cut
        out[inside] = shot.dense(r[inside])[0]
        kappa = math.sqrt(-self.eps)
        p_cut = float(shot.dense(self.r_cut)[0])
        ro = r[~inside]
        power = self.charge / kappa
        out[~inside] = p_cut * (ro / self.r_cut) ** (power - 1.0) * np.exp(-kappa * (ro - self.r_cut))
        return out


def _tail_measure(shot: ShotResult) -> float:
    """Signed, roughly linear measure of the mismatch of a failed shot."""
    if shot.r.size < 2:
        return 1.0
    W_end = shot.U[-1]
    kappa = math.sqrt(max(-W_end, 1e-2))
    return shot.divergence * math.exp(-kappa * min(shot.r_reached, 700.0 / kappa))


_W0_SOLVED: dict[float, float] = {}


def _bracket_W0(shot, a_raw: float) -> tuple[float, float]:
    """Sign-change bracket for ``W0``, warm-started from solved neighbours."""
    if _W0_SOLVED:
        near = min(_W0_SOLVED, key=lambda x: abs(x - a_raw))
        centre = _W0_SOLVED[near]
        half = 1e-7 + 40.0 * abs(near - a_raw)
        for _ in range(40):
            lo, hi = centre - half, centre + half
            if shot(lo).divergence == +1 and shot(hi).divergence == -1:
                return lo, hi
            half *= 4.0
    lo = EIGHT_PI * a_raw - 1e-9
    hi = max(EIGHT_PI * abs(a_raw), 1.0) + 10.0
    while shot(hi).divergence != -1:
        hi *= 2.0
        if hi > 1e8:
            raise NoConvergence(f"could not bracket W0 for a_raw={a_raw}")
    return lo, hi


@functools.lru_cache(maxsize=256)
def raw_profile(a_raw: float, r_max: float = 200.0) -> RawProfile:
    """Nodeless decaying raw solution at scattering length ``a_raw``.

    The self-consistent potential is integrated with ``U(0) = W0`` so that
    ``U`` plays the role of ``W = U + eps``.
    """

    def shot(W0):
        return shoot_once(1.0, W0, 0.0, a_raw, r_max)

    def g(W0):
        s = shot(W0)
        if s.divergence == 0:
            return 0.0
        return _tail_measure(s)

    lo, hi = _bracket_W0(shot, a_raw)
    W0 = brentq(g, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=300)
    # push to the last representable W0 on the under-bound side
    s = shot(W0)
    if s.divergence == -1:
        step = abs(W0) * 1e-15 + 1e-300
        while s.divergence == -1:
            W0 -= step
            step *= 2.0
            s = shot(W0)
    _W0_SOLVED[a_raw] = W0
    s = shoot_once(1.0, W0, 0.0, a_raw, r_max, dense=True)
    i = int(np.argmin(np.abs(s.psi) + np.abs(s.dpsi)))
    # keep well inside the region where the shot still decays
    i = max(1, int(0.9 * i))
    r_cut = float(s.r[i])
    charge = float(s.charge[i])
    eps = float(s.U[i] - 2.0 * charge / r_cut)
    return RawProfile(a_raw, W0, eps, charge, r_cut, s)


def _a_scaled(a_raw: float) -> float:
    return raw_profile(a_raw).a_scaled


@functools.lru_cache(maxsize=None)
def bifurcation_point() -> tuple[float, float]:
    """``(a_raw, a_scaled)`` at the tangent bifurcation of the exact branches."""
    res = minimize_scalar(_a_scaled, bracket=(-0.1, -0.2, -0.5), tol=1e-6)
    return float(res.x), float(res.fun)


def numeric_critical_a() -> float:
    return bifurcation_point()[1]


def _match_raw(a_target: float, branch: str) -> float:
    a_raw_cr, a_cr = bifurcation_point()
    if a_target < a_cr:
        raise NoStationaryState(
            f"no stationary state below the bifurcation a_cr={a_cr:.6f} (requested a={a_target})"
        )
    if branch == "ground":
        if a_target <= 0.0:
            lo, hi = a_raw_cr, 0.0
        else:
            lo, hi = 0.0, 0.5
            while _a_scaled(hi) < a_target:
                lo, hi = hi, 2.0 * hi
    elif branch == "excited":
        if a_target >= 0.0:
            raise NoStationaryState("the excited branch exists only for negative a")
        hi, lo = a_raw_cr, 2.0 * a_raw_cr
        while _a_scaled(lo) < a_target:
            hi, lo = lo, 2.0 * lo
            if lo < -1e4:
                raise NoConvergence(f"could not bracket the excited branch at a={a_target}")
    else:
        raise ValueError(f"branch must be one of {BRANCHES}, got {branch!r}")
    if a_target == a_cr:
        return a_raw_cr
    try:
        return brentq(lambda x: _a_scaled(x) - a_target, lo, hi, xtol=1e-11, rtol=1e-11)
    except ValueError as exc:
        raise NoConvergence(f"scattering-length matching failed at a={a_target}: {exc}") from exc


@dataclass
class StationaryState:
    psi: RadialWaveFunction
    eps: float
    a: float
    branch: str
    U: np.ndarray = field(repr=False)
    residual: float = float("nan")
    a_raw: float = float("nan")
    nu: float = float("nan")

    @property
    def grid(self) -> RadialGrid:
        return self.psi.grid

    @property
    def values(self) -> np.ndarray:
        return self.psi.values.real


def _gpe_residual(grid: RadialGrid, u: np.ndarray, eps: float, a: float) -> np.ndarray:
    r = grid.r
    psi = u / r
    rho = psi * psi
    V = EIGHT_PI * a * rho + radial.coulomb_from_density(grid, rho)
    return radial.apply_kinetic(grid, psi) + V * psi - eps * psi


def residual_norm(state: StationaryState) -> float:
    """L2 norm of ``H psi - eps psi`` on the grid."""
    grid = state.grid
    res = _gpe_residual(grid, state.psi.u.real, state.eps, state.a)
    return math.sqrt(radial.integrate(grid, res * res))


@functools.lru_cache(maxsize=8)
def _dst_matrix(n: int) -> np.ndarray:
    k = np.arange(1, n + 1)
    return math.sqrt(2.0 / (n + 1)) * np.sin(np.pi * np.outer(k, k) / (n + 1))


def polish(grid: RadialGrid, psi: np.ndarray, eps: float, a: float,
           tol: float = 1e-12, max_iter: int = 30) -> tuple[np.ndarray, float]:
    """Newton iteration for the unit-norm discrete stationary equation.

    Unknowns are ``u = r psi`` on the grid and ``eps``; the equations are the
    GPE residual and the norm constraint.  The Jacobian is assembled densely.
    """
    r, p, dr = grid.r, grid.p, grid.dr
    S = _dst_matrix(grid.n)
    T = (S * p**2) @ S
    coul = (S * (-EIGHT_PI / p**2)) @ S  # w = coul @ (r rho)
    u = r * np.asarray(psi, dtype=float)
    n = grid.n
    for it in range(max_iter):
        rho = (u / r) ** 2
        Vu = radial.coulomb_from_density(grid, rho)
        Vc = EIGHT_PI * a * rho
        F = T @ u + (Vc + Vu - eps) * u
        G = 4.0 * math.pi * dr * np.dot(u, u) - 1.0
        scale = math.sqrt(4.0 * math.pi * dr)
        res = math.hypot(scale * np.linalg.norm(F), G)
        if res < tol:
            break
        # dVu/du = diag(1/r) coul diag(2u/r) - (2/L) 8 pi dr u^T
        dVu = (coul * (2.0 * u / r)) / r[:, None] - (2.0 / grid.length) * EIGHT_PI * dr * u[None, :]
        J = np.zeros((n + 1, n + 1))
        J[:n, :n] = T + np.diag(3.0 * Vc + Vu - eps) + u[:, None] * dVu
        J[:n, n] = -u
        J[n, :n] = EIGHT_PI * dr * u
        step = np.linalg.solve(J, -np.append(F, G))
        u = u + step[:n]
        eps = eps + step[n]
    else:
        raise NoConvergence(f"Newton polish did not converge (residual {res:.3e})")
    log.debug("polish converged in %d iterations", it)
    return u / r, float(eps)


def solve_stationary(a_target: float, branch: str = "ground", grid: RadialGrid | None = None,
                     polish_tol: float = 1e-12) -> StationaryState:
    """Unit-norm stationary state on ``grid`` at scattering length ``a_target``.

    Raises :class:`NoStationaryState` below the bifurcation (or for the
    excited branch at ``a >= 0``) and :class:`NoConvergence` when a root
    search fails.
    """
    if branch not in BRANCHES:
        raise ValueError(f"branch must be one of {BRANCHES}, got {branch!r}")
    grid = grid or RadialGrid.from_extent()
    a_raw = _match_raw(a_target, branch)
    prof = raw_profile(a_raw)
    nu = 1.0 / prof.charge
    # scaled radius r_s = r_raw / nu, psi_s = nu^2 psi_raw
    psi_guess = nu * nu * prof.psi(grid.r * nu)
    # the dense Newton step is cubic in the point count; on large boxes it
    # runs on the inner part, beyond which the bound state is below 1e-20
    n_sub = min(grid.n, math.ceil(POLISH_RADIUS / grid.dr))
    sub = grid if n_sub == grid.n else RadialGrid(n_sub, grid.dr)
    psi = np.zeros(grid.n)
    psi[:n_sub], eps = polish(sub, psi_guess[:n_sub], prof.eps_scaled, a_target, tol=polish_tol)
    wf = RadialWaveFunction(grid, psi.astype(complex))
    state = StationaryState(
        psi=wf,
        eps=eps,
        a=a_target,
        branch=branch,
        U=-radial.monopolar_potential(wf),
        a_raw=a_raw,
        nu=nu,
    )
    state.residual = residual_norm(state)
    if state.residual > RESIDUAL_TOL:
        raise NoConvergence(f"stationary residual {state.residual:.3e} exceeds {RESIDUAL_TOL}")
    if np.any(np.diff(np.sign(psi[np.abs(psi) > 1e-10 * np.abs(psi).max()])) != 0):
        raise NoConvergence("polished state acquired a node")
    return state


def shooting_guess(a_target: float, branch: str, grid: RadialGrid) -> tuple[np.ndarray, float]:
    """Rescaled shooting profile on ``grid`` before the grid polish."""
    prof = raw_profile(_match_raw(a_target, branch))
    nu = 1.0 / prof.charge
    return nu * nu * prof.psi(grid.r * nu), prof.eps_scaled


def imaginary_time_ground(a: float, grid: RadialGrid, psi0: np.ndarray | None = None,
                          dts=(0.04, 0.02, 0.01), tol: float = 1e-11,
                          t_max: float = 400.0) -> np.ndarray:
    """Ground state by normalized imaginary-time split-step relaxation.

    Each step size relaxes to a fixed point; the final two are combined by
    Richardson extrapolation to remove the ``O(dt^2)`` splitting bias.
    """
    r, p = grid.r, grid.p
    if psi0 is None:
        psi = np.exp(-0.05 * r * r)
    else:
        psi = np.asarray(psi0, dtype=float).copy()
    psi /= math.sqrt(radial.integrate(grid, psi * psi))
    fixed = []
    for dt in dts:
        half = np.exp(-0.5 * dt * p**2)
        t = 0.0
        while True:
            # the potential is frozen at the current iterate: taking it from
            # the half-kicked state would bias the fixed point at O(dt)
            rho = psi * psi
            V = EIGHT_PI * a * rho + radial.coulomb_from_density(grid, rho)
            psi_k = radial.dst(half * radial.dst(r * psi)) / r
            psi_k = psi_k * np.exp(-dt * V)
            new = radial.dst(half * radial.dst(r * psi_k)) / r
            new /= math.sqrt(radial.integrate(grid, new * new))
            change = math.sqrt(radial.integrate(grid, (new - psi) ** 2))
            psi = new
            t += dt
            if change < tol * dt or t > t_max:
                break
        fixed.append(psi.copy())
    if len(fixed) >= 2:
        d1, d2 = dts[-2], dts[-1]
        w = d1 * d1 / (d1 * d1 - d2 * d2)
        psi = w * fixed[-1] + (1.0 - w) * fixed[-2]
        psi /= math.sqrt(radial.integrate(grid, psi * psi))
    return psi


def snapshot_header(state: StationaryState) -> str:
    return f"eps={state.eps:.17g} a={state.a:.17g} branch={state.branch}"


def write_state(path, state: StationaryState) -> None:
    radial.write_snapshot(path, state.psi, extra_header=snapshot_header(state))
