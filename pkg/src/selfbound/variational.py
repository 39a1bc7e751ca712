"""Gaussian variational dynamics of the self-bound condensate.

The trial state is ``exp(-(A_i r^2 + gamma_i) + i (A_r r^2 + gamma_r))``;
the time-dependent variational principle turns the scaled GPE into three
real ODEs for ``(A_r, A_i, gamma_r)``, while ``gamma_i`` follows from the
norm.  The flow is Hamiltonian in ``q = sqrt(<r^2>)`` and ``p = 2 q A_r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .units import A_CRITICAL

SQRT_PI = math.sqrt(math.pi)

#: ``A_i`` beyond which an orbit counts as collapsed.
A_DIVERGENCE = 1e6
DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12


class InconclusiveIntegration(RuntimeError):
    """The integration window ended before the orbit could be classified."""


@dataclass(frozen=True)
class VariationalState:
    A_r: float
    A_i: float
    gamma_r: float = 0.0

    def __post_init__(self):
        _check_width(self.A_i)

    @property
    def width(self) -> float:
        return math.sqrt(0.75 / self.A_i)

    @property
    def gamma_i(self) -> float:
        return gamma_i_of(self.A_i)


@dataclass(frozen=True)
class CanonicalState:
    q: float
    p: float

    def __post_init__(self):
        if not self.q > 0:
            raise ValueError(f"canonical coordinate q must be positive, got {self.q}")


@dataclass(frozen=True)
class FixedPointPair:
    """Stationary Gaussians at a given scattering length.

    The stable (ground) root has the smaller ``A_i``, i.e. the larger width.
    For ``a >= 0`` only the stable root exists and the unstable fields are
    ``None``.
    """

    a: float
    A_i_stable: float
    A_i_unstable: float | None
    eps_stable: float
    eps_unstable: float | None

    @property
    def degenerate(self) -> bool:
        return self.A_i_unstable is not None and self.A_i_stable == self.A_i_unstable


def _check_width(A_i: float) -> None:
    if not A_i > 0:
        raise ValueError(f"A_i must be positive for a normalizable Gaussian, got {A_i}")


def eom_rhs(s: VariationalState, a: float) -> tuple[float, float, float]:
    """Time derivatives ``(dA_r, dA_i, dgamma_r)``."""
    return _rhs(s.A_r, s.A_i, a)


def _rhs(A_r: float, A_i: float, a: float) -> tuple[float, float, float]:
    _check_width(A_i)
    sq = math.sqrt(A_i)
    dA_r = -4.0 * (A_r * A_r - A_i * A_i) + (8.0 / SQRT_PI) * A_i * sq * (a * A_i - 1.0 / 6.0)
    dA_i = -8.0 * A_r * A_i
    dgamma_r = -6.0 * A_i + sq / SQRT_PI * (5.0 - 14.0 * a * A_i)
    return dA_r, dA_i, dgamma_r


def gamma_i_of(A_i: float) -> float:
    """Imaginary phase that normalizes the Gaussian."""
    _check_width(A_i)
    return -0.75 * math.log(2.0 * A_i / math.pi)


def chemical_potential(A_i: float, a: float) -> float:
    """``eps = -dgamma_r/dt`` of a stationary Gaussian."""
    return -_rhs(0.0, A_i, a)[2]


def fixed_points(a: float) -> FixedPointPair | None:
    """Stationary Gaussians, or ``None`` below the tangent bifurcation.

    With ``x = sqrt(A_i)`` the condition ``dA_r = 0`` is the quadratic
    ``(8a/sqrt(pi)) x^2 + 4x - 4/(3 sqrt(pi)) = 0``; the roots are taken in a
    cancellation-free form, which also covers ``a = 0``.
    """
    disc = 16.0 + 128.0 * a / (3.0 * math.pi)
    if a < A_CRITICAL or disc < 0.0:
        return None
    sq = math.sqrt(max(disc, 0.0))
    c = 4.0 / (3.0 * SQRT_PI)
    x_stable = 2.0 * c / (4.0 + sq)
    A_s = x_stable * x_stable
    if a < 0.0:
        q = 8.0 * a / SQRT_PI
        x_unstable = -(4.0 + sq) / (2.0 * q)
        A_u = x_unstable * x_unstable
        if a == A_CRITICAL or sq == 0.0:
            A_u = A_s
        return FixedPointPair(a, A_s, A_u, chemical_potential(A_s, a), chemical_potential(A_u, a))
    return FixedPointPair(a, A_s, None, chemical_potential(A_s, a), None)


def fixed_point_formula(a: float) -> tuple[float, float]:
    """Both roots ``1/(6a) + pi/(8a^2) (1 -/+ sqrt(1 + 8a/(3pi)))`` for ``a < 0``."""
    s = math.sqrt(1.0 + 8.0 * a / (3.0 * math.pi))
    base = 1.0 / (6.0 * a)
    return (
        base + math.pi / (8.0 * a * a) * (1.0 - s),
        base + math.pi / (8.0 * a * a) * (1.0 + s),
    )


def chemical_potential_formula(a: float) -> tuple[float, float]:
    """Closed-form chemical potentials ``(eps_stable, eps_unstable)``.

    The stable (ground) root carries the ``+`` sign of the square root.
    """
    s = math.sqrt(1.0 + 8.0 * a / (3.0 * math.pi))
    k = -4.0 / (9.0 * math.pi)
    return k * (5.0 + 4.0 * s) / (1.0 + s) ** 2, k * (5.0 - 4.0 * s) / (1.0 - s) ** 2


def _bifurcation_root(a: float) -> float:
    if not a > A_CRITICAL:
        raise ValueError(f"linearization requires a > -3pi/8 = {A_CRITICAL:.6f}, got {a}")
    return math.sqrt(1.0 + 8.0 * a / (3.0 * math.pi))


def _sign(branch: str) -> float:
    if branch == "stable":
        return 1.0
    if branch == "unstable":
        return -1.0
    raise ValueError(f"branch must be 'stable' or 'unstable', got {branch!r}")


def analytic_eigenvalues(a: float, branch: str) -> tuple[complex, complex]:
    """Closed-form linearization eigenvalues ``(+lam, -lam)``.

    Purely imaginary on the stable branch, purely real on the unstable one.
    """
    sgn = _sign(branch)
    s = _bifurcation_root(a)
    mag = 16.0 / (9.0 * math.pi) * s**0.5 / (s + sgn) ** 2
    lam = 1j * mag if sgn > 0 else complex(mag)
    return lam, -lam


def jacobian(a: float, branch: str) -> np.ndarray:
    """Linearized flow of ``(A_r, A_i)`` at a fixed point (zero diagonal)."""
    sgn = _sign(branch)
    s = _bifurcation_root(a)
    d = (s + sgn) ** 2
    return np.array(
        [
            [0.0, sgn * 8.0 / (9.0 * math.pi) * s / d],
            [-32.0 / (9.0 * math.pi) / d, 0.0],
        ]
    )


def mean_field_energy(s: VariationalState, a: float) -> float:
    return _energy(s.A_r, s.A_i, a)


def _energy(A_r, A_i, a):
    return 3.0 * (A_i * A_i + A_r * A_r) / A_i + 2.0 * np.sqrt(A_i) * (2.0 * a * A_i - 1.0) / SQRT_PI


def to_canonical(s: VariationalState) -> CanonicalState:
    root = math.sqrt(3.0 / s.A_i)
    return CanonicalState(q=0.5 * root, p=s.A_r * root)


def from_canonical(c: CanonicalState, gamma_r: float = 0.0) -> VariationalState:
    return VariationalState(A_r=c.p / (2.0 * c.q), A_i=3.0 / (4.0 * c.q * c.q), gamma_r=gamma_r)


def potential_V(q, a: float):
    """Potential part of the canonical Hamiltonian ``H = p^2 + V(q)``."""
    q = np.asarray(q, dtype=float)
    if np.any(q <= 0):
        raise ValueError("potential_V requires q > 0")
    k = math.sqrt(3.0) / SQRT_PI
    out = 9.0 / (4.0 * q * q) + 1.5 * k * a / q**3 - k / q
    return float(out) if out.ndim == 0 else out


def potential_dV(q, a: float):
    q = np.asarray(q, dtype=float)
    k = math.sqrt(3.0) / SQRT_PI
    out = -9.0 / (2.0 * q**3) - 4.5 * k * a / q**4 + k / q**2
    return float(out) if out.ndim == 0 else out


def hamiltonian(c: CanonicalState, a: float) -> float:
    return c.p * c.p + potential_V(c.q, a)


def hamilton_rhs(c: CanonicalState, a: float) -> tuple[float, float]:
    """``(dq/dt, dp/dt) = (dH/dp, -dH/dq)``."""
    return 2.0 * c.p, -potential_dV(c.q, a)


@dataclass
class OrbitResult:
    """Sampled variational orbit.

    ``cause`` is ``"t_end"`` or ``"collapse"``; for collapsing orbits
    ``collapse_time`` is the extrapolated time of vanishing width.
    """

    t: np.ndarray
    A_r: np.ndarray
    A_i: np.ndarray
    gamma_r: np.ndarray
    a: float
    cause: str
    collapse_time: float | None = None

    @property
    def width(self) -> np.ndarray:
        return np.sqrt(0.75 / self.A_i)

    @property
    def energy(self) -> np.ndarray:
        return _energy(self.A_r, self.A_i, self.a)

    def rows(self):
        yield from zip(self.t, self.A_r, self.A_i, self.gamma_r, self.width, self.energy)


def _terminal_time(A_r: float, A_i: float, a: float) -> float:
    """Remaining time to zero width, from the leading collapse asymptotics.

    Near ``q -> 0`` the ``a/q^3`` term dominates both the potential and the
    energy, so ``dq/dt = -2 sqrt(k/q^3)`` with ``k = -3 sqrt(3) a /
    (2 sqrt(pi))``, giving ``T_c - t = q^(5/2) / (5 sqrt(k))``.  For ``a >= 0``
    the kinetic ``1/q^2`` term dominates and the remaining time is ``q^2 /
    (2 |p|)``-like; it is below reporting precision either way.
    """
    c = to_canonical(VariationalState(A_r, A_i))
    if a < 0:
        k = -1.5 * math.sqrt(3.0) * a / SQRT_PI
        return c.q**2.5 / (5.0 * math.sqrt(k))
    return c.q / max(2.0 * abs(c.p), 1e-300)


def integrate_orbit(
    s0: VariationalState,
    a: float,
    t_end: float,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    n_samples: int | None = None,
    A_div: float = A_DIVERGENCE,
) -> OrbitResult:
    """Integrate the variational equations with an adaptive 8th-order pair.

    Stops at ``t_end`` or when ``A_i`` exceeds ``A_div`` (collapse).  When the
    step size underflows near the singularity the run is still reported as a
    collapse, bracketed by the last accepted time.
    """
    if not t_end > 0:
        raise ValueError(f"t_end must be positive, got {t_end}")
    _check_width(s0.A_i)

    def rhs(t, y):
        return _rhs(y[0], y[1], a)

    def blowup(t, y):
        return y[1] - A_div

    blowup.terminal = True
    blowup.direction = 1

    t_eval = None
    if n_samples is not None:
        t_eval = np.linspace(0.0, t_end, n_samples)
    sol = solve_ivp(
        rhs,
        (0.0, t_end),
        [s0.A_r, s0.A_i, s0.gamma_r],
        method="DOP853",
        rtol=rtol,
        atol=atol,
        events=blowup,
        t_eval=t_eval,
        dense_output=False,
    )
    t, y = sol.t, sol.y
    if sol.status == 1:
        t_hit = float(sol.t_events[0][0])
        y_hit = sol.y_events[0][0]
        t = np.append(t[t < t_hit], t_hit)
        y = np.column_stack([y[:, : t.size - 1], y_hit])
        tc = t_hit + _terminal_time(y_hit[0], y_hit[1], a)
        return OrbitResult(t, y[0], y[1], y[2], a, "collapse", tc)
    if sol.status == -1:
        # step-size underflow: only happens while A_i runs away
        if y[1, -1] > 1e3 * s0.A_i and y[0, -1] < 0:
            tc = float(t[-1]) + _terminal_time(y[0, -1], y[1, -1], a)
            return OrbitResult(t, y[0], y[1], y[2], a, "collapse", tc)
        raise RuntimeError(f"orbit integration failed at t={t[-1]}: {sol.message}")
    return OrbitResult(t, y[0], y[1], y[2], a, "t_end")


def integrate_canonical(c0: CanonicalState, a: float, t_eval, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """Integrate Hamilton's equations; returns ``(q(t), p(t))`` at ``t_eval``."""
    t_eval = np.asarray(t_eval, dtype=float)

    def rhs(t, y):
        return [2.0 * y[1], -potential_dV(y[0], a)]

    sol = solve_ivp(rhs, (0.0, t_eval[-1]), [c0.q, c0.p], method="DOP853", rtol=rtol, atol=atol, t_eval=t_eval)
    if sol.status != 0:
        raise RuntimeError(sol.message)
    return sol.y[0], sol.y[1]


def is_trapped(s: VariationalState, a: float) -> bool:
    """Energy criterion for a bounded orbit inside the stable well."""
    fp = fixed_points(a)
    if fp is None or fp.A_i_unstable is None:
        # without a barrier, a bound orbit needs E < 0 (V -> 0 at infinity
        # and V -> +inf at q -> 0 only for a >= 0)
        return a >= 0 and mean_field_energy(s, a) < 0
    q_barrier = to_canonical(VariationalState(0.0, fp.A_i_unstable)).q
    c = to_canonical(s)
    return c.q > q_barrier and hamiltonian(c, a) < potential_V(q_barrier, a) and hamiltonian(c, a) < 0


def collapse_time(s0: VariationalState, a: float, t_max: float = 1e4, **kwargs) -> float | None:
    """Time at which the width of the orbit reaches zero.

    Returns ``None`` for orbits trapped in the stable well.  Raises
    :class:`InconclusiveIntegration` when ``t_max`` passes without collapse
    for an orbit the energy criterion cannot rule out.
    """
    if is_trapped(s0, a):
        return None
    orbit = integrate_orbit(s0, a, t_max, **kwargs)
    if orbit.cause == "collapse":
        return orbit.collapse_time
    raise InconclusiveIntegration(
        f"no collapse by t={t_max} (final A_i={orbit.A_i[-1]:.4g}); extend t_max"
    )


@dataclass(frozen=True)
class FixedPointKind:
    A_r: float
    A_i: float
    kind: str  # "center" or "saddle"


def classify_fixed_points(a: float) -> list[FixedPointKind]:
    """Type of every stationary point of the energy surface ``E(A_r, A_i)``."""
    fp = fixed_points(a)
    if fp is None:
        return []
    roots = [fp.A_i_stable]
    if fp.A_i_unstable is not None and not fp.degenerate:
        roots.append(fp.A_i_unstable)
    out = []
    for A_i in roots:
        h = 1e-5 * A_i
        e_ii = (_energy(0.0, A_i + h, a) - 2 * _energy(0.0, A_i, a) + _energy(0.0, A_i - h, a)) / h**2
        e_rr = 6.0 / A_i
        out.append(FixedPointKind(0.0, A_i, "center" if e_ii * e_rr > 0 else "saddle"))
    return out


@dataclass
class PhasePortrait:
    a: float
    levels: np.ndarray
    curves: list  # one list of (N, 2) arrays per level
    plane: str
    separatrix_level: float | None


def phase_portrait(
    a: float,
    levels=None,
    plane: str = "A",
    extent=None,
    resolution: int = 400,
    seeds=None,
) -> PhasePortrait:
    """Iso-energy curves of the conserved mean-field energy.

    ``plane="A"`` draws in ``(A_r, A_i)``, ``plane="qp"`` in ``(q, p)``.
    Levels are taken from ``levels`` or the energies of ``seeds`` (states);
    by default a spread around the fixed-point energies, with the saddle
    level included when a saddle exists.
    """
    import contourpy

    fp = fixed_points(a)
    sep = None
    if fp is not None and fp.A_i_unstable is not None:
        sep = _energy(0.0, fp.A_i_unstable, a)
    if plane == "A":
        ext = extent or (-0.6, 0.6, 1e-3, 1.0)
        x = np.linspace(ext[0], ext[1], resolution)
        y = np.linspace(ext[2], ext[3], resolution)
        X, Y = np.meshgrid(x, y)
        Z = _energy(X, Y, a)
    elif plane == "qp":
        ext = extent or (0.2, 6.0, -1.5, 1.5)
        x = np.linspace(ext[0], ext[1], resolution)
        y = np.linspace(ext[2], ext[3], resolution)
        X, Y = np.meshgrid(x, y)
        Z = Y * Y + potential_V(X, a)
    else:
        raise ValueError(f"plane must be 'A' or 'qp', got {plane!r}")
    if levels is None and seeds is not None:
        levels = [mean_field_energy(s, a) for s in seeds]
    if levels is None:
        if fp is not None:
            lo = fp.eps_stable  # only used as a scale
            e_min = _energy(0.0, fp.A_i_stable, a)
            top = sep if sep is not None else 0.0
            levels = list(np.linspace(e_min, top, 8)[1:]) + [top + 0.2 * abs(lo)]
        else:
            levels = list(np.linspace(-1.5, 0.5, 9))
    levels = np.asarray(sorted(levels), dtype=float)
    gen = contourpy.contour_generator(X, Y, Z, line_type="Separate")
    curves = [gen.lines(level) for level in levels]
    return PhasePortrait(a, levels, curves, plane, sep)
