"""Scaled unit system and the norm rescaling shared by all solvers.

Everything outside this module works in scaled units, where the particle
number and the physical scattering length collapse into the single
parameter ``a = N**2 * a_phys`` (lengths in ``a_u``, times in ``t_u``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: Critical scaled scattering length of the variational tangent bifurcation.
A_CRITICAL = -3.0 * math.pi / 8.0


def is_above_bifurcation(a: float) -> bool:
    """True when the variational fixed points exist, i.e. ``a > -3*pi/8``."""
    return a > A_CRITICAL


def to_scaled(N: float, a_phys: float, t_phys: float) -> tuple[float, float]:
    """Convert a physical scattering length and time to scaled units."""
    if not N > 0:
        raise ValueError(f"particle number must be positive, got {N}")
    n2 = float(N) ** 2
    return n2 * a_phys, n2 * t_phys


def from_scaled(N: float, a_scaled: float, t_scaled: float) -> tuple[float, float]:
    """Inverse of :func:`to_scaled`."""
    if not N > 0:
        raise ValueError(f"particle number must be positive, got {N}")
    n2 = float(N) ** 2
    return a_scaled / n2, t_scaled / n2


def radial_norm(r: np.ndarray, psi: np.ndarray) -> float:
    """``4*pi * integral |psi|^2 r^2 dr`` by the composite trapezoid rule.

    ``r`` must be equidistant with ``r[0] == dr``; the integrand vanishes at
    the origin and is assumed negligible one spacing past ``r[-1]``, so the
    trapezoid reduces to a plain sum.
    """
    dr = r[1] - r[0]
    return float(4.0 * np.pi * dr * np.sum(np.abs(psi) ** 2 * r**2))


@dataclass(frozen=True)
class ScaledSolution:
    """A radial solution expressed at a particular norm scale."""

    r: np.ndarray
    psi: np.ndarray
    eps: float
    a: float
    lam: complex | None = None
    U: np.ndarray | None = None
    nu: float = 1.0


def scale_transform(
    r: np.ndarray,
    psi: np.ndarray,
    eps: float,
    a: float,
    nu: float,
    lam: complex | None = None,
    U: np.ndarray | None = None,
) -> ScaledSolution:
    """Apply the symmetry map of the stationary equations with factor ``nu``.

    ``(psi, r, eps, a, U, lam) -> (nu**2 psi, r/nu, nu**2 eps, a/nu**2,
    nu**2 U, nu**2 lam)``.  The stationary and linearized equations are
    invariant under it, and two applications compose multiplicatively.
    """
    if not nu > 0:
        raise ValueError(f"scale factor must be positive, got {nu}")
    nu2 = nu * nu
    return ScaledSolution(
        r=np.asarray(r) / nu,
        psi=nu2 * np.asarray(psi),
        eps=nu2 * eps,
        a=a / nu2,
        lam=None if lam is None else nu2 * lam,
        U=None if U is None else nu2 * np.asarray(U),
        nu=nu,
    )


def rescale_solution(
    r: np.ndarray,
    psi_raw: np.ndarray,
    eps_raw: float,
    a_raw: float,
    lambda_raw: complex | None = None,
    U_raw: np.ndarray | None = None,
) -> ScaledSolution:
    """Rescale a non-normalized solution to unit norm.

    The factor is ``nu = 1 / ||psi_raw||**2``; the returned solution lives on
    the stretched abscissa ``r / nu`` and has unit norm.
    """
    norm = radial_norm(np.asarray(r), np.asarray(psi_raw))
    if not norm > 0:
        raise ValueError("cannot rescale a wave function with zero norm")
    return scale_transform(r, psi_raw, eps_raw, a_raw, 1.0 / norm, lambda_raw, U_raw)
