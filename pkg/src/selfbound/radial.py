"""Radial spectral representation of spherically symmetric wave functions.

A wave function is stored through samples ``psi(r_k)`` at ``r_k = k*dr``,
``k = 1..n``.  The reduced function ``u = r*psi`` vanishes at the origin and
at ``L = (n+1)*dr``, so the type-I discrete sine transform diagonalizes the
radial Laplacian: ``-Laplace psi = (1/r) * S[p**2 * S[u]]`` with
``p_j = j*pi/L``.  All quadratures are plain sums, which is the composite
trapezoid rule on ``[0, L]`` for integrands vanishing at both ends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import fft

DEFAULT_N = 1023
DEFAULT_R_MAX = 60.0


class GridViolation(RuntimeError):
    """The wave function does not vanish at the grid border."""


@dataclass(frozen=True)
class RadialGrid:
    n: int
    dr: float

    def __post_init__(self):
        if self.n < 4:
            raise ValueError(f"grid needs at least 4 points, got {self.n}")
        if not self.dr > 0:
            raise ValueError(f"grid spacing must be positive, got {self.dr}")

    @classmethod
    def from_extent(cls, n: int = DEFAULT_N, r_max: float = DEFAULT_R_MAX) -> "RadialGrid":
        return cls(int(n), float(r_max) / int(n))

    @property
    def r(self) -> np.ndarray:
        return self.dr * np.arange(1, self.n + 1)

    @property
    def r_max(self) -> float:
        return self.n * self.dr

    @property
    def length(self) -> float:
        """Position of the Dirichlet wall of the sine basis."""
        return (self.n + 1) * self.dr

    @property
    def dp(self) -> float:
        return math.pi / self.length

    @property
    def p(self) -> np.ndarray:
        return self.dp * np.arange(1, self.n + 1)

    @property
    def p_max(self) -> float:
        return self.n * self.dp

    @property
    def _pair_factor(self) -> float:
        # dr*sqrt((n+1)/pi): maps the orthonormal DST onto the continuous
        # radial transform sqrt(2/pi)/p * int u(r) sin(pr) dr
        return self.dr * math.sqrt((self.n + 1) / math.pi)


@dataclass(frozen=True)
class RadialWaveFunction:
    grid: RadialGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.shape != (self.grid.n,):
            raise ValueError(
                f"expected {self.grid.n} samples, got array of shape {values.shape}"
            )
        object.__setattr__(self, "values", values)

    @property
    def r(self) -> np.ndarray:
        return self.grid.r

    @property
    def u(self) -> np.ndarray:
        return self.grid.r * self.values

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def norm(self) -> float:
        return integrate(self.grid, self.density)

    def with_values(self, values: np.ndarray) -> "RadialWaveFunction":
        return RadialWaveFunction(self.grid, values)


def integrate(grid: RadialGrid, f: np.ndarray) -> float:
    """``4*pi * integral f(r) r^2 dr`` over the grid."""
    r = grid.r
    return float(4.0 * np.pi * grid.dr * np.sum(f * r * r).real)


def dst(x: np.ndarray) -> np.ndarray:
    """Orthonormal type-I sine transform; it is its own inverse."""
    return fft.dst(x, type=1, norm="ortho")


def sine_transform(values: np.ndarray, grid: RadialGrid, direction: str = "forward") -> np.ndarray:
    """Radial 3D Fourier transform of a spherically symmetric function.

    Forward maps ``psi(r_k)`` to ``phi(p_j) = sqrt(2/pi)/p * int r psi(r)
    sin(p r) dr``, the unitary 3D transform restricted to s-waves; backward
    is the same formula with the roles of ``r`` and ``p`` exchanged.  With
    this convention the pair is exactly inverse and Parseval holds:
    ``4pi sum |psi|^2 r^2 dr == 4pi sum |phi|^2 p^2 dp``.
    """
    values = np.asarray(values)
    if values.shape != (grid.n,):
        raise ValueError(f"expected {grid.n} samples, got shape {values.shape}")
    if direction == "forward":
        return grid._pair_factor * dst(grid.r * values) / grid.p
    if direction == "backward":
        return dst(grid.p * values) / (grid._pair_factor * grid.r)
    raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")


def momentum_amplitudes(psi: RadialWaveFunction) -> np.ndarray:
    return sine_transform(psi.values, psi.grid, "forward")


def contact_potential(psi: RadialWaveFunction, a: float) -> np.ndarray:
    return 8.0 * np.pi * a * psi.density


def coulomb_from_density(grid: RadialGrid, density: np.ndarray) -> np.ndarray:
    """``-2 * int density(r') / |r - r'| d^3r'`` for a radial density.

    ``w = r*V`` obeys ``w'' = 8 pi r density``; solving it in the sine basis
    pins ``w(L) = 0``, which differs from the free-space solution by the
    harmonic function ``2 M r / L`` (``M`` the total charge).  That constant
    offset of ``V`` is removed exactly.
    """
    r, p = grid.r, grid.p
    w = dst(-8.0 * np.pi * dst(r * density) / p**2)
    charge = integrate(grid, density)
    return w / r - 2.0 * charge / grid.length


def monopolar_potential(psi: RadialWaveFunction) -> np.ndarray:
    return coulomb_from_density(psi.grid, psi.density)


def apply_kinetic(grid: RadialGrid, values: np.ndarray) -> np.ndarray:
    """``-Laplace`` applied spectrally."""
    return dst(grid.p**2 * dst(grid.r * values)) / grid.r


@dataclass(frozen=True)
class Observables:
    norm: float
    width: float
    energy: float
    eps: float
    kinetic: float
    contact: float
    monopolar: float


def observables(psi: RadialWaveFunction, a: float) -> Observables:
    """Norm, rms width and the energy functionals of a radial state.

    ``energy = T + Vc/2 + Vu/2`` is the conserved mean-field energy;
    ``eps = T + Vc + Vu`` is the chemical-potential functional.  The
    components are integrals, not divided by the norm.
    """
    grid = psi.grid
    dens = psi.density
    norm = integrate(grid, dens)
    if not norm > 0:
        raise ValueError("observables of a zero wave function are undefined")
    c = dst(psi.u)
    kinetic = float(4.0 * np.pi * grid.dr * np.sum(grid.p**2 * np.abs(c) ** 2))
    contact = integrate(grid, contact_potential(psi, a) * dens)
    mono = integrate(grid, coulomb_from_density(grid, dens) * dens)
    width = math.sqrt(integrate(grid, grid.r**2 * dens) / norm)
    return Observables(
        norm=norm,
        width=width,
        energy=kinetic + 0.5 * contact + 0.5 * mono,
        eps=kinetic + contact + mono,
        kinetic=kinetic,
        contact=contact,
        monopolar=mono,
    )


def rms_width(psi: RadialWaveFunction) -> float:
    dens = psi.density
    return math.sqrt(integrate(psi.grid, psi.grid.r**2 * dens) / integrate(psi.grid, dens))


def gaussian_state(grid: RadialGrid, A: complex, normalize: bool = True) -> RadialWaveFunction:
    """Sample ``exp(i (A r^2 + gamma))``.

    With ``normalize`` the imaginary phase ``gamma_i = -3/4 ln(2 A_i/pi)``
    gives unit norm; otherwise ``gamma = 0``.
    """
    A = complex(A)
    if not A.imag > 0:
        raise ValueError(f"Gaussian with Im(A) = {A.imag} is not normalizable")
    gamma_i = -0.75 * math.log(2.0 * A.imag / math.pi) if normalize else 0.0
    r2 = grid.r**2
    values = np.exp(1j * A * r2 - gamma_i)
    return RadialWaveFunction(grid, values)


def evaluate_sine_series(grid: RadialGrid, values: np.ndarray, r_new: np.ndarray) -> np.ndarray:
    """Band-limited interpolation of ``psi`` at arbitrary radii.

    Sums the sine series of ``u = r*psi``; points beyond the Dirichlet wall
    evaluate to zero.
    """
    c = dst(grid.r * np.asarray(values))
    scale = math.sqrt(2.0 / (grid.n + 1))
    r_new = np.asarray(r_new, dtype=float)
    out = np.zeros(r_new.shape, dtype=np.result_type(c, float))
    inside = (r_new > 0) & (r_new < grid.length)
    ri = r_new[inside]
    # chunked to bound memory at n x chunk
    chunk = max(1, 2**22 // grid.n)
    u = np.empty(ri.shape, dtype=out.dtype)
    for s in range(0, ri.size, chunk):
        rr = ri[s : s + chunk]
        u[s : s + chunk] = scale * (np.sin(np.outer(rr, grid.p)) @ c)
    out[inside] = u / ri
    return out


def deform(psi: RadialWaveFunction, f: float, tolerance: float = 1e-10) -> RadialWaveFunction:
    """Norm-preserving stretch ``psi(r) -> f * psi(f**(2/3) * r)``.

    Raises :class:`GridViolation` when the stretched state would carry more
    than ``tolerance`` of its norm past the grid border.
    """
    if not f > 0:
        raise ValueError(f"stretching factor must be positive, got {f}")
    if f == 1.0:
        return psi
    grid = psi.grid
    s = f ** (2.0 / 3.0)
    if s < 1.0:
        lost = integrate(grid, np.where(grid.r > s * grid.r_max, psi.density, 0.0))
        total = psi.norm()
        if lost > tolerance * total:
            raise GridViolation(
                f"stretch f={f} pushes {lost / total:.2e} of the norm past r_max={grid.r_max}"
            )
    values = f * evaluate_sine_series(grid, psi.values, s * grid.r)
    return RadialWaveFunction(grid, values)


def boundary_ratio(values: np.ndarray, edge: int = 3) -> float:
    """Largest magnitude among the outer ``edge`` samples relative to the peak."""
    mag = np.abs(values)
    peak = mag.max()
    if peak == 0:
        return 0.0
    return float(mag[-edge:].max() / peak)


def write_snapshot(path, psi: RadialWaveFunction, extra_header: str | None = None) -> None:
    """Plain-text snapshot: ``# r re_psi im_psi density`` and one row per point."""
    data = np.column_stack([psi.r, psi.values.real, np.imag(psi.values), psi.density])
    header = "r re_psi im_psi density"
    if extra_header:
        header = extra_header + "\n" + header
    np.savetxt(Path(path), data, fmt="%.17g", header=header, comments="# ")


def read_snapshot(path) -> RadialWaveFunction:
    data = np.loadtxt(Path(path), comments="#", ndmin=2)
    r = data[:, 0]
    grid = RadialGrid(len(r), float(r[0]))
    if not np.allclose(r, grid.r, rtol=1e-12, atol=0.0):
        raise ValueError(f"{path}: radii are not an equidistant grid starting at dr")
    return RadialWaveFunction(grid, data[:, 1] + 1j * data[:, 2])
