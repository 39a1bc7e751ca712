"""Real-time split-operator propagation of radial condensate wave functions.

One step is the symmetric product ``K(dt/2) V(dt) K(dt/2)``: the kinetic
factor ``exp(-i p^2 dt/2)`` acts on the sine coefficients of ``u = r psi``,
the potential factor ``exp(-i dt (Vc + Vu))`` acts pointwise, with both
potentials evaluated from the density after the first kinetic half-step.
Since the potential factor leaves ``|psi|`` unchanged this is an exact
composition of the two sub-flows.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import radial
from .radial import RadialWaveFunction

log = logging.getLogger(__name__)

EIGHT_PI = 8.0 * math.pi
DT_GENERIC = 1e-2
DT_NEAR_HYPERBOLIC = 1e-4
BOUNDARY_FLOOR = 1e-8
CSV_COLUMNS = ("t", "norm", "width", "energy", "eps")


@dataclass
class PropagationConfig:
    dt: float = DT_GENERIC
    t_end: float = 10.0
    record_every: int = 10
    drift_tolerance: float = 1e-6
    boundary_floor: float = BOUNDARY_FLOOR
    snapshot_times: tuple = ()
    check_boundary: bool = True
    monopolar: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end > 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if self.record_every < 1:
            raise ValueError(f"record_every must be >= 1, got {self.record_every}")


@dataclass
class TimeSeries:
    t: list = field(default_factory=list)
    norm: list = field(default_factory=list)
    width: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    eps: list = field(default_factory=list)
    p_width: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)
    status: str = "complete"  # or "position-boundary", "momentum-boundary"
    converged: bool = True
    a: float = float("nan")

    def append(self, t: float, obs: radial.Observables) -> None:
        self.t.append(t)
        self.norm.append(obs.norm)
        self.width.append(obs.width)
        self.energy.append(obs.energy)
        self.eps.append(obs.eps)
        self.p_width.append(math.sqrt(obs.kinetic / obs.norm))

    def arrays(self) -> dict[str, np.ndarray]:
        return {k: np.asarray(getattr(self, k)) for k in (*CSV_COLUMNS, "p_width")}

    @property
    def aborted(self) -> bool:
        return self.status != "complete"

    @property
    def energy_drift(self) -> float:
        e = np.asarray(self.energy)
        return float(np.max(np.abs(e - e[0]))) if e.size else 0.0

    def write_csv(self, path) -> None:
        data = np.column_stack([np.asarray(getattr(self, k)) for k in CSV_COLUMNS])
        np.savetxt(Path(path), data, fmt="%.17g", delimiter=",", header=",".join(CSV_COLUMNS), comments="")


def read_csv(path) -> TimeSeries:
    data = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
    ts = TimeSeries()
    for i, key in enumerate(CSV_COLUMNS):
        setattr(ts, key, list(data[:, i]))
    return ts


def _potential(grid: radial.RadialGrid, psi: np.ndarray, a: float, monopolar: bool) -> np.ndarray:
    rho = np.abs(psi) ** 2
    V = EIGHT_PI * a * rho
    if monopolar:
        V = V + radial.coulomb_from_density(grid, rho)
    return V


def step(psi: RadialWaveFunction, a: float, dt: float, monopolar: bool = True) -> RadialWaveFunction:
    """Advance by one Strang step of length ``dt``."""
    grid = psi.grid
    r = grid.r
    half = np.exp(-0.5j * dt * grid.p**2)
    vals = radial.dst(half * radial.dst(r * psi.values)) / r
    vals = vals * np.exp(-1j * dt * _potential(grid, vals, a, monopolar))
    vals = radial.dst(half * radial.dst(r * vals)) / r
    return psi.with_values(vals)


def _boundary_status(psi: RadialWaveFunction, floor: float) -> str | None:
    if radial.boundary_ratio(psi.values) > floor:
        return "position-boundary"
    if radial.boundary_ratio(radial.momentum_amplitudes(psi)) > floor:
        return "momentum-boundary"
    return None


def evolve(psi0: RadialWaveFunction, a: float, config: PropagationConfig) -> tuple[TimeSeries, RadialWaveFunction]:
    """Propagate and record observables every ``record_every`` steps.

    Consecutive kinetic half-steps are fused between records.  The run stops
    early when the wave function reaches the border of the position or
    momentum grid (``status`` names which); the last recorded state is then
    the final state.  Energy drift beyond ``drift_tolerance`` marks the run
    as not converged.
    """
    grid = psi0.grid
    r = grid.r
    dt = config.dt
    n_steps = int(round(config.t_end / dt))
    half = np.exp(-0.5j * dt * grid.p**2)
    full = half * half
    series = TimeSeries(a=a)
    series.append(0.0, radial.observables(psi0, a))
    snaps = sorted(config.snapshot_times)
    snap_steps = {int(round(t / dt)): t for t in snaps}
    if 0 in snap_steps:
        series.snapshots[0.0] = psi0.values.copy()
    if config.check_boundary:
        status = _boundary_status(psi0, config.boundary_floor)
        if status:
            series.status = status
            return series, psi0

    c = radial.dst(r * psi0.values)
    done = 0
    current = psi0
    while done < n_steps:
        block = min(config.record_every, n_steps - done)
        # stop at a requested snapshot
        upcoming = [k for k in snap_steps if done < k <= done + block]
        if upcoming:
            block = min(upcoming) - done
        c = half * c
        for i in range(block):
            vals = radial.dst(c) / r
            vals *= np.exp(-1j * dt * _potential(grid, vals, a, config.monopolar))
            c = radial.dst(r * vals)
            c = (full if i < block - 1 else half) * c
        done += block
        current = psi0.with_values(radial.dst(c) / r)
        t = done * dt
        if done in snap_steps:
            series.snapshots[snap_steps[done]] = current.values.copy()
        if done % config.record_every == 0 or done == n_steps:
            obs = radial.observables(current, a)
            series.append(t, obs)
            if not np.isfinite(obs.width):
                series.status = "momentum-boundary"
                break
            if config.check_boundary:
                status = _boundary_status(current, config.boundary_floor)
                if status:
                    series.status = status
                    log.info("run stopped at t=%.4f: %s", t, status)
                    break
    series.converged = series.energy_drift <= config.drift_tolerance
    return series, current


@dataclass
class CollapseReport:
    kind: str  # oscillating, collapsing, expanding, stationary, indeterminate
    last_time: float
    momentum_growth: float
    detail: str = ""


def _extrema(w: np.ndarray, swing: float) -> tuple[int, int]:
    """Count turning points whose excursion exceeds ``swing`` (hysteresis)."""
    maxima = minima = 0
    hi = lo = w[0]
    direction = 0
    for x in w[1:]:
        hi, lo = max(hi, x), min(lo, x)
        if direction >= 0 and x < hi - swing:
            if direction > 0:
                maxima += 1
            direction, lo = -1, x
        elif direction <= 0 and x > lo + swing:
            if direction < 0:
                minima += 1
            direction, hi = 1, x
    return maxima, minima


def collapse_monitor(series: TimeSeries, stationary_tol: float = 5e-3) -> CollapseReport:
    """Classify the dynamics of a run from its width history.

    * stationary: the width varies by less than ``stationary_tol`` (relative).
    * collapsing: the width shrinks towards zero, typically ending on the
      momentum-grid border.
    * expanding: the width in the second half grows with a sustained trend
      larger than the modulation.
    * oscillating: at least one maximum and one minimum, each a swing of
      more than ``stationary_tol`` of the initial width, without a trend.
    """
    t = np.asarray(series.t)
    w = np.asarray(series.width)
    pw = np.asarray(series.p_width)
    growth = float(pw[-1] / pw[0]) if pw.size else float("nan")
    if w.size < 3:
        return CollapseReport("indeterminate", float(t[-1]) if t.size else 0.0, growth, "too few samples")
    w0 = w[0]
    rel_range = (w.max() - w.min()) / w0
    if rel_range < stationary_tol and not series.aborted:
        return CollapseReport("stationary", float(t[-1]), growth, f"relative width range {rel_range:.2e}")
    shrinking = w[-1] < 0.7 * w0 and w[-1] <= w[-max(2, w.size // 20):].min() + 1e-12
    if series.status == "momentum-boundary" or (shrinking and growth > 1.5):
        return CollapseReport("collapsing", float(t[-1]), growth, f"width {w[-1]:.4g} at t={t[-1]:.4g}")
    half = w.size // 2
    tt, ww = t[half:], w[half:]
    slope, intercept = np.polyfit(tt, ww, 1)
    trend = slope * (tt[-1] - tt[0])
    resid = ww - (slope * tt + intercept)
    modulation = resid.max() - resid.min()
    if trend > 0.1 * w0 and trend > modulation:
        return CollapseReport("expanding", float(t[-1]), growth, f"width slope {slope:.4g}")
    maxima, minima = _extrema(w, stationary_tol * w0)
    if maxima >= 1 and minima >= 1:
        return CollapseReport("oscillating", float(t[-1]), growth,
                              f"{maxima} maxima, width band [{w.min():.4g}, {w.max():.4g}]")
    return CollapseReport("indeterminate", float(t[-1]), growth, f"{maxima} maxima, trend {trend:.3g}")
