"""Command-line front end.

Subcommands::

    variational-evolve  fixed-points  portrait  stationary
    stability-modes     propagate     figure

Every option can also come from a configuration file given with
``--config``.  The file is line oriented::

    # comment
    key = value        # trailing comments are allowed

Keys are the long option names with dashes or underscores
(``t_end``/``t-end``), values are numbers, words or comma-separated number
lists.  Command-line flags take precedence over the file; a key set in both
is reported on stderr.  Outputs go to ``--out`` (default: the directory in
``$SELFBOUND_OUTPUT_DIR``, else the working directory).

Exit codes: 0 success, 2 invalid configuration, 3 no convergence,
4 grid violation, 5 output not writable, 6 unknown figure preset.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import radial, stability, stationary, variational
from .propagator import PropagationConfig, collapse_monitor, evolve
from .radial import GridViolation, RadialGrid
from .stationary import NoConvergence, NoStationaryState

log = logging.getLogger("selfbound")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_CONVERGENCE = 3
EXIT_GRID = 4
EXIT_IO = 5
EXIT_UNKNOWN_PRESET = 6

OUTPUT_ENV = "SELFBOUND_OUTPUT_DIR"
COMMANDS = ("variational-evolve", "fixed-points", "portrait", "stationary",
            "stability-modes", "propagate", "figure")


class ConfigError(ValueError):
    """Invalid or incomplete configuration."""


class UnknownPreset(ConfigError):
    pass


@dataclass
class ScenarioConfig:
    command: str
    a: float | None = None
    Ai0: float | None = None
    Ar0: float = 0.0
    f: float = 1.0
    branch: str = "ground"
    n: int = radial.DEFAULT_N
    r_max: float = radial.DEFAULT_R_MAX
    dt: float | None = None
    t_end: float | None = None
    record_every: int | None = None
    a_min: float | None = None
    a_max: float | None = None
    points: int = 50
    plane: str = "A"
    snapshots: tuple = ()
    drift_tolerance: float = 1e-6
    preset: str | None = None
    out: str | None = None

    @property
    def output_dir(self) -> Path:
        return Path(self.out or os.environ.get(OUTPUT_ENV) or ".")


def _float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(text)
    return value


def _int(text: str) -> int:
    return int(text)


def _word(text: str) -> str:
    return text.strip()


def _floats(text: str) -> tuple:
    return tuple(_float(t) for t in text.split(",") if t.strip())


# key -> (parser, description of the expected type)
SCHEMA = {
    "a": (_float, "a number"),
    "Ai0": (_float, "a number"),
    "Ar0": (_float, "a number"),
    "f": (_float, "a number"),
    "branch": (_word, "'ground' or 'excited'"),
    "n": (_int, "an integer"),
    "r_max": (_float, "a number"),
    "dt": (_float, "a number"),
    "t_end": (_float, "a number"),
    "record_every": (_int, "an integer"),
    "a_min": (_float, "a number"),
    "a_max": (_float, "a number"),
    "points": (_int, "an integer"),
    "plane": (_word, "'A' or 'qp'"),
    "snapshots": (_floats, "comma-separated numbers"),
    "drift_tolerance": (_float, "a number"),
    "preset": (_word, "a preset name"),
    "out": (_word, "a directory"),
}

REQUIRED = {
    "variational-evolve": ("a", "Ai0"),
    "fixed-points": (),
    "portrait": ("a",),
    "stationary": ("a",),
    "stability-modes": ("a",),
    "propagate": ("a", "t_end"),
    "figure": ("preset",),
}


def _normalize_key(key: str) -> str:
    key = key.strip().replace("-", "_")
    lowered = {k.lower(): k for k in SCHEMA}
    return lowered.get(key.lower(), key)


def _convert(key: str, text: str, where: str):
    parser, expected = SCHEMA[key]
    try:
        return parser(text)
    except ValueError:
        raise ConfigError(f"{where}: '{key}' expects {expected}, got {text!r}") from None


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; raises :class:`ConfigError` with the line number."""
    values = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{path}:{lineno}"
        if "=" not in line:
            raise ConfigError(f"{where}: expected 'key = value', got {raw.strip()!r}")
        key, text = (s.strip() for s in line.split("=", 1))
        key = _normalize_key(key)
        if key not in SCHEMA:
            raise ConfigError(f"{where}: unknown key {key!r}; known keys: {', '.join(SCHEMA)}")
        values[key] = _convert(key, text, where)
    return values


def _validate(cfg: ScenarioConfig) -> None:
    for key in REQUIRED[cfg.command]:
        if getattr(cfg, key) is None:
            flag = "--" + key.replace("_", "-")
            raise ConfigError(f"'{cfg.command}' needs {key!r}: pass {flag}=... or set '{key} = ...' in the config file")

    def positive(key):
        v = getattr(cfg, key)
        if v is not None and not v > 0:
            raise ConfigError(f"'{key}' must be positive, got {v}")

    for key in ("Ai0", "f", "r_max", "dt", "t_end", "drift_tolerance", "record_every", "points"):
        positive(key)
    if cfg.n < 4:
        raise ConfigError(f"'n' must be at least 4, got {cfg.n}")
    if cfg.branch not in stationary.BRANCHES:
        raise ConfigError(f"'branch' must be 'ground' or 'excited', got {cfg.branch!r}")
    if cfg.plane not in ("A", "qp"):
        raise ConfigError(f"'plane' must be 'A' or 'qp', got {cfg.plane!r}")
    if cfg.command == "fixed-points" and cfg.a is None and (cfg.a_min is None or cfg.a_max is None):
        raise ConfigError("'fixed-points' needs either 'a' or both 'a_min' and 'a_max'")
    if cfg.a_min is not None and cfg.a_max is not None and cfg.a_min > cfg.a_max:
        raise ConfigError(f"'a_min' ({cfg.a_min}) exceeds 'a_max' ({cfg.a_max})")
    if cfg.command in ("stationary", "stability-modes", "propagate") and cfg.a is not None:
        if cfg.branch == "excited" and cfg.a >= 0:
            raise ConfigError(f"the excited branch exists only for a < 0, got a={cfg.a}")
        if cfg.a < variational.A_CRITICAL:
            raise ConfigError(f"no stationary states below a = {variational.A_CRITICAL:.5f}, got a={cfg.a}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="selfbound", description="Self-bound condensates with attractive 1/r interaction.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    for name in COMMANDS:
        p = sub.add_parser(name)
        if name == "figure":
            p.add_argument("preset_arg", nargs="?", metavar="PRESET", help="fig1 ... fig10, fig4a, fig4b, fig8a, fig8b or all")
        p.add_argument("--config", metavar="FILE")
        for key in SCHEMA:
            flag = "--" + key.replace("_", "-")
            alias = ["--" + key] if "_" in key else []
            p.add_argument(flag, *alias, dest=key, default=None, metavar="VALUE")
    return parser


def parse_config(argv, config_file=None) -> ScenarioConfig:
    """Merge an optional config file with command-line flags (flags win)."""
    args = build_parser().parse_args(argv)
    file_values = {}
    source = config_file or args.config
    if source:
        file_values = read_config_file(source)
    merged = dict(file_values)
    for key in SCHEMA:
        text = getattr(args, key)
        if text is None:
            continue
        value = _convert(key, text, "command line")
        if key in file_values and file_values[key] != value:
            log.warning("'%s' is %r in %s and %r on the command line; using the command line",
                        key, file_values[key], source, value)
        merged[key] = value
    if args.command == "figure" and getattr(args, "preset_arg", None):
        merged["preset"] = args.preset_arg
    known = {f.name for f in fields(ScenarioConfig)}
    cfg = ScenarioConfig(command=args.command, **{k: v for k, v in merged.items() if k in known})
    _validate(cfg)
    return cfg


# -- output helpers --------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if x is None:
        return "nan"
    return format(float(x), ".17g")


def write_table(path: Path, header, rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def _grid(cfg: ScenarioConfig) -> RadialGrid:
    return RadialGrid.from_extent(cfg.n, cfg.r_max)


# -- commands --------------------------------------------------------------

def cmd_variational_evolve(cfg: ScenarioConfig, out: Path) -> int:
    t_end = cfg.t_end or 50.0
    s0 = variational.VariationalState(cfg.Ar0, cfg.Ai0)
    n = int(round(t_end / (cfg.dt or 0.01))) + 1
    orbit = variational.integrate_orbit(s0, cfg.a, t_end, n_samples=n)
    write_table(out / "orbit.csv", ("t", "A_r", "A_i", "gamma_r", "width", "energy"), orbit.rows())
    if orbit.cause == "collapse":
        print(f"collapse at T_c = {orbit.collapse_time:.6f}")
    else:
        print(f"no collapse up to t = {t_end:g}")
    return EXIT_OK


def cmd_fixed_points(cfg: ScenarioConfig, out: Path) -> int:
    if cfg.a is not None:
        a_values = [cfg.a]
    else:
        a_values = np.linspace(cfg.a_min, cfg.a_max, cfg.points)
    rows = []
    for a in a_values:
        fp = variational.fixed_points(float(a))
        if fp is None:
            rows.append((a, None, None, None, None))
        else:
            rows.append((a, fp.A_i_stable, fp.A_i_unstable, fp.eps_stable, fp.eps_unstable))
    write_table(out / "fixed_points.csv", ("a", "Ai_stable", "Ai_unstable", "eps_stable", "eps_unstable"), rows)
    if cfg.a is not None:
        short = ["-" if v is None else f"{v:.8g}" for v in rows[0][1:]]
        print("no fixed points" if rows[0][1] is None else
              f"A_i = {short[0]}, {short[1]}; eps = {short[2]}, {short[3]}")
    return EXIT_OK


def _portrait_rows(portrait):
    for level, segments in zip(portrait.levels, portrait.curves):
        for k, seg in enumerate(segments):
            for x, y in seg:
                yield (level, k, x, y)


def write_portrait(path: Path, portrait) -> Path:
    cols = ("level", "segment", "A_r", "A_i") if portrait.plane == "A" else ("level", "segment", "q", "p")
    return write_table(path, cols, _portrait_rows(portrait))


def cmd_portrait(cfg: ScenarioConfig, out: Path) -> int:
    write_portrait(out / "portrait.csv", variational.phase_portrait(cfg.a, plane=cfg.plane))
    return EXIT_OK


def cmd_stationary(cfg: ScenarioConfig, out: Path) -> int:
    state = stationary.solve_stationary(cfg.a, cfg.branch, _grid(cfg))
    path = out / f"stationary_{cfg.branch}.dat"
    path.parent.mkdir(parents=True, exist_ok=True)
    stationary.write_state(path, state)
    width = radial.rms_width(state.psi)
    print(f"eps = {state.eps:.10g}, width = {width:.8g}, residual = {state.residual:.2e}")
    return EXIT_OK


def write_modes(path: Path, rows) -> Path:
    return write_table(path, ("a", "branch", "re_lambda", "im_lambda"), rows)


def cmd_stability_modes(cfg: ScenarioConfig, out: Path) -> int:
    state = stationary.solve_stationary(cfg.a, cfg.branch, _grid(cfg))
    modes = stability.solve_modes(state)
    write_modes(out / "modes.csv", stability.modes_csv_rows(state, modes))
    for m in modes:
        print(f"{m.kind}: lambda = {m.lam.real:.10g} {m.lam.imag:+.10g}i")
    return EXIT_OK


def _propagate(out: Path, a, branch, f, grid, dt, t_end, snapshots=(), record_every=None,
               drift_tolerance=1e-6):
    state = stationary.solve_stationary(a, branch, grid)
    psi0 = radial.deform(state.psi, f)
    every = record_every or max(1, int(round(0.05 / dt)))
    config = PropagationConfig(dt=dt, t_end=t_end, record_every=every, snapshot_times=tuple(snapshots),
                               drift_tolerance=drift_tolerance)
    series, final = evolve(psi0, a, config)
    out.mkdir(parents=True, exist_ok=True)
    series.write_csv(out / "series.csv")
    for t, values in sorted(series.snapshots.items()):
        radial.write_snapshot(out / f"snapshot_t{t:g}.dat", final.with_values(values),
                              extra_header=f"t={t:.17g} a={a:.17g} f={f:.17g} branch={branch}")
    report = collapse_monitor(series)
    print(f"{report.kind}: {report.detail}; status {series.status}, energy drift {series.energy_drift:.2e}")
    return series, report


def cmd_propagate(cfg: ScenarioConfig, out: Path) -> int:
    dt = cfg.dt or 1e-2
    series, _ = _propagate(out, cfg.a, cfg.branch, cfg.f, _grid(cfg), dt, cfg.t_end, cfg.snapshots,
                           cfg.record_every, cfg.drift_tolerance)
    if series.aborted:
        print(f"stopped at t = {series.t[-1]:g}: wave function reached the {series.status.split('-')[0]} grid border",
              file=sys.stderr)
        return EXIT_GRID
    if not series.converged:
        print(f"energy drift {series.energy_drift:.2e} exceeds {cfg.drift_tolerance:g}; try a smaller dt",
              file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


# -- figure presets ----------------------------------------------------------

def _fig1(out: Path) -> None:
    a_var = np.linspace(variational.A_CRITICAL, -0.02, 80)
    rows = []
    for a in a_var:
        fp = variational.fixed_points(float(a))
        rows.append((a, fp.eps_stable, fp.eps_unstable))
    write_table(out / "variational.csv", ("a", "eps_ground", "eps_excited"), rows)
    a_cr = stationary.numeric_critical_a()
    num = []
    for a in np.linspace(-1.02, -0.1, 12):
        for branch in stationary.BRANCHES:
            s = stationary.solve_stationary(float(a), branch)
            num.append((a, branch, s.eps))
    write_table(out / "numeric.csv", ("a", "branch", "eps"), num)
    write_table(out / "bifurcation.csv", ("a_cr_variational", "a_cr_numeric"), [(variational.A_CRITICAL, a_cr)])


def _fig2(out: Path) -> None:
    rows = []
    for a in np.linspace(variational.A_CRITICAL + 1e-4, -0.2, 60):
        for branch in ("stable", "unstable"):
            lam = variational.analytic_eigenvalues(float(a), branch)[0]
            rows.append((a, "ground" if branch == "stable" else "excited", abs(lam.real), abs(lam.imag)))
    write_modes(out / "variational.csv", rows)
    num = []
    for branch in stationary.BRANCHES:
        for state, modes in stability.follow_branch(branch, (-0.7, -0.85, -1.0, -1.02, -1.025)):
            num.extend(stability.modes_csv_rows(state, modes))
    write_modes(out / "numeric.csv", num)


def _orbit(out: Path, name: str, a: float, Ai0: float, t_end: float) -> variational.OrbitResult:
    orbit = variational.integrate_orbit(variational.VariationalState(0.0, Ai0), a, t_end,
                                        n_samples=int(t_end / 0.01) + 1)
    write_table(out / name, ("t", "A_r", "A_i", "gamma_r", "width", "energy"), orbit.rows())
    return orbit


def _fig3(out: Path) -> None:
    for a in (-1.0, -1.18, -1.3):
        write_portrait(out / f"portrait_a{a:g}.csv", variational.phase_portrait(a))
    _orbit(out, "orbit_a-1_Ai0.3.csv", -1.0, 0.3, 50.0)


def _fig4a(out: Path) -> None:
    o = _orbit(out, "orbit.csv", -1.0, 0.3788, 20.0)
    write_table(out / "collapse.csv", ("a", "Ai0", "T_c"), [(-1.0, 0.3788, o.collapse_time)])


def _fig4b(out: Path) -> None:
    a = -1.3
    Ai0 = 1.0 / (6.0 * a) + math.pi / (8.0 * a * a)
    o = _orbit(out, "orbit.csv", a, Ai0, 20.0)
    write_table(out / "collapse.csv", ("a", "Ai0", "T_c"), [(a, Ai0, o.collapse_time)])


def _fig5(out: Path) -> None:
    _propagate(out, -0.85, "excited", 1.001, RadialGrid.from_extent(1023, 60.0), 1e-4, 8.0,
               snapshots=(0.0, 2.0, 4.0, 5.0))


def _fig6(out: Path) -> None:
    _propagate(out, -1.0, "excited", 1.0, RadialGrid.from_extent(2047, 120.0), 1e-4, 100.0,
               snapshots=(0.0, 25.0, 50.0, 66.0, 90.0))


def _fig7(out: Path) -> None:
    _propagate(out, -0.85, "excited", 0.99, RadialGrid.from_extent(65535, 6400.0), 1e-2, 300.0,
               snapshots=(20.0, 150.0, 300.0), record_every=50)


def _fig8a(out: Path) -> None:
    _propagate(out, -0.85, "ground", 1.01, RadialGrid.from_extent(4095, 240.0), 1e-2, 100.0)


def _fig8b(out: Path) -> None:
    _propagate(out, -0.85, "ground", 1.25, RadialGrid.from_extent(65535, 6400.0), 1e-2, 300.0,
               record_every=50)


def _fig9(out: Path) -> None:
    q = np.linspace(0.3, 8.0, 400)
    rows = []
    for a in (-0.5, -0.8, -1.0, variational.A_CRITICAL, -1.3):
        rows.extend((a, qq, v) for qq, v in zip(q, variational.potential_V(q, a)))
    write_table(out / "potential.csv", ("a", "q", "V"), rows)


def _fig10(out: Path) -> None:
    write_portrait(out / "portrait.csv", variational.phase_portrait(-0.8, plane="qp"))


PRESETS = {
    "fig1": _fig1, "fig2": _fig2, "fig3": _fig3, "fig4a": _fig4a, "fig4b": _fig4b,
    "fig5": _fig5, "fig6": _fig6, "fig7": _fig7, "fig8a": _fig8a, "fig8b": _fig8b,
    "fig9": _fig9, "fig10": _fig10,
}
ALIASES = {"fig4": ("fig4a", "fig4b"), "fig8": ("fig8a", "fig8b"), "all": tuple(PRESETS)}


def cmd_figure(cfg: ScenarioConfig, out: Path) -> int:
    names = ALIASES.get(cfg.preset, (cfg.preset,))
    for name in names:
        if name not in PRESETS:
            choices = ", ".join([*PRESETS, *ALIASES])
            raise UnknownPreset(f"unknown preset {cfg.preset!r}; choose one of {choices}")
    for name in names:
        log.info("running preset %s", name)
        PRESETS[name](out / name)
    return EXIT_OK


DISPATCH = {
    "variational-evolve": cmd_variational_evolve,
    "fixed-points": cmd_fixed_points,
    "portrait": cmd_portrait,
    "stationary": cmd_stationary,
    "stability-modes": cmd_stability_modes,
    "propagate": cmd_propagate,
    "figure": cmd_figure,
}


def run(cfg: ScenarioConfig) -> int:
    out = cfg.output_dir
    try:
        out.mkdir(parents=True, exist_ok=True)
        return DISPATCH[cfg.command](cfg, out)
    except UnknownPreset as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNKNOWN_PRESET
    except (ConfigError, NoStationaryState, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NoConvergence, variational.InconclusiveIntegration) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except GridViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GRID
    except OSError as exc:
        print(f"error: cannot write to {out}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    logging.basicConfig(level=logging.INFO if "-v" in argv or "--verbose" in argv else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = parse_config(argv)
    except UnknownPreset as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNKNOWN_PRESET
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
