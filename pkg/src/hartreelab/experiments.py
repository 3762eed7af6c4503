"""Experiment harness: configuration, grid scans, CSV output, run manifest.

Scans evaluate independent (N, t) grid points, possibly concurrently,
and assemble rows in grid order, so identical configurations produce
byte-identical CSV files.  Floating-point values are serialized with 17
significant digits; every file gets a header row naming its columns.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .asymptotics import find_global_maximizer, limit_marginal, limit_ode_rhs, RateFunction, rate_function_eval
from .dynamics import evolve_general, evolve_zz, marginal_normalized
from .hartree import closed_form_zz
from .metrics import FitResult, hartree_infidelity, linear_entropy, convergence_infidelity, power_law_tail_fit
from .states import DensityMatrix, ModelSpec, QubitState

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "RunManifest",
    "load_config_file",
    "cmd_entropy_scan",
    "cmd_hartree_infidelity_scan",
    "cmd_convergence_scan",
    "cmd_limit_trajectory",
    "write_rate_function_profile",
]


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings shared by all scan commands."""

    p0: float = 0.64
    theta0: float = 0.0
    theta1: float = 0.0
    t_min: float = 0.0
    t_max: float = 1.0
    t_steps: int = 21
    n_min: int = 10
    n_max: int = 100_000
    n_points: int = 40
    n_values: tuple[int, ...] | None = None
    model: str = "zz"
    a1: tuple[complex, ...] | None = None
    a2: tuple[complex, ...] | None = None
    output_dir: Path = Path(".")
    seed: int = 0
    tail_fraction: float = 0.2

    def __post_init__(self):
        if not 0.0 <= self.p0 <= 1.0:
            raise ConfigError(f"p0 must lie in [0, 1], got {self.p0}")
        if self.t_steps < 1:
            raise ConfigError("t_steps must be at least 1")
        if self.t_steps > 1 and not self.t_max > self.t_min:
            raise ConfigError("time grid must be strictly increasing")
        if self.t_min < 0:
            raise ConfigError("t_min must be nonnegative")
        if self.model not in ("zz", "custom"):
            raise ConfigError("model must be 'zz' or 'custom'")
        if self.model == "custom" and (self.a1 is None or self.a2 is None):
            raise ConfigError("custom model requires a1 (4 entries) and a2 (16 entries)")
        for n in self.n_grid():
            if n < 2:
                raise ConfigError(f"every N must be at least 2, got {n}")
        if not 0.0 < self.tail_fraction <= 1.0:
            raise ConfigError("tail_fraction must lie in (0, 1]")
        object.__setattr__(self, "output_dir", Path(self.output_dir))

    def time_grid(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, self.t_steps)

    def n_grid(self) -> tuple[int, ...]:
        """Log-spaced integers, rounded and deduplicated, unless given explicitly."""
        if self.n_values is not None:
            if len(self.n_values) == 0:
                raise ConfigError("n_values must not be empty")
            return tuple(int(n) for n in self.n_values)
        if self.n_min < 2 or self.n_max < self.n_min or self.n_points < 1:
            raise ConfigError("need 2 <= n_min <= n_max and n_points >= 1")
        raw = np.logspace(
            math.log10(self.n_min), math.log10(self.n_max), self.n_points
        )
        return tuple(int(n) for n in np.unique(np.round(raw)).astype(int))

    def initial_state(self) -> QubitState:
        return QubitState.from_probability(self.p0, self.theta0, self.theta1)

    def model_spec(self) -> ModelSpec:
        if self.model == "zz":
            return ModelSpec.zz()
        a1 = np.array(self.a1, dtype=complex).reshape(2, 2)
        a2 = np.array(self.a2, dtype=complex).reshape(4, 4)
        try:
            return ModelSpec(a1, a2)
        except ValueError as exc:
            raise ConfigError(f"invalid custom model: {exc}") from exc

    def echo(self) -> dict:
        out = {}
        for key, value in self.__dict__.items():
            if isinstance(value, Path):
                out[key] = str(value)
            elif isinstance(value, tuple) and value and isinstance(value[0], complex):
                out[key] = [[z.real, z.imag] for z in value]
            elif isinstance(value, tuple):
                out[key] = list(value)
            else:
                out[key] = value
        return out


_BOOL_KEYS: set[str] = set()
_INT_KEYS = {"t_steps", "n_min", "n_max", "n_points", "seed"}
_FLOAT_KEYS = {"p0", "theta0", "theta1", "t_min", "t_max", "tail_fraction"}
_COMPLEX_LIST_KEYS = {"a1", "a2"}


def load_config_file(path: str | Path) -> dict:
    """Parse a plain-text ``key = value`` configuration file.

    Lines starting with '#' are comments.  ``n_values`` takes a
    comma-separated integer list; ``a1``/``a2`` comma-separated complex
    entries in row-major order; ``out`` maps to the output directory.
    """
    values: dict = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key == "out":
            values["output_dir"] = Path(value)
        elif key == "n_values":
            values["n_values"] = tuple(int(s) for s in value.split(","))
        elif key in _COMPLEX_LIST_KEYS:
            values[key] = tuple(complex(s) for s in value.split(","))
        elif key in _INT_KEYS:
            values[key] = int(value)
        elif key in _FLOAT_KEYS:
            values[key] = float(value)
        elif key == "model":
            values["model"] = value
        else:
            raise ConfigError(f"{path}:{lineno}: unknown key '{key}'")
    return values


# ---------------------------------------------------------------------------
# CSV and manifest plumbing
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def _write_csv(path: Path, header: list[str], rows: list[tuple]) -> int:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return len(rows)


@dataclass
class RunManifest:
    """Record of a scan run: config echo, version, timings, files, fits."""

    config: dict
    version: str
    command: str
    wall_clock_s: float = 0.0
    files: dict = field(default_factory=dict)
    fits: list = field(default_factory=list)

    def write(self, path: Path) -> None:
        payload = {
            "command": self.command,
            "version": self.version,
            "wall_clock_s": self.wall_clock_s,
            "config": self.config,
            "files": self.files,
            "fits": self.fits,
        }
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _package_version() -> str:
    from . import __version__

    return __version__


def _grid_map(func, items) -> list:
    """Evaluate independent grid points with a bounded worker pool, in order."""
    workers = min(8, os.cpu_count() or 1)
    if len(items) < 2 or workers < 2:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def _new_manifest(config: ExperimentConfig, command: str) -> RunManifest:
    return RunManifest(config=config.echo(), version=_package_version(), command=command)


def _fit_record(label: dict, fit: FitResult | None, error: str | None = None) -> dict:
    record = dict(label)
    if fit is None:
        record["error"] = error or "fit unavailable"
    else:
        record.update(
            a=fit.amplitude_a,
            b=fit.exponent_b,
            residual=fit.residual,
            n_points_used=fit.n_points_used,
            b_stderr=fit.exponent_stderr,
        )
    return record


def _tail_fit_or_none(ns, values, tail_fraction) -> tuple[FitResult | None, str | None]:
    try:
        return power_law_tail_fit(ns, values, tail_fraction), None
    except ValueError as exc:
        return None, str(exc)


# ---------------------------------------------------------------------------
# scan building blocks
# ---------------------------------------------------------------------------

def _one_particle_marginal(config: ExperimentConfig, n: int, t: float) -> DensityMatrix:
    phi = config.initial_state()
    if config.model == "zz":
        state = evolve_zz(phi, n, t)
    else:
        state = evolve_general(config.model_spec(), phi, n, t)
    return marginal_normalized(state, 1)


def _limit_matrix(phi: QubitState, t: float) -> DensityMatrix:
    """Infinite-N marginal, with fixed points handled as constants."""
    if phi.prob0 in (0.0, 1.0):
        return DensityMatrix(1, phi.projector())
    return limit_marginal(phi, t).rho


def _require_zz(config: ExperimentConfig, command: str) -> None:
    if config.model != "zz":
        raise ConfigError(
            f"{command} compares against closed-form ZZ references and "
            "supports only model = zz"
        )


def cmd_entropy_scan(config: ExperimentConfig) -> RunManifest:
    """Linear entropy over the (N, t) grid, plus tail fits in N.

    Writes ``entropy_vs_t.csv`` (t, N, S_L) and ``entropy_vs_N.csv``
    (N, t, S_L, fit_a, fit_b); fit columns are NaN when a curve's tail is
    not positive (for example at a fixed point, where the entropy
    vanishes identically).
    """
    started = time.perf_counter()
    manifest = _new_manifest(config, "entropy-scan")
    ts = config.time_grid()
    ns = config.n_grid()

    points = [(n, t) for n in ns for t in ts]
    values = _grid_map(lambda p: linear_entropy(_one_particle_marginal(config, *p)), points)
    entropy = {point: value for point, value in zip(points, values)}

    rows_t = [(t, n, entropy[(n, t)]) for n in ns for t in ts]
    rows_n = []
    for t in ts:
        curve = [entropy[(n, t)] for n in ns]
        fit, err = _tail_fit_or_none(ns, curve, config.tail_fraction)
        manifest.fits.append(_fit_record({"file": "entropy_vs_N.csv", "t": t}, fit, err))
        fit_a = fit.amplitude_a if fit else float("nan")
        fit_b = fit.exponent_b if fit else float("nan")
        for n, value in zip(ns, curve):
            rows_n.append((n, t, value, fit_a, fit_b))

    out = config.output_dir
    manifest.files["entropy_vs_t.csv"] = _write_csv(
        out / "entropy_vs_t.csv", ["t", "N", "S_L"], rows_t
    )
    manifest.files["entropy_vs_N.csv"] = _write_csv(
        out / "entropy_vs_N.csv", ["N", "t", "S_L", "fit_a", "fit_b"], rows_n
    )
    manifest.wall_clock_s = time.perf_counter() - started
    return manifest


def cmd_hartree_infidelity_scan(config: ExperimentConfig) -> RunManifest:
    """Infidelity of the exact marginal against the mean-field state.

    Writes ``hartree_infidelity.csv`` (N, t, I, I_limit) where I_limit
    evaluates the infinite-N marginal against the same mean-field state
    (the dashed asymptote of the scaling plots).
    """
    _require_zz(config, "hartree-scan")
    started = time.perf_counter()
    manifest = _new_manifest(config, "hartree-scan")
    ts = config.time_grid()
    ns = config.n_grid()
    phi = config.initial_state()

    def compute(point):
        n, t = point
        rho = _one_particle_marginal(config, n, t)
        phi_t = closed_form_zz(phi, t)
        return hartree_infidelity(rho, phi_t)

    points = [(n, t) for t in ts for n in ns]
    infid = dict(zip(points, _grid_map(compute, points)))

    rows = []
    for t in ts:
        phi_t = closed_form_zz(phi, t)
        i_limit = hartree_infidelity(_limit_matrix(phi, t), phi_t)
        for n in ns:
            rows.append((n, t, infid[(n, t)], i_limit))

    manifest.files["hartree_infidelity.csv"] = _write_csv(
        config.output_dir / "hartree_infidelity.csv",
        ["N", "t", "I", "I_limit"],
        rows,
    )
    manifest.wall_clock_s = time.perf_counter() - started
    return manifest


def cmd_convergence_scan(config: ExperimentConfig) -> RunManifest:
    """Infidelity of the finite-N marginal against its infinite-N limit.

    Writes ``convergence.csv`` (N, t, p0, epsilon, fit_a, fit_b) with a
    tail fit per time slice.
    """
    _require_zz(config, "convergence-scan")
    started = time.perf_counter()
    manifest = _new_manifest(config, "convergence-scan")
    ts = config.time_grid()
    ns = config.n_grid()
    phi = config.initial_state()

    def compute(point):
        n, t = point
        rho = _one_particle_marginal(config, n, t)
        return convergence_infidelity(rho, _limit_matrix(phi, t))

    points = [(n, t) for t in ts for n in ns]
    eps = dict(zip(points, _grid_map(compute, points)))

    rows = []
    for t in ts:
        curve = [eps[(n, t)] for n in ns]
        fit, err = _tail_fit_or_none(ns, curve, config.tail_fraction)
        manifest.fits.append(_fit_record({"file": "convergence.csv", "t": t}, fit, err))
        fit_a = fit.amplitude_a if fit else float("nan")
        fit_b = fit.exponent_b if fit else float("nan")
        for n, value in zip(ns, curve):
            rows.append((n, t, config.p0, value, fit_a, fit_b))

    manifest.files["convergence.csv"] = _write_csv(
        config.output_dir / "convergence.csv",
        ["N", "t", "p0", "epsilon", "fit_a", "fit_b"],
        rows,
    )
    manifest.wall_clock_s = time.perf_counter() - started
    return manifest


def cmd_limit_trajectory(config: ExperimentConfig) -> RunManifest:
    """Contrast the limit dynamics with the mean-field closed form.

    Writes ``limit_trajectory.csv`` (t, x_star, nu0_abs2,
    hartree_phi0_abs2).  The limit wavefunction is integrated with RK4
    and cross-tracked against the directly located maximizer; for any
    generic start the two curves separate from the mean-field one at
    t > 0 and rejoin it only at the attracting pole.
    """
    _require_zz(config, "limit-trajectory")
    phi = config.initial_state()
    if phi.prob0 in (0.0, 1.0):
        raise ConfigError(
            "limit-trajectory requires a generic initial state; a pole start "
            "stays constant for all N and carries no trajectory information"
        )
    if abs(phi.prob0 - phi.prob1) <= 1e-12:
        raise ConfigError(
            "limit-trajectory requires |phi0| != |phi1|: past the critical "
            "time the balanced case has a mixed limit with no single "
            "limit wavefunction"
        )
    started = time.perf_counter()
    manifest = _new_manifest(config, "limit-trajectory")
    ts = config.time_grid()

    rows = []
    nu = np.array([phi.c0, phi.c1], dtype=complex)
    t_now = float(ts[0])
    if t_now > 0:
        nu = _integrate_limit_ode(nu, 0.0, t_now)
    for t in ts:
        nu = _integrate_limit_ode(nu, t_now, float(t))
        t_now = float(t)
        x_star = find_global_maximizer(RateFunction.from_state(phi, t_now)).x_star
        hartree = closed_form_zz(phi, t_now)
        rows.append((t_now, x_star, abs(nu[0]) ** 2, hartree.prob0))

    manifest.files["limit_trajectory.csv"] = _write_csv(
        config.output_dir / "limit_trajectory.csv",
        ["t", "x_star", "nu0_abs2", "hartree_phi0_abs2"],
        rows,
    )
    manifest.wall_clock_s = time.perf_counter() - started
    return manifest


def _integrate_limit_ode(
    nu: np.ndarray, t_from: float, t_to: float, dt: float = 1e-3
) -> np.ndarray:
    """RK4 for the (non-autonomous) limit wavefunction equation."""

    def rhs(t, vec):
        state = QubitState.from_unnormalized(vec[0], vec[1])
        return limit_ode_rhs(state, t)

    t = t_from
    v = nu.copy()
    while t < t_to - 1e-12:
        h = min(dt, t_to - t)
        k1 = rhs(t, v)
        k2 = rhs(t + 0.5 * h, v + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, v + 0.5 * h * k2)
        k4 = rhs(t + h, v + h * k3)
        v = v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
        v = v / np.linalg.norm(v)
    return v


def write_rate_function_profile(config: ExperimentConfig, path: Path, n_x: int = 399) -> int:
    """Emit (p0, t, x, f) profiles of the rate function for each grid time.

    Helper output for plotting the single- versus double-maximum shapes.
    """
    if config.p0 in (0.0, 1.0):
        raise ConfigError("rate-function profiles require p0 strictly inside (0, 1)")
    rows = []
    xs = np.linspace(0.0, 1.0, n_x + 2)[1:-1]
    for t in config.time_grid():
        rf = RateFunction(config.p0, 1.0 - config.p0, float(t))
        for x in xs:
            value, _, _ = rate_function_eval(rf, float(x))
            rows.append((config.p0, t, x, value))
    return _write_csv(Path(path), ["p0", "t", "x", "f"], rows)
