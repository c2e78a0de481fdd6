"""Command-line experiments: config parsing, initial-data recipes and artifact emission.

Every subcommand reads a flat ``key = value`` config file (optional), applies
command-line overrides, validates everything before running, and writes
``manifest.json``, one or more self-describing CSV tables and ``summary.json``
into the output directory.
"""

from __future__ import annotations

import dataclasses
import hashlib
from importlib import metadata
import json
import math
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Callable, Sequence

import click
import numpy as np
import scipy

from . import __version__
from .estimates_lab import (
    LEMMAS,
    DecayFit,
    damping_law,
    dispersion_sup,
    frequency_law,
    heat_smoothing_check,
    inequality_report,
    write_summary,
    write_table,
)
from .euler_maxwell_solver import (
    BlowUpError,
    CFLViolation,
    NormalEMState,
    energy_report,
    simulate,
    simulate_mhd,
    write_snapshot,
)
from .littlewood_paley import NormSpec, besov_norm, block_lp_norms, cutoffs_for
from .spectral_core import Field, Grid, PhysParams, biot_savart, leray_project, lp_norm

KINDS = ("simulate", "sweep-c", "strichartz", "dispersion", "heat", "besov-check", "energy-report")
# experiments that build initial data from a recipe
DATA_KINDS = ("simulate", "sweep-c", "besov-check", "energy-report")
RECIPES = ("zero", "single-shell", "random-smooth", "taylor-green")

EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP, EXIT_IO = 0, 2, 3, 4


class ConfigError(ValueError):
    """One or more config fields violate a precondition; ``problems`` names each."""

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("invalid config: " + "; ".join(self.problems))


def _floats(text) -> tuple[float, ...]:
    if isinstance(text, str):
        return tuple(float(v) for v in text.replace(",", " ").split())
    return tuple(float(v) for v in text)


def _ints(text) -> tuple[int, ...]:
    if isinstance(text, str):
        return tuple(int(v) for v in text.replace(",", " ").split())
    return tuple(int(v) for v in text)


@dataclass(frozen=True)
class ExperimentConfig:
    """All knobs of one experiment; list-valued fields accept comma-separated text."""

    kind: str = "simulate"
    # grid and physics
    n_points: int = 64
    length: float = 2 * math.pi
    c: float = 8.0
    sigma: float = 1.0
    nu: float = 0.0
    cutoff_index: int | None = None
    # integrator
    dt: float = 0.01
    t_end: float = 1.0
    every: int = 1
    # initial data
    recipe: str = "random-smooth"
    seed: int | None = None
    amplitude: float = 0.3
    shell: int = 3
    spectral_slope: float = 1.0
    spectral_width: float = 4.0
    prepared: bool = True
    # sweeps and estimates
    c_values: tuple[float, ...] = (8.0, 16.0, 32.0)
    shells: tuple[int, ...] = (3, 4, 5, 6)
    q: float = 4.0
    r: float = math.inf
    alpha: float = 0.0
    law: str = "frequency"
    horizon: float = 1.0
    times: tuple[float, ...] = (10.0, 31.6227766, 100.0, 316.227766, 1000.0)
    alphas: tuple[float, ...] = (0.0, 0.25, 0.5)
    heat_kind: str = "semigroup"
    sizes: tuple[int, ...] = (32, 64, 128)
    seeds: int = 50
    besov_indices: tuple[float, ...] = (0.0, 0.5, 1.0, 1.5)
    lemmas: tuple[str, ...] = tuple(LEMMAS)
    snapshots: bool = False
    # plumbing
    out: str = "results"
    threads: int = 1

    @classmethod
    def from_mapping(cls, values: dict) -> "ExperimentConfig":
        """Build from strings or typed values; unknown keys and unparsable values are reported together."""
        known = {f.name: f for f in fields(cls)}
        problems, kwargs = [], {}
        for key, raw in values.items():
            name = key.replace("-", "_")
            if name not in known:
                problems.append(f"unknown key {key!r}")
                continue
            try:
                kwargs[name] = _coerce(known[name].default, raw, name)
            except (TypeError, ValueError) as exc:
                problems.append(f"{key}: cannot parse {raw!r} ({exc})")
        if problems:
            raise ConfigError(problems)
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        problems = []

        def need(ok, message):
            if not ok:
                problems.append(message)

        need(self.kind in KINDS, f"kind must be one of {KINDS}, got {self.kind!r}")
        need(self.n_points >= 8 and self.n_points % 2 == 0, "n_points must be an even integer >= 8")
        need(self.length > 0, "length must be positive")
        need(self.c > 0, "c must be positive")
        need(self.sigma > 0, "sigma must be positive")
        need(self.nu >= 0, "nu must be non-negative")
        need(self.dt > 0 and self.t_end > 0, "dt and t_end must be positive")
        if self.dt > 0 and self.t_end > 0:
            steps = self.t_end / self.dt
            need(abs(steps - round(steps)) < 1e-9 * max(1.0, steps), "dt must divide t_end")
        need(self.every >= 1, "every must be >= 1")
        need(self.recipe in RECIPES, f"recipe must be one of {RECIPES}, got {self.recipe!r}")
        need(
            self.kind not in DATA_KINDS
            or self.recipe not in ("single-shell", "random-smooth")
            or self.seed is not None,
            f"recipe {self.recipe!r} is randomized and needs a seed",
        )
        need(self.seed is None or 0 <= self.seed < 2**64, "seed must be an unsigned 64-bit integer")
        need(self.amplitude >= 0, "amplitude must be non-negative")
        need(self.spectral_width > 0, "spectral_width must be positive")
        need(len(self.c_values) > 0 and all(v > 0 for v in self.c_values), "c_values must be positive")
        need(len(self.shells) >= 4 or self.kind != "strichartz" or self.law != "frequency",
             "a frequency law needs at least 4 shells")
        need(self.law in ("frequency", "damping"), "law must be 'frequency' or 'damping'")
        need(self.alpha >= 0, "alpha must be non-negative")
        need(self.law != "damping" or self.alpha > 0, "the damping law needs alpha > 0")
        need(self.horizon > 0, "horizon must be positive")
        need(all(t >= 0 for t in self.times), "times must be non-negative")
        need(len(self.times) >= 4 or self.kind != "dispersion", "a decay fit needs at least 4 times")
        need(all(0 <= a <= 0.5 for a in self.alphas), "alphas must lie in [0, 1/2]")
        need(self.heat_kind in ("semigroup", "maximal", "damped"), "heat_kind must be semigroup, maximal or damped")
        need(all(n >= 8 for n in self.sizes), "sizes must be >= 8")
        need(self.seeds >= 1, "seeds must be >= 1")
        need(all(lemma in LEMMAS for lemma in self.lemmas), f"lemmas must be among {sorted(LEMMAS)}")
        need(self.threads >= 1, "threads must be >= 1")
        if self.cutoff_index is not None and self.n_points >= 8:
            top = int(np.log2(self.n_points * math.pi / self.length))
            need(self.cutoff_index <= top, f"cutoff_index must be <= {top} on this grid")
        if self.recipe == "single-shell" and self.n_points >= 8 and self.length > 0:
            cut = cutoffs_for(self.grid)
            need(cut.k_min <= self.shell <= cut.k_max, f"shell must lie in [{cut.k_min}, {cut.k_max}]")
        if problems:
            raise ConfigError(problems)

    @property
    def grid(self) -> Grid:
        return Grid(self.n_points, self.length)

    def params(self, c: float | None = None) -> PhysParams:
        return PhysParams(self.c if c is None else c, self.sigma, self.nu, self.cutoff_index)

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in dataclasses.asdict(self).items()}

    def digest(self) -> str:
        """SHA-256 of the canonical JSON of every field except the output directory."""
        payload = {k: v for k, v in self.to_dict().items() if k != "out"}
        text = json.dumps(payload, sort_keys=True, default=repr)
        return hashlib.sha256(text.encode()).hexdigest()


def _coerce(default, raw, name):
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    if name == "cutoff_index" or name == "seed":
        return None if text.lower() in ("", "none") else int(text)
    if isinstance(default, bool):
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError("expected a boolean")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    if isinstance(default, tuple):
        if default and isinstance(default[0], str):
            return tuple(v for v in text.replace(",", " ").split())
        if default and isinstance(default[0], int):
            return _ints(text)
        return _floats(text)
    return text


def parse_config_text(text: str) -> dict[str, str]:
    """``key = value`` lines; blank lines and ``#`` comments are skipped."""
    values = {}
    for number, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError([f"line {number}: expected 'key = value'"])
        values[key.strip()] = value.strip()
    return values


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> ExperimentConfig:
    values = parse_config_text(Path(path).read_text()) if path else {}
    values.update(overrides or {})
    return ExperimentConfig.from_mapping(values)


# ---------------------------------------------------------------------------
# initial data


def _random_physical(grid: Grid, rng: np.random.Generator, components: int) -> np.ndarray:
    """White-noise spectrum with unit expected power per mode."""
    shape = grid.shape if components == 1 else (components, *grid.shape)
    return np.fft.fft2(rng.standard_normal(shape)) / grid.n_points


def smooth_envelope(grid: Grid, slope: float, width: float) -> np.ndarray:
    """``|xi|^-slope exp(-|xi|^2 / width^2)`` with the mean mode set to zero."""
    mag = grid.xi_mag
    env = np.zeros_like(mag)
    live = mag > 0
    env[live] = mag[live] ** (-slope) * np.exp(-mag[live] ** 2 / width**2)
    return env * grid.nyquist_mask


def make_initial_data(
    recipe: str,
    grid: Grid,
    *,
    seed: int | None = None,
    amplitude: float = 0.3,
    shell: int = 3,
    spectral_slope: float = 1.0,
    spectral_width: float = 4.0,
    cutoff_index: int | None = None,
    prepared: bool = False,
) -> NormalEMState:
    """Zero-mean initial state with divergence-free ``E``.

    ``single-shell`` fills the dyadic block ``shell``; ``random-smooth`` draws
    random phases under the envelope :func:`smooth_envelope`;
    ``taylor-green`` is the classical cellular vortex with matching
    electromagnetic cells.  ``cutoff_index`` applies the low-pass
    ``psi(2^-n xi)``; ``prepared`` starts from ``E = 0``.  The total energy
    ``||u||^2 + ||E||^2 + ||b||^2`` is scaled to ``amplitude^2``.
    """
    if recipe not in RECIPES:
        raise ValueError(f"unknown recipe {recipe!r}; choose from {RECIPES}")
    if recipe in ("single-shell", "random-smooth") and seed is None:
        raise ValueError(f"recipe {recipe!r} needs a seed")
    rng = np.random.default_rng(seed)

    if recipe == "zero":
        spectra = [np.zeros(grid.shape, complex), np.zeros((2, *grid.shape), complex), np.zeros(grid.shape, complex)]
    elif recipe == "single-shell":
        block = cutoffs_for(grid).block(shell)
        spectra = [_random_physical(grid, rng, k) * block for k in (1, 2, 1)]
    elif recipe == "random-smooth":
        env = smooth_envelope(grid, spectral_slope, spectral_width)
        spectra = [_random_physical(grid, rng, k) * env for k in (1, 2, 1)]
    else:
        wave = 2 * np.pi / grid.length
        x1, x2 = grid.coords
        values = [
            2 * wave * np.sin(wave * x1) * np.sin(wave * x2),
            np.stack([np.sin(wave * x2), np.sin(wave * x1)]),
            np.cos(wave * x1) * np.cos(wave * x2),
        ]
        spectra = [Field.from_physical(grid, v).spectral for v in values]

    if cutoff_index is not None:
        low = cutoffs_for(grid).psi(cutoff_index)
        spectra = [s * low for s in spectra]
    fields_ = [Field(grid, s * grid.nyquist_mask) for s in spectra]
    fields_ = [f.with_spectral(np.where(grid.xi_sq > 0, f.spectral, 0)) for f in fields_]
    omega, E, b = fields_
    if prepared:
        E = Field.zeros(grid, 2)
    E = leray_project(E)
    # scale the total energy ||u||^2 + ||E||^2 + ||b||^2 to amplitude^2
    norm = math.sqrt(sum(lp_norm(f, 2) ** 2 for f in (biot_savart(omega), E, b)))
    if norm > 0:
        omega, E, b = (f * (amplitude / norm) for f in (omega, E, b))
    return NormalEMState(omega, E, b)


def initial_state(cfg: ExperimentConfig) -> NormalEMState:
    return make_initial_data(
        cfg.recipe,
        cfg.grid,
        seed=cfg.seed,
        amplitude=cfg.amplitude,
        shell=cfg.shell,
        spectral_slope=cfg.spectral_slope,
        spectral_width=cfg.spectral_width,
        cutoff_index=cfg.cutoff_index,
        prepared=cfg.prepared,
    )


# ---------------------------------------------------------------------------
# experiments


@dataclass
class Outcome:
    """What an experiment produced: tables (name -> rows, columns), a summary and an exit status."""

    tables: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    status: int = EXIT_OK


def _parallel(fn: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _fit_entry(fit: DecayFit, prediction: float, tol: float) -> dict:
    return {**fit.to_dict(), "prediction": prediction, "tolerance": tol, "passed": fit.matches(prediction, tol)}


_ENERGY_COLUMNS = {
    "time": "time",
    "kinetic": "||u||_2^2",
    "electric": "||E||_2^2",
    "magnetic": "||b||_2^2",
    "dissipation": "J(0,t) = ||j||_{L^2((0,t) x torus)}",
    "balance": "E0^2 - energy - (2/sigma) J^2, should be >= 0",
}


def _energy_rows(report) -> list[dict]:
    return [
        {
            "time": float(t),
            "kinetic": float(k),
            "electric": float(e),
            "magnetic": float(m),
            "dissipation": float(j),
            "balance": float(b),
        }
        for t, k, e, m, j, b in zip(
            report.times, report.kinetic, report.electric, report.magnetic, report.dissipation, report.balance
        )
    ]


def _run_simulation(cfg: ExperimentConfig, out: Path, params: PhysParams, state: NormalEMState, tag: str):
    def keep(step, snap):
        if cfg.snapshots:
            write_snapshot(snap, params, out, tag, step)

    return simulate(state, params, cfg.dt, cfg.t_end, every=cfg.every, on_snapshot=keep)


def _blowup(exc: BlowUpError, params: PhysParams, out: Path, tag: str) -> Outcome:
    summary = {"status": "blow-up", "message": str(exc)}
    last = exc.last_good
    if last is not None:
        path = write_snapshot(last, params, out, f"{tag}-last-good", 0)
        summary.update(
            last_good_snapshot=str(path.relative_to(out)),
            last_good_time=last.time,
            last_good_norms={
                "omega_L2": lp_norm(last.omega, 2),
                "E_L2": lp_norm(last.E, 2),
                "b_L2": lp_norm(last.b, 2),
            },
        )
    return Outcome(summary=summary, status=EXIT_BLOWUP)


def run_simulate(cfg: ExperimentConfig, out: Path) -> Outcome:
    params = cfg.params()
    try:
        run = _run_simulation(cfg, out, params, initial_state(cfg), "simulate")
    except BlowUpError as exc:
        return _blowup(exc, params, out, "simulate")
    report = energy_report(run, params)
    summary = {
        "E0": report.E0,
        "min_balance": float(report.balance.min()),
        "J_total": float(report.dissipation[-1]),
        "J_bound": math.sqrt(params.sigma / 2) * report.E0,
        "H": report.H,
    }
    summary["energy_inequality_holds"] = bool(report.balance.min() >= -1e-6 * max(report.E0**2, 1e-300))
    return Outcome({"energy": (_energy_rows(report), _ENERGY_COLUMNS)}, summary)


def run_sweep_c(cfg: ExperimentConfig, out: Path) -> Outcome:
    state = initial_state(cfg)
    mhd = simulate_mhd(state.omega, state.b, cfg.sigma, cfg.dt, cfg.t_end, nu=cfg.nu, every=cfg.every)
    grid = cfg.grid

    def one(c):
        params = cfg.params(c)
        run = simulate(state, params, cfg.dt, cfg.t_end, every=cfg.every)
        gap_sq = [
            lp_norm(s.velocity - biot_savart(w), 2) ** 2 + lp_norm(s.b - bb, 2) ** 2
            for s, w, bb in zip(run, mhd.omega, mhd.b)
        ]
        grad_e = [grid.length**2 * np.sum(grid.xi_sq * np.abs(s.E.spectral) ** 2) for s in run]
        report = energy_report(run, params)
        return {
            "c": c,
            "mhd_gap": float(np.sqrt(np.trapezoid(gap_sq, mhd.times))),
            "cE_L2_H1": float(c * np.sqrt(np.trapezoid(grad_e, mhd.times))),
            "J_total": float(report.dissipation[-1]),
            "min_balance": float(report.balance.min()),
        }

    rows = _parallel(one, list(cfg.c_values), cfg.threads)
    columns = {
        "c": "speed of light",
        "mhd_gap": "||(u^c, b^c) - (u^mhd, b^mhd)||_{L^2_t L^2_x}",
        "cE_L2_H1": "c ||E^c||_{L^2_t H^1}",
        "J_total": "||j||_{L^2_{t,x}} over the run",
        "min_balance": "min over t of the energy balance",
    }
    gaps = [r["mhd_gap"] for r in rows]
    scaled = [r["cE_L2_H1"] for r in rows]
    summary = {
        "gap_strictly_decreasing": bool(np.all(np.diff(gaps) < 0)),
        "cE_successive_ratios": (np.array(scaled[1:]) / np.array(scaled[:-1])).tolist() if len(rows) > 1 else [],
    }
    return Outcome({"sweep_c": (rows, columns)}, summary)


def run_strichartz(cfg: ExperimentConfig, out: Path) -> Outcome:
    if cfg.law == "frequency":
        fit, spec = frequency_law(cfg.shells, grid=cfg.grid, q=cfg.q, r=cfg.r, alpha=cfg.alpha, horizon=cfg.horizon)
        rows = [{"j": int(j), "log2_ratio": float(y)} for j, y in zip(fit.abscissae, fit.ordinates)]
        columns = {
            "j": "dyadic shell",
            "log2_ratio": f"log2 ||Delta_j (du/dt, grad u)||_{{L^{cfg.q}_T L^{cfg.r}}} / ||Delta_j data||_2",
        }
        summary = {"frequency_law": _fit_entry(fit, spec.frequency_exponent, 0.08), "q": cfg.q, "r": cfg.r}
        return Outcome({"strichartz": (rows, columns)}, summary)
    law = damping_law(cfg.alpha, q=cfg.q, r=cfg.r)
    rows = [{"T": float(t), "alpha_T": float(cfg.alpha * t), "ratio": float(v)} for t, v in zip(law.horizons, law.ratios)]
    columns = {
        "T": "time horizon",
        "alpha_T": "damping times horizon",
        "ratio": f"beam-family lower bound of ||Delta_j (du/dt, grad u)||_{{L^{cfg.q}_T L^inf}} / ||Delta_j data||_2",
    }
    summary = {
        "short": _fit_entry(law.short, law.predicted_short, 0.08),
        "long": _fit_entry(law.long, law.predicted_long, 0.08),
        "interior": law.interior,
    }
    return Outcome({"damping": (rows, columns)}, summary)


def run_dispersion(cfg: ExperimentConfig, out: Path) -> Outcome:
    points = [(a, t) for a in cfg.alphas for t in cfg.times]
    sups = _parallel(lambda p: dispersion_sup(p[1], p[0]), points, cfg.threads)
    rows = [{"alpha": a, "t": t, "sup": s, "radius": r} for (a, t), (s, r) in zip(points, sups)]
    columns = {
        "alpha": "damping",
        "t": "time",
        "sup": "sup_x |int e^{i(x.xi + t delta(xi))} psi(|xi|) d xi|",
        "radius": "|x| attaining the sup",
    }
    summary = {}
    for a in cfg.alphas:
        sel = [row for row in rows if row["alpha"] == a and row["t"] > 0]
        fit = DecayFit.fit(np.log([row["t"] for row in sel]), np.log([row["sup"] for row in sel]))
        summary[f"alpha={a}"] = _fit_entry(fit, -0.5, 0.05)
    return Outcome({"dispersion": (rows, columns)}, summary)


def run_heat(cfg: ExperimentConfig, out: Path) -> Outcome:
    report = heat_smoothing_check(
        cfg.heat_kind, alpha=cfg.alpha, horizon=cfg.horizon, sizes=cfg.sizes, seeds=range(cfg.seeds)
    )
    rows = [
        {"N": n, "seed": s, "ratio": float(report.ratios[i, s])}
        for i, n in enumerate(report.sizes)
        for s in range(cfg.seeds)
    ]
    columns = {"N": "grid points per side", "seed": "data seed", "ratio": f"{cfg.heat_kind} LHS / RHS"}
    summary = {**report.to_dict(), "stable_15_percent": report.spread < 0.15}
    return Outcome({"heat": (rows, columns)}, summary)


def run_besov_check(cfg: ExperimentConfig, out: Path) -> Outcome:
    state = initial_state(cfg)
    named = {"omega": state.omega, "E": state.E, "b": state.b}
    rows = []
    for name, f in named.items():
        for k, value in sorted(block_lp_norms(f, 2.0).items()):
            rows.append({"field": name, "k": k, "block_L2": value})
    columns = {"field": "state component", "k": "dyadic block", "block_L2": "||Delta_k f||_2"}
    summary = {
        name: {f"B^{s}_(2,2)": besov_norm(f, NormSpec(s, 2, 2)) for s in cfg.besov_indices} for name, f in named.items()
    }
    for name, f in named.items():
        summary[name]["L2"] = lp_norm(f, 2)
    return Outcome({"besov": (rows, columns)}, summary)


def run_energy_report(cfg: ExperimentConfig, out: Path) -> Outcome:
    params = cfg.params()
    try:
        run = _run_simulation(cfg, out, params, initial_state(cfg), "energy-report")
    except BlowUpError as exc:
        return _blowup(exc, params, out, "energy-report")
    reports = [inequality_report(lemma, run, params) for lemma in cfg.lemmas]
    rows = [{"lemma": r.lemma, "lhs": r.lhs, "rhs": r.rhs, "ratio": r.ratio} for r in reports]
    columns = {"lemma": "estimate", "lhs": "left side", "rhs": "right side (constant 1)", "ratio": "lhs / rhs"}
    summary = {r.lemma: r.to_dict() for r in reports}
    return Outcome({"inequalities": (rows, columns)}, summary)


RUNNERS = {
    "simulate": run_simulate,
    "sweep-c": run_sweep_c,
    "strichartz": run_strichartz,
    "dispersion": run_dispersion,
    "heat": run_heat,
    "besov-check": run_besov_check,
    "energy-report": run_energy_report,
}


def _versions() -> dict:
    return {
        "euler_maxwell": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "click": metadata.version("click"),
    }


def run(cfg: ExperimentConfig) -> int:
    """Run one experiment and write its artifacts; returns the process exit status."""
    cfg.validate()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    outcome = RUNNERS[cfg.kind](cfg, out)
    files = {}
    for name, (rows, columns) in outcome.tables.items():
        path = write_table(out / f"{name}.csv", rows, columns=columns)
        files[path.name] = hashlib.sha256(path.read_bytes()).hexdigest()
    write_summary(out / "summary.json", {"kind": cfg.kind, "status": outcome.status, **outcome.summary})
    manifest = {
        "kind": cfg.kind,
        "config": cfg.to_dict(),
        "config_sha256": cfg.digest(),
        "versions": _versions(),
        "wall_time_s": time.perf_counter() - start,
        "exit_status": outcome.status,
        "outputs": files,
    }
    write_summary(out / "manifest.json", manifest)
    return outcome.status


# ---------------------------------------------------------------------------
# command line


def _common(fn):
    fn = click.option("--set", "assignments", multiple=True, metavar="KEY=VALUE", help="Override one config key.")(fn)
    fn = click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None, help="Seed for randomized recipes.")(fn)
    fn = click.option("--threads", type=click.IntRange(min=1), default=None, help="Parallel parameter points.")(fn)
    fn = click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")(fn)
    fn = click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
                      help="Config file of key = value lines.")(fn)
    return fn


def _execute(kind, config_path, out, threads, seed, assignments) -> None:
    overrides: dict = {"kind": kind}
    for item in assignments:
        key, sep, value = item.partition("=")
        if not sep:
            raise click.UsageError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value.strip()
    for key, value in (("out", out), ("threads", threads), ("seed", seed)):
        if value is not None:
            overrides[key] = value
    try:
        cfg = load_config(config_path, overrides)
    except ConfigError as exc:
        for problem in exc.problems:
            click.echo(f"config error: {problem}", err=True)
        sys.exit(EXIT_CONFIG)
    try:
        status = run(cfg)
    except CFLViolation as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except OSError as exc:
        click.echo(f"i/o error: {exc}", err=True)
        sys.exit(EXIT_IO)
    if status == EXIT_BLOWUP:
        click.echo(f"numerical blow-up; last good snapshot kept under {cfg.out}", err=True)
    else:
        click.echo(f"wrote {cfg.out}")
    sys.exit(status)


@click.group()
@click.version_option(__version__, prog_name="euler-maxwell")
def main():
    """Pseudospectral Euler-Maxwell runs and estimate measurements."""


def _register(kind: str, help_text: str):
    @_common
    def command(config_path, out, threads, seed, assignments):
        _execute(kind, config_path, out, threads, seed, assignments)

    command.__doc__ = help_text
    main.command(name=kind, help=help_text)(command)


for _kind, _help in (
    ("simulate", "Run the nonlinear solver and write the energy history."),
    ("sweep-c", "Sweep the speed of light and compare with the limit system."),
    ("strichartz", "Measure the wave Strichartz frequency or damping law."),
    ("dispersion", "Measure the decay of the dispersive oscillatory integral."),
    ("heat", "Measure parabolic smoothing ratios on random data."),
    ("besov-check", "Tabulate dyadic block norms of the initial data."),
    ("energy-report", "Run the solver and report both sides of each energy estimate."),
):
    _register(_kind, _help)


if __name__ == "__main__":
    main()
