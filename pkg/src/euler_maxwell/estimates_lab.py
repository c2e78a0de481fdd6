"""Numerical measurement of damped dispersive and parabolic estimates.

Estimates are checked through exponents and ratio stability, never through
absolute constants.  Every decay law is returned as a :class:`DecayFit` that
carries its residual.

Two routes measure Strichartz norms of the damped wave:

* the grid route evolves band-limited data on the torus with the exact
  per-mode propagators and takes space-time norms of a dyadic block;
* the beam route works on the whole plane, where a family of one-directional
  Gaussian beams at unit frequency is evolved with the exact wave symbols and
  integrated by quadrature.  Exact parabolic scaling moves the result to any
  dyadic shell, which reaches the long-time regimes a periodic box cannot.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Literal, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad
from scipy.special import j0

from .euler_maxwell_solver import _grad_l2_sq, _gradient, energy_report, vorticity_lemma_check
from .littlewood_paley import (
    NormSpec,
    besov_norm,
    chemin_lerner_norm,
    cutoffs_for,
    phi_profile,
    smooth_step,
    time_series_norms,
)
from .maxwell_propagator import (
    eigenvalues,
    propagate_damped_maxwell,
    scalar_propagator,
    wave_multipliers,
)
from .spectral_core import Field, Grid, PhysParams, band_limited_random, lp_norm, pointwise_magnitude

__all__ = [
    "DecayFit",
    "StrichartzSpec",
    "StrichartzMeasurement",
    "measure_strichartz",
    "shell_data",
    "frequency_law",
    "beam_widths",
    "beam_ratio_curve",
    "DampingCrossover",
    "damping_law",
    "damping_lemma_check",
    "HeatReport",
    "heat_smoothing_check",
    "DispersionProfile",
    "DispersionValue",
    "QuadratureError",
    "dispersion_integral",
    "dispersion_radial",
    "dispersion_sup",
    "dispersion_decay",
    "InequalityReport",
    "LEMMAS",
    "inequality_report",
    "write_table",
    "write_summary",
]


# ---------------------------------------------------------------------------
# fits


@dataclass(frozen=True)
class DecayFit:
    """Least-squares line through log-scale samples.

    ``residual`` is the largest absolute deviation of a sample from the line,
    in the same log units as ``ordinates``.
    """

    abscissae: np.ndarray
    ordinates: np.ndarray
    slope: float
    intercept: float
    residual: float

    @classmethod
    def fit(cls, abscissae, ordinates) -> "DecayFit":
        x = np.asarray(abscissae, dtype=float)
        y = np.asarray(ordinates, dtype=float)
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError("abscissae and ordinates must be matching 1D arrays")
        if x.size < 4:
            raise ValueError(f"a decay fit needs at least 4 points, got {x.size}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("non-finite sample in decay fit")
        slope, intercept = np.polyfit(x, y, 1)
        residual = float(np.max(np.abs(y - (slope * x + intercept))))
        return cls(x, y, float(slope), float(intercept), residual)

    def matches(self, prediction: float, tol: float, residual_tol: float = 0.1) -> bool:
        return abs(self.slope - prediction) <= tol and self.residual < residual_tol

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "residual": self.residual,
            "abscissae": self.abscissae.tolist(),
            "ordinates": self.ordinates.tolist(),
        }


# ---------------------------------------------------------------------------
# Strichartz norms

Kind = Literal["wave", "halfwave", "maxwell"]


def _inv(value: float) -> float:
    return 0.0 if np.isinf(value) else 1.0 / value


@dataclass(frozen=True)
class StrichartzSpec:
    """Exponents and parameters of one damped Strichartz measurement in two dimensions.

    ``(q, r)`` is the measured pair; ``(q_dual, r_dual)`` is the optional
    forcing pair.  Both must be wave-admissible, and ``1/q + 1/q_dual <= 1``.
    """

    kind: Kind
    q: float
    r: float
    j: int
    alpha: float = 0.0
    horizon: float = 1.0
    q_dual: float | None = None
    r_dual: float | None = None
    dim: int = 2

    def __post_init__(self):
        if self.kind not in ("wave", "halfwave", "maxwell"):
            raise ValueError(f"unknown equation kind {self.kind!r}")
        if self.alpha < 0 or not self.horizon > 0:
            raise ValueError("need alpha >= 0 and a positive horizon")
        self._check_pair(self.q, self.r)
        if (self.q_dual is None) != (self.r_dual is None):
            raise ValueError("give both q_dual and r_dual or neither")
        if self.q_dual is not None:
            self._check_pair(self.q_dual, self.r_dual)
            if _inv(self.q) + _inv(self.q_dual) > 1 + 1e-12:
                raise ValueError("inadmissible: 1/q + 1/q_dual exceeds 1")

    def _check_pair(self, q: float, r: float):
        d = self.dim
        if not (1 <= q <= np.inf and 2 <= r <= np.inf):
            raise ValueError(f"need q in [1, inf] and r in [2, inf], got ({q}, {r})")
        if 2 * _inv(q) + (d - 1) * _inv(r) < (d - 1) / 2 - 1e-12:
            raise ValueError(f"inadmissible pair ({q}, {r}): 2/q + (d-1)/r < (d-1)/2")
        if 1 + (d - 1) * _inv(r) < (d - 1) / 2 - 1e-12 or (np.isinf(r) and d == 3):
            raise ValueError(f"inadmissible pair ({q}, {r}) in dimension {d}")

    @property
    def frequency_exponent(self) -> float:
        """Predicted growth rate in ``j`` (base 2) of the high-frequency ratio."""
        return (self.dim + 1) / 2 * (0.5 - _inv(self.r))

    @property
    def time_exponent(self) -> float:
        """Predicted exponent of ``T/(1 + alpha T)`` for the homogeneous term."""
        return _inv(self.q) + (self.dim - 1) / 2 * (_inv(self.r) - 0.5)


@dataclass(frozen=True)
class StrichartzMeasurement:
    spec: StrichartzSpec
    lhs: float
    data_norm: float
    times: np.ndarray
    spatial_norms: np.ndarray

    @property
    def ratio(self) -> float:
        return self.lhs / self.data_norm if self.data_norm > 0 else 0.0


def _upsampled(spectral: np.ndarray, factor: int) -> np.ndarray:
    """Physical values on a grid ``factor`` times finer, by zero padding."""
    n = spectral.shape[-1]
    if factor == 1:
        return np.fft.ifft2(spectral * n * n).real
    m = n * factor
    padded = np.zeros(spectral.shape[:-2] + (m, m), dtype=complex)
    half = n // 2
    idx = np.r_[0:half, m - half : m]
    padded[..., idx[:, None], idx[None, :]] = spectral
    return np.fft.ifft2(padded * m * m).real


def _space_norm(spectral: np.ndarray, grid: Grid, r: float, oversample: int) -> float:
    vals = _upsampled(spectral, oversample)
    mag = np.sqrt(np.sum(vals**2, axis=0))
    if np.isinf(r):
        return float(mag.max())
    cell = (grid.dx / oversample) ** 2
    return float((np.sum(mag**r) * cell) ** (1 / r))


def _time_norm(values: np.ndarray, times: np.ndarray, q: float) -> float:
    if np.isinf(q):
        return float(values.max())
    return float(np.trapezoid(values**q, times) ** (1 / q))


def measure_strichartz(
    spec: StrichartzSpec,
    grid: Grid,
    data,
    *,
    oversample: int = 1,
    samples_per_period: int = 16,
) -> StrichartzMeasurement:
    """``||Delta_j state||_{L^q_T L^r} / ||Delta_j data||_2`` on the torus.

    For the wave ``data = (f, g)`` and the measured state is
    ``(du/dt, grad u)``; for the half-wave ``data`` is one scalar field; for
    Maxwell it is the three-component field ``(E1, E2, b)``.  Time samples
    resolve the fastest carrier in the shell ``samples_per_period`` times.
    """
    block = cutoffs_for(grid).block(spec.j)
    top = float(grid.xi_mag[block > 0].max(initial=1.0))
    steps = max(4, math.ceil(samples_per_period * spec.horizon * top / (2 * np.pi)))
    dt = spec.horizon / steps
    xi1, xi2 = grid.xi

    if spec.kind == "wave":
        f, g = data
        traj = scalar_propagator(
            "wave", spec.alpha, f.spectral, g.spectral, xi_mag=grid.xi_mag, t_end=spec.horizon, dt=dt
        )
        states = [np.stack([v * block, 1j * xi1 * u * block, 1j * xi2 * u * block]) for u, v in traj.states]
        start = np.stack([g.spectral, 1j * xi1 * f.spectral, 1j * xi2 * f.spectral]) * block
    elif spec.kind == "halfwave":
        traj = scalar_propagator("halfwave", spec.alpha, data.spectral, xi_mag=grid.xi_mag, t_end=spec.horizon, dt=dt)
        states = [(u * block)[None] for u in traj.states]
        start = (data.spectral * block)[None]
    else:
        traj = propagate_damped_maxwell(grid, data.spectral, spec.horizon, dt, c=1.0, sigma=spec.alpha)
        states = [s * block for s in traj.states]
        start = data.spectral * block

    norms = np.array([_space_norm(s, grid, spec.r, oversample) for s in states])
    lhs = _time_norm(norms, np.asarray(traj.times), spec.q)
    data_norm = float(grid.length * np.sqrt(np.sum(np.abs(start) ** 2)))
    return StrichartzMeasurement(spec, lhs, data_norm, np.asarray(traj.times), norms)


def shell_data(grid: Grid, j: int) -> Field:
    """A point mass at the origin filtered to the dyadic shell ``j``."""
    coeffs = cutoffs_for(grid).block(j) * grid.nyquist_mask / grid.length**2
    return Field(grid, coeffs.astype(complex))


def frequency_law(
    shells: Sequence[int],
    *,
    grid: Grid,
    q: float = 4.0,
    r: float = np.inf,
    alpha: float = 0.0,
    horizon: float = 1.0,
    oversample: int = 1,
) -> tuple[DecayFit, StrichartzSpec]:
    """Fit ``log2`` of the wave ratio against ``j`` for point-concentrated shell data."""
    ratios = []
    spec = None
    for j in shells:
        spec = StrichartzSpec("wave", q, r, j, alpha, horizon)
        g = shell_data(grid, j)
        meas = measure_strichartz(spec, grid, (Field.zeros(grid), g), oversample=oversample)
        ratios.append(meas.ratio)
    return DecayFit.fit(list(shells), np.log2(ratios)), spec


def _gauss_legendre(lo: float, hi: float, panels: int, order: int = 16):
    nodes, weights = leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = (edges[1:] - edges[:-1]) / 2
    mid = (edges[1:] + edges[:-1]) / 2
    return (np.outer(half, nodes) + mid[:, None]).ravel(), np.outer(half, weights).ravel()


def _beam_sup(t: float, alpha: float, width: float, offsets: np.ndarray, r: float) -> float:
    """``sup_x |Delta_0 (du/dt, grad u)(t, x)| / ||Delta_0 (g, grad f)||_2`` for one unit-frequency beam.

    The data ``f_hat = phi(|xi|) exp(-xi2^2 / 2 width^2)``, ``g = lam_- f``
    excite only the forward branch, so the solution is one packet moving along
    ``x1``.  The profile is even in ``xi2``, so the supremum sits on the axis
    ``x2 = 0`` and is searched over ``x1 = t + offsets``.
    """
    if not np.isinf(r):
        raise ValueError("the beam route measures r = inf only")
    k1, w1 = _gauss_legendre(0.7, 1.6, 3)
    reach = min(6 * width, 1.6)
    # transverse phase t (|xi| - xi1) ~ t xi2^2 / (2 xi1): keep about 4 nodes per radian / pi
    spread = t * reach**2 / 1.4
    k2, w2 = _gauss_legendre(-reach, reach, max(2, math.ceil(spread / np.pi)))
    K1, K2 = np.meshgrid(k1, k2, indexing="ij")
    mag = np.hypot(K1, K2)
    prof = phi_profile(mag) * np.exp(-(K2**2) / (2 * width**2))
    _, lam = eigenvalues(mag, alpha)
    lam = np.asarray(lam)
    symbols = wave_multipliers(mag, t, alpha)
    u, v = symbols.solution(mag, prof, lam * prof)
    block = phi_profile(mag)
    weights = np.outer(w1, w2)
    carrier = np.exp(1j * np.outer(t + offsets, k1))
    comps = [v * block, 1j * K1 * u * block, 1j * K2 * u * block]
    vals = np.array([carrier @ np.sum(c * weights, axis=1) for c in comps]) / (2 * np.pi) ** 2
    env = np.sqrt(np.sum(np.abs(vals) ** 2, axis=0))
    data = np.sqrt(np.sum(weights * (np.abs(lam * prof) ** 2 + mag**2 * prof**2))) / (2 * np.pi)
    return float(env.max() / data)


def beam_widths(unit_horizon: float, coherence: float = 16.0, count: int = 48) -> np.ndarray:
    """Log-spaced beam widths, the narrowest staying coherent past ``unit_horizon``."""
    return np.geomspace(math.sqrt(coherence / unit_horizon) / 2, 0.5, count)


def beam_ratio_curve(
    alpha: float,
    horizons: np.ndarray,
    *,
    j: int,
    q: float = 2.0,
    widths: np.ndarray | None = None,
    coherence: float = 16.0,
    samples_per_decade: int = 12,
) -> tuple[np.ndarray, np.ndarray]:
    """Beam-family lower bound for the ``L^q_T L^inf`` wave ratio at shell ``j``.

    Each beam of angular width ``w`` is followed at unit frequency (damping
    ``alpha 2^-j``) up to ``coherence / w^2``, or ``60 / (alpha 2^-j)`` when
    the damping has killed it sooner.  For every horizon ``T`` the ratio is
    the largest over the beams of their ``L^q`` norm on ``[0, 2^j T]``
    truncated at each beam's reach, a lower bound for the operator norm; parabolic scaling multiplies the unit-frequency
    ratio over ``[0, 2^j T]`` by ``2^{j(1 - 1/q)}``.  Returns
    ``(ratios, best_widths)``.
    """
    if np.isinf(q):
        raise ValueError("q must be finite for the time integral")
    horizons = np.asarray(horizons, dtype=float)
    scale = 2.0**j
    unit_alpha = alpha / scale
    unit_t = horizons * scale
    t_cap = unit_t.max()
    if widths is None:
        widths = beam_widths(t_cap, coherence)
    offsets = np.linspace(-8.0, 8.0, 33)
    best = np.zeros(horizons.size)
    best_width = np.full(horizons.size, np.nan)
    for width in widths:
        reach = min(coherence / width**2, t_cap)
        if unit_alpha > 0:
            reach = min(reach, 60 / unit_alpha)
        decades = max(math.log10(reach / 0.1), 1.0)
        ts = np.concatenate([[0.0], np.geomspace(0.1, reach, math.ceil(samples_per_decade * decades) + 1)])
        sup = np.array([_beam_sup(t, unit_alpha, width, offsets, np.inf) for t in ts])
        running = np.concatenate([[0.0], np.cumsum(np.diff(ts) * (sup[1:] ** q + sup[:-1] ** q) / 2)])
        # past its reach a beam still bounds the norm from below by its truncated integral
        value = np.interp(np.minimum(unit_t, reach), ts, running) ** (1 / q)
        better = value > best
        best[better] = value[better]
        best_width[better] = width
    # unit-frequency norm over [0, 2^j T] -> shell j over [0, T]
    return best * scale ** (1 - 1 / q), best_width


@dataclass(frozen=True)
class DampingCrossover:
    """Two regime fits of ``log ratio`` against ``log T`` around ``alpha T = 1``."""

    alpha: float
    horizons: np.ndarray
    ratios: np.ndarray
    short: DecayFit
    long: DecayFit
    predicted_short: float
    best_widths: np.ndarray
    width_range: tuple[float, float]
    predicted_long: float = 0.0

    @property
    def interior(self) -> bool:
        """True when no horizon is maximised by the narrowest or widest beam of the family."""
        lo, hi = self.width_range
        return bool(np.all((self.best_widths > lo) & (self.best_widths < hi)))

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "interior": self.interior,
            "predicted_short": self.predicted_short,
            "predicted_long": self.predicted_long,
            "short": self.short.to_dict(),
            "long": self.long.to_dict(),
        }


def damping_law(
    alpha: float,
    *,
    j: int = 20,
    q: float = 2.0,
    r: float = np.inf,
    short_range: tuple[float, float] | None = None,
    long_range: tuple[float, float] = (10.0, 1000.0),
    points: int = 9,
) -> DampingCrossover:
    """Measure the ``T``-slope of the beam-family ratio on both sides of ``alpha T = 1``.

    ``long_range`` is in units of ``alpha T``; ``short_range`` defaults to
    ``100 2^-j <= T <= 0.1/alpha``, which keeps ``2^j T`` in the dispersive
    regime while ``alpha T`` stays small.
    """
    if not alpha > 0:
        raise ValueError("the crossover needs alpha > 0")
    spec = StrichartzSpec("wave", q, r, j, alpha)
    if 2.0**j < alpha:
        raise ValueError("the shell must be high frequency: 2^j >= alpha")
    lo, hi = short_range or (100 * 2.0**-j, 0.1 / alpha)
    if not lo < hi:
        raise ValueError("short range is empty; raise j")
    short_t = np.geomspace(lo, hi, points)
    long_t = np.geomspace(long_range[0] / alpha, long_range[1] / alpha, points)
    horizons = np.concatenate([short_t, long_t])
    widths = beam_widths(horizons.max() * 2.0**j)
    ratios, best = beam_ratio_curve(alpha, horizons, j=j, q=q, widths=widths)
    short = DecayFit.fit(np.log(short_t), np.log(ratios[:points]))
    long = DecayFit.fit(np.log(long_t), np.log(ratios[points:]))
    return DampingCrossover(
        alpha, horizons, ratios, short, long, spec.time_exponent, best, (float(widths[0]), float(widths[-1]))
    )


# ---------------------------------------------------------------------------
# damping lemma


def _lebesgue(values: np.ndarray, step: float, exponent: float, axis=-1) -> np.ndarray:
    if np.isinf(exponent):
        return np.abs(values).max(axis=axis)
    return (np.sum(np.abs(values) ** exponent, axis=axis) * step) ** (1 / exponent)


def damping_lemma_check(
    alphas: Sequence[float],
    horizons: Sequence[float],
    *,
    q: float,
    p: float,
    q0: float = np.inf,
    p0: float = 1.0,
    samples: int = 1500,
    random_inputs: int = 8,
    seed: int = 0,
) -> DecayFit:
    """Fit the model operator ratio against ``T / (1 + alpha T)``.

    The undamped kernel is the constant 1, bounded from ``L^p0`` to ``L^q0``.
    The damped operator ``f -> int_0^T exp(-alpha |t - s|) f(s) ds`` is applied
    on a midpoint grid to a family of inputs: the constant, centred windows
    and two-sided exponentials of every scale from one cell to ``T``, and
    random inputs.  The largest ``||K f||_q / ||f||_p`` at each ``(alpha, T)``
    is fitted in log-log against ``T / (1 + alpha T)``.  The predicted slope
    is ``beta = 1/q - 1/q0 + 1/p0 - 1/p``.
    """
    if not (p0 <= p <= q <= q0 and q >= 1 and p0 > 0):
        raise ValueError("need p0 <= p <= q <= q0 and q >= 1")
    beta = _inv(q) - _inv(q0) + 1 / p0 - _inv(p)
    if beta < 0:
        raise ValueError(f"beta = {beta} is negative")
    rng = np.random.default_rng(seed)
    noise = np.abs(rng.standard_normal((random_inputs, samples)))
    xs, ys = [], []
    for alpha in alphas:
        for horizon in horizons:
            step = horizon / samples
            mid = (np.arange(samples) + 0.5) * step
            offset = np.abs(mid - horizon / 2)
            scales = np.geomspace(step, horizon, 24)
            windows = (offset[None, :] <= scales[:, None] / 2 + step / 2).astype(float)
            tails = np.exp(-offset[None, :] / scales[:, None])
            inputs = np.vstack([np.ones(samples), windows, tails, noise])
            kernel = np.exp(-alpha * np.abs(mid[:, None] - mid[None, :])) * step
            out = inputs @ kernel.T
            ratio = _lebesgue(out, step, q) / _lebesgue(inputs, step, p)
            xs.append(math.log(horizon / (1 + alpha * horizon)))
            ys.append(math.log(ratio.max()))
    return DecayFit.fit(xs, ys)


# ---------------------------------------------------------------------------
# parabolic smoothing

HeatKind = Literal["semigroup", "maximal", "damped"]


@dataclass(frozen=True)
class HeatReport:
    """Ratios ``LHS/RHS`` for each grid size (rows) and seed (columns)."""

    kind: str
    parameters: dict
    sizes: tuple[int, ...]
    ratios: np.ndarray
    predicted_factor: float = 1.0

    @property
    def median(self) -> float:
        return float(np.median(self.ratios))

    @property
    def spread(self) -> float:
        """Largest relative deviation of any ratio from the overall median."""
        return float(np.max(np.abs(self.ratios / self.median - 1)))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "parameters": self.parameters,
            "sizes": list(self.sizes),
            "median": self.median,
            "spread": self.spread,
            "max": float(self.ratios.max()),
            "predicted_factor": self.predicted_factor,
        }


def _block_series(grid: Grid, series: np.ndarray, p: float) -> tuple[list[int], np.ndarray]:
    """Per-block ``L^p`` norms of a spectral time series ``(n_t, [comp,] N, N)``."""
    cut = cutoffs_for(grid)
    ks = list(cut.indices)
    if p == 2:
        power = np.abs(series) ** 2
        if power.ndim == 4:
            power = power.sum(axis=1)
        flat = power.reshape(power.shape[0], -1)
        blocks = (cut.blocks**2).reshape(len(ks), -1)
        return ks, grid.length * np.sqrt(blocks @ flat.T)
    out = np.empty((len(ks), series.shape[0]))
    for i, blk in enumerate(cut.blocks):
        for n, snap in enumerate(series):
            vals = np.fft.ifft2(snap * blk * grid.n_points**2).real
            mag = np.abs(vals) if vals.ndim == 2 else np.sqrt(np.sum(vals**2, axis=0))
            out[i, n] = _lebesgue(mag.ravel(), grid.dx**2, p)
    return ks, out


def _besov_from_blocks(ks, block_norms: np.ndarray, s: float, q: float) -> np.ndarray:
    weights = 2.0 ** (np.asarray(ks) * s)[:, None]
    return _lebesgue(weights * block_norms, 1.0, q, axis=0)


def _heat_semigroup_ratio(w0: Field, s: float, p: float, q: float, alpha: float) -> float:
    """``||e^{-t(alpha - Lap)} w0||_{L^q(0, inf; B^{s + 2/q}_{p,1})} / ||w0||_{B^s_{p,q}}``."""
    grid = w0.grid
    lhs_index = s + 2 / q
    rhs = besov_norm(w0, NormSpec(s, p, q))
    if rhs == 0:
        return 0.0
    rates = alpha + grid.xi_sq
    if p == 2:
        cut = cutoffs_for(grid)
        power = (np.abs(w0.spectral) ** 2).ravel()
        blocks = (cut.blocks**2).reshape(len(cut.blocks), -1) * power
        weights = 2.0 ** (np.array(list(cut.indices)) * lhs_index) * grid.length
        decay = 2 * rates.ravel()

        def integrand(t):
            return float(weights @ np.sqrt(blocks @ np.exp(-decay * t))) ** q

        slowest = rates.ravel()[power > 0].min()
        # split [0, inf) at the fast and slow time scales so quad sees every layer
        fastest = rates.ravel()[power > 0].max()
        edges = [0.0, 1 / fastest, 1 / slowest, 40 / slowest]
        total = sum(quad(integrand, a, b, limit=200, epsabs=0, epsrel=1e-12)[0] for a, b in zip(edges, edges[1:]))
        total += quad(integrand, edges[-1], np.inf, limit=200)[0]
        return total ** (1 / q) / rhs
    slowest = float(rates[w0.spectral != 0].min())
    fastest = float(rates[w0.spectral != 0].max())
    times = np.concatenate([[0.0], np.geomspace(1e-3 / fastest, 40 / slowest, 400)])
    series = np.exp(-np.multiply.outer(times, rates)) * w0.spectral
    ks, norms = _block_series(grid, series, p)
    inst = _besov_from_blocks(ks, norms, lhs_index, 1.0)
    return _time_norm(inst, times, q) / rhs


def _duhamel_kernels(grid: Grid, freqs: np.ndarray, alpha: float, times: np.ndarray) -> np.ndarray:
    """``int_0^t exp(-(t - s) lam) cos(freq s) ds`` per temporal frequency, time and mode.

    ``lam = alpha + |xi|^2``; modes with ``lam = 0`` are left at zero.
    """
    lam = alpha + grid.xi_sq
    out = np.zeros((freqs.size, times.size) + grid.shape)
    live = lam > 0
    rates = lam[live]
    for i, omega in enumerate(freqs):
        cos_t = np.cos(omega * times)[:, None]
        sin_t = np.sin(omega * times)[:, None]
        decay = np.exp(-np.multiply.outer(times, rates))
        out[i][:, live] = (rates * cos_t + omega * sin_t - rates * decay) / (rates**2 + omega**2)
    return out


def heat_smoothing_check(
    kind: HeatKind,
    *,
    s: float = 0.0,
    p: float = 2.0,
    q: float = 2.0,
    m: float = 2.0,
    r: float = 2.0,
    theta: float = 1.0,
    alpha: float = 0.0,
    horizon: float = 1.0,
    sizes: Sequence[int] = (32, 64, 128),
    seeds: Sequence[int] = range(50),
    temporal_modes: int = 4,
    time_samples: int = 201,
) -> HeatReport:
    """Measure parabolic smoothing ratios on random band-limited data.

    * ``semigroup``: ``||e^{-t(alpha - Lap)} w0||_{L^q_t B^{s+2/q}_{p,1}} / ||w0||_{B^s_{p,q}}``
      over ``t in [0, inf)``;
    * ``maximal``: ``||int_0^t e^{-(t-s)(alpha - Lap)} f||_{L^r_T B^{s+2}_{p,q}} / ||f||_{L^r_T B^s_{p,q}}``
      with ``m = r`` and ``theta = 1``;
    * ``damped``: the same Duhamel term in ``L^m_T B^{s + 2 theta}_{p,1}`` against
      ``(T/(1 + alpha T))^{1 + 1/m - 1/r - theta} ||f||_{L^r_T B^s_{p,inf}}``.

    Sources are a few temporal cosines with random band-limited coefficients,
    so their Duhamel integrals are exact mode by mode.
    """
    if not (1 <= p <= np.inf and 1 <= q <= np.inf and alpha >= 0 and horizon > 0):
        raise ValueError("need p, q in [1, inf], alpha >= 0 and a positive horizon")
    factor = 1.0
    if kind == "semigroup":
        if np.isinf(q):
            raise ValueError("the smoothing gain needs q < inf")
    elif kind == "maximal":
        if m != r or theta != 1:
            raise ValueError("maximal regularity needs m = r and theta = 1")
        if not (1 < r < np.inf or r == q in (1, np.inf)):
            raise ValueError("maximal regularity needs r in (1, inf), or r = q in {1, inf}")
    elif kind == "damped":
        gap = 1 + _inv(m) - _inv(r)
        strict = 1 <= r <= m <= np.inf and 0 < theta < gap <= 1
        border = 1 < r < m < np.inf and abs(theta - gap) < 1e-12 and theta < 1
        if not (strict or border):
            raise ValueError("need 1 <= r <= m <= inf and 0 < theta < 1 + 1/m - 1/r <= 1 (or the borderline case)")
        factor = (horizon / (1 + alpha * horizon)) ** (gap - theta)
    else:
        raise ValueError(f"unknown heat estimate {kind!r}")

    ratios = np.zeros((len(sizes), len(seeds)))
    times = np.linspace(0.0, horizon, time_samples)
    freqs = np.pi * np.arange(temporal_modes) / horizon
    waves = np.cos(np.outer(freqs, times))
    for a, n in enumerate(sizes):
        grid = Grid(n)
        kernels = None if kind == "semigroup" else _duhamel_kernels(grid, freqs, alpha, times)
        for b, seed in enumerate(seeds):
            rng = np.random.default_rng(seed)
            if kind == "semigroup":
                ratios[a, b] = _heat_semigroup_ratio(band_limited_random(grid, rng), s, p, q, alpha)
                continue
            amps = np.array([band_limited_random(grid, rng).spectral for _ in freqs])
            src = np.einsum("mt,mxy->txy", waves, amps)
            sol = np.einsum("mtxy,mxy->txy", kernels, amps)
            ks, src_blocks = _block_series(grid, src, p)
            _, sol_blocks = _block_series(grid, sol, p)
            if kind == "maximal":
                lhs = _time_norm(_besov_from_blocks(ks, sol_blocks, s + 2, q), times, r)
                rhs = _time_norm(_besov_from_blocks(ks, src_blocks, s, q), times, r)
            else:
                lhs = _time_norm(_besov_from_blocks(ks, sol_blocks, s + 2 * theta, 1.0), times, m)
                rhs = factor * _time_norm(_besov_from_blocks(ks, src_blocks, s, np.inf), times, r)
            ratios[a, b] = lhs / rhs
    params = {"s": s, "p": p, "q": q, "m": m, "r": r, "theta": theta, "alpha": alpha, "horizon": horizon}
    return HeatReport(kind, params, tuple(sizes), ratios, factor)


# ---------------------------------------------------------------------------
# oscillatory integrals


class QuadratureError(RuntimeError):
    """Two refinement levels of an oscillatory quadrature disagree beyond tolerance."""


@dataclass(frozen=True)
class DispersionProfile:
    """Radial cutoff equal to 1 on ``[plateau_lo, plateau_hi]`` and supported in ``(inner, outer)``."""

    inner: float = 0.25
    plateau_lo: float = 0.5
    plateau_hi: float = 2.0
    outer: float = 4.0

    def __post_init__(self):
        if not 0 < self.inner < self.plateau_lo <= self.plateau_hi < self.outer:
            raise ValueError("need 0 < inner < plateau_lo <= plateau_hi < outer")

    def __call__(self, radius):
        rise = 1 - smooth_step(radius, self.inner, self.plateau_lo)
        return rise * smooth_step(radius, self.plateau_hi, self.outer)


@dataclass(frozen=True)
class DispersionValue:
    value: complex
    error: float
    panels: int


def _dispersion_phase(radius, alpha):
    return np.sqrt(np.maximum(radius**2 - alpha**2 / 4, 0.0))


def _check_dispersion(t, alpha, profile, sign):
    if t < 0:
        raise ValueError("t must be non-negative")
    if not 0 <= alpha <= 0.5:
        raise ValueError("alpha must lie in [0, 1/2]")
    if alpha / 2 > profile.inner:
        raise ValueError("the profile must vanish where |xi| < alpha/2")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")


# the oscillation count alone under-resolves the profile's steps when t + |x| is small
_MIN_PANELS = 64


def _panels(t: float, reach: float, outer: float) -> int:
    return max(_MIN_PANELS, math.ceil(4 * (1 + (t + reach) * outer / (2 * np.pi))))


def _dispersion_2d(t, x, alpha, profile, sign, panels, order, chunk=128):
    nodes, weights = _gauss_legendre(-profile.outer, profile.outer, panels, order)
    total = 0.0 + 0.0j
    for i in range(0, nodes.size, chunk):
        k1 = nodes[i : i + chunk, None]
        mag = np.hypot(k1, nodes[None, :])
        phase = x[0] * k1 + x[1] * nodes[None, :] + sign * t * _dispersion_phase(mag, alpha)
        integrand = np.exp(1j * phase) * profile(mag)
        total += weights[i : i + chunk] @ integrand @ weights
    return total


def dispersion_integral(
    t: float,
    x,
    alpha: float,
    profile: DispersionProfile | None = None,
    *,
    sign: int = 1,
    tol: float = 1e-8,
    order: int = 8,
    max_doublings: int = 4,
) -> DispersionValue:
    """``int exp(i (x.xi + sign t delta(xi))) psi(|xi|) d xi`` with ``delta = sqrt(|xi|^2 - alpha^2/4)``.

    Tensor Gauss-Legendre panels on ``[-R, R]^2``, starting from
    ``ceil(4 (1 + (t + |x|) R / 2 pi))`` panels per axis (at least 64) and doubling until
    two successive levels agree to ``tol * max(1, |value|)``.  The last
    difference is the error estimate.  Raises :class:`QuadratureError` when
    ``max_doublings`` refinements do not converge.
    """
    profile = profile or DispersionProfile()
    _check_dispersion(t, alpha, profile, sign)
    if max_doublings < 1:
        raise ValueError("need at least one refinement for the error estimate")
    x = np.asarray(x, dtype=float)
    panels = _panels(t, float(np.hypot(*x)), profile.outer)
    previous = _dispersion_2d(t, x, alpha, profile, sign, panels, order)
    for _ in range(max_doublings):
        panels *= 2
        value = _dispersion_2d(t, x, alpha, profile, sign, panels, order)
        error = float(abs(value - previous))
        if error <= tol * max(1.0, abs(value)):
            return DispersionValue(complex(value), error, panels)
        previous = value
    raise QuadratureError(f"refinement changed the integral by {error:.3e} at t={t}, x={x.tolist()}")


def dispersion_radial(
    t: float,
    radii,
    alpha: float,
    profile: DispersionProfile | None = None,
    *,
    sign: int = 1,
    order: int = 8,
    chunk: int = 512,
) -> np.ndarray:
    """The same integral for radial ``psi`` as ``2 pi int rho J0(rho |x|) e^{i sign t delta} psi d rho``."""
    profile = profile or DispersionProfile()
    _check_dispersion(t, alpha, profile, sign)
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    panels = _panels(t, float(radii.max(initial=0.0)), profile.outer)
    rho, weights = _gauss_legendre(profile.inner, profile.outer, panels, order)
    base = 2 * np.pi * rho * np.exp(1j * sign * t * _dispersion_phase(rho, alpha)) * profile(rho) * weights
    out = np.empty(radii.size, dtype=complex)
    for i in range(0, radii.size, chunk):
        out[i : i + chunk] = j0(np.outer(radii[i : i + chunk], rho)) @ base
    return out


def _max_group_speed(alpha: float, profile: DispersionProfile, floor: float = 1e-6) -> float:
    rho = np.linspace(profile.inner, profile.outer, 4001)[1:-1]
    live = rho[profile(rho) > floor]
    delta = _dispersion_phase(live, alpha)
    return float(np.max(live / delta))


def dispersion_sup(
    t: float,
    alpha: float,
    profile: DispersionProfile | None = None,
    *,
    sign: int = 1,
    coarse_step: float = 0.25,
    refine: int = 5,
) -> tuple[float, float]:
    """``sup_x |I(t, x)|`` over radii up to the fastest group velocity times ``t``.

    A coarse radial scan locates the largest values, which are then refined
    on a grid ten times finer.  Returns ``(sup, radius)``.
    """
    profile = profile or DispersionProfile()
    reach = _max_group_speed(alpha, profile) * t + 10.0
    radii = np.arange(0.0, reach + coarse_step, coarse_step)
    vals = np.abs(dispersion_radial(t, radii, alpha, profile, sign=sign))
    best, where = float(vals.max()), float(radii[vals.argmax()])
    for i in np.argsort(vals)[-refine:]:
        fine = np.linspace(max(radii[i] - coarse_step, 0.0), radii[i] + coarse_step, 21)
        fv = np.abs(dispersion_radial(t, fine, alpha, profile, sign=sign))
        if fv.max() > best:
            best, where = float(fv.max()), float(fine[fv.argmax()])
    return best, where


def dispersion_decay(
    times: Sequence[float], alpha: float, profile: DispersionProfile | None = None, *, sign: int = 1
) -> DecayFit:
    """Log-log fit of ``sup_x |I(t, .)|`` against ``t``."""
    sups = [dispersion_sup(t, alpha, profile, sign=sign)[0] for t in times]
    return DecayFit.fit(np.log(times), np.log(sups))


# ---------------------------------------------------------------------------
# inequality reports


@dataclass(frozen=True)
class InequalityReport:
    """Both sides of one inequality along a trajectory; constants are not assumed."""

    lemma: str
    lhs: float
    rhs: float
    terms: dict = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        if self.rhs == 0:
            return 0.0 if self.lhs == 0 else np.inf
        return self.lhs / self.rhs

    def to_dict(self) -> dict:
        return {**asdict(self), "ratio": self.ratio}


def _l2_time(values, times) -> float:
    return float(np.sqrt(np.trapezoid(np.asarray(values) ** 2, times)))


def _h1(f: Field) -> float:
    return math.sqrt(_grad_l2_sq(f))


def _sup_grad(f: Field) -> float:
    return float(pointwise_magnitude(_gradient(f)).max())


def _classical(traj, params, times):
    em = [s.electromagnetic for s in traj]
    u_l2 = max(lp_norm(s.velocity, 2) for s in traj)
    grad_b_inf = _l2_time([_sup_grad(s.b) for s in traj], times)
    lhs_terms = {
        "EB_Linf_H1": max(_h1(f) for f in em),
        "cE_L2_H1": params.c * _l2_time([_h1(s.E) for s in traj], times),
    }
    rhs_terms = {"EB0_H1": _h1(em[0]), "u_Linf_L2*gradB_L2_Linf": u_l2 * grad_b_inf}
    return lhs_terms, rhs_terms


def _c_l2(traj, params, times):
    u_l2 = max(lp_norm(s.velocity, 2) for s in traj)
    grad_b_inf = _l2_time([_sup_grad(s.b) for s in traj], times)
    lhs_terms = {
        "B_Linf_L2": max(lp_norm(s.b, 2) for s in traj),
        "gradB_L2_L2": _l2_time([_h1(s.b) for s in traj], times),
    }
    rhs_terms = {
        "B0_L2": lp_norm(traj[0].b, 2),
        "EB0_H1/c": _h1(traj[0].electromagnetic) / params.c,
        "u_Linf_L2*gradB_L2_Linf/c": u_l2 * grad_b_inf / params.c,
    }
    return lhs_terms, rhs_terms


def _technical(traj, params, times, s=1.5, n=2.0):
    if not 1 < s < 2:
        raise ValueError("the technical estimate needs 1 < s < 2")
    split = params.sigma * params.c
    em = time_series_norms([st.electromagnetic for st in traj], times, 2.0)
    e_only = time_series_norms([st.E for st in traj], times, 2.0)
    b_only = time_series_norms([st.b for st in traj], times, 2.0)
    u_size = max(lp_norm(st.velocity, np.inf) for st in traj) + max(
        besov_norm(st.velocity, NormSpec(1.0, 2, np.inf)) for st in traj
    )

    def cl(ts, index, q, which="all"):
        spec = NormSpec(index, 2, q, r=2, split=which, threshold=split if which != "all" else None, flavor="chemin_lerner")
        return chemin_lerner_norm(ts, spec)

    lhs_terms = {
        "EB_CL_inf_Bs": chemin_lerner_norm(em, NormSpec(s, 2, n, r=np.inf, flavor="chemin_lerner")),
        "cE_CL_2_Bs": params.c * cl(e_only, s, n),
    }
    # interpolated low-frequency factor, homogeneous in the parabolic scaling
    low = cl(b_only, 1.0, np.inf, "below") ** (2 - s) * cl(b_only, 2.0, np.inf, "below") ** (s - 1)
    rhs_terms = {
        "EB0_Bs": besov_norm(traj[0].electromagnetic, NormSpec(s, 2, n)),
        "u_size*B_low": u_size * low,
        "u_size*B_CL_2_Bs_high": u_size * cl(b_only, s, n, "above"),
    }
    return lhs_terms, rhs_terms


def _energy(traj, params, times):
    rep = energy_report(traj, params)
    final = rep.kinetic[-1] + rep.electric[-1] + rep.magnetic[-1]
    lhs_terms = {"energy_T": float(final), "ohmic_T": float(2 / params.sigma * rep.dissipation[-1] ** 2)}
    return lhs_terms, {"E0_sq": rep.E0**2}


def _dissipation(traj, params, times):
    rep = energy_report(traj, params)
    return {"J_0_T": float(rep.dissipation[-1])}, {"sqrt(sigma/2)E0": math.sqrt(params.sigma / 2) * rep.E0}


def _vorticity(traj, params, times):
    check = vorticity_lemma_check(traj, params)
    # at t = 0 both sides coincide; the informative snapshot is the tightest later one
    lhs, rhs = check["lhs"][1:], check["rhs"][1:]
    worst = 1 + int(np.argmax(np.divide(lhs, rhs, out=np.zeros_like(lhs), where=rhs > 0)))
    return {"omega_L2_t": float(check["lhs"][worst])}, {"bound_t": float(check["rhs"][worst])}


LEMMAS = {
    "energy-inequality": _energy,
    "dissipation": _dissipation,
    "vorticity": _vorticity,
    "classical-energy": _classical,
    "c-L2-energy": _c_l2,
    "technical-energy": _technical,
}


def inequality_report(lemma_id: str, trajectory, params: PhysParams) -> InequalityReport:
    """Both sides of one estimate along a solver trajectory.

    ``lemma_id`` is one of :data:`LEMMAS`.  Time norms use the trapezoid rule
    on the snapshots, so the snapshot cadence sets the quadrature error.  An
    electric field far from equilibrium relaxes within ``1/(sigma c^2)``;
    resolve that layer with dense snapshots or start from ``E = 0``.
    """
    if lemma_id not in LEMMAS:
        raise ValueError(f"unknown lemma {lemma_id!r}; choose from {sorted(LEMMAS)}")
    traj = list(trajectory)
    if len(traj) < 3:
        raise ValueError("need at least three snapshots for time norms")
    times = np.array([s.time for s in traj])
    if np.any(np.diff(times) <= 0):
        raise ValueError("snapshot times must increase")
    # runs keep their in-step Ohmic integral, so pass them through unchanged
    source = trajectory if lemma_id in ("energy-inequality", "dissipation", "vorticity") else traj
    lhs_terms, rhs_terms = LEMMAS[lemma_id](source, params, times)
    terms = {**{f"lhs:{k}": float(v) for k, v in lhs_terms.items()}, **{f"rhs:{k}": float(v) for k, v in rhs_terms.items()}}
    return InequalityReport(lemma_id, float(sum(lhs_terms.values())), float(sum(rhs_terms.values())), terms)


# ---------------------------------------------------------------------------
# emitters


def write_table(path, rows: Sequence[dict], *, columns: dict[str, str]) -> Path:
    """CSV with a commented header describing every column (units and norm).

    ``columns`` maps each column name to its description, in output order.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        for name, text in columns.items():
            handle.write(f"# {name}: {text}\n")
        writer = csv.DictWriter(handle, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            if set(row) != set(columns):
                raise ValueError(f"row keys {sorted(row)} differ from columns {list(columns)}")
            writer.writerow({k: _cell(row[k]) for k in columns})
    return path


def _cell(value):
    if isinstance(value, float | np.floating):
        return repr(float(value))
    return value


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.floating | np.integer):
        return value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def write_summary(path, summary: dict) -> Path:
    """JSON summary with sorted keys; numpy scalars and arrays become plain values."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_plain(summary), indent=2, sort_keys=True) + "\n")
    return path
