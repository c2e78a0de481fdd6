"""Dyadic frequency blocks, Besov and Chemin-Lerner norms, Bony paraproducts.

The radial cutoffs are built from the bump ``exp(-1/x)``.  A smooth step
``chi`` equals 1 on ``|xi| <= 0.7`` and vanishes for ``|xi| >= 0.8``; the
annulus profile is ``phi(xi) = chi(xi / 2) - chi(xi)``.  Consequently

* ``supp phi`` is ``[0.7, 1.6]`` (inside ``[1/2, 2]``),
* ``phi == 1`` on the plateau ``[0.8, 1.4]``, which contains ``|xi| = 1``,
* the blocks ``phi(2^-k xi)`` telescope to exactly 1 away from the origin.

Frequencies are split against a threshold (``sigma * c`` in the plasma
model): block ``k`` is *below* when ``2^k < threshold`` and *above* otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal, Sequence

import numpy as np

from .spectral_core import (
    Field,
    Grid,
    cross_normal,
    dealiased_product,
    leray_project,
    pointwise_magnitude,
)

__all__ = [
    "STEP_INNER",
    "STEP_OUTER",
    "smooth_step",
    "psi_profile",
    "phi_profile",
    "DyadicCutoffs",
    "cutoffs_for",
    "NormSpec",
    "TimeSeriesNorms",
    "dyadic_block",
    "low_pass",
    "block_lp_norms",
    "besov_norm",
    "time_series_norms",
    "chemin_lerner_norm",
    "besov_time_norm",
    "paraproduct",
    "ProductLawReport",
    "product_law_report",
    "bernstein_constants",
]

STEP_INNER = 0.7
STEP_OUTER = 0.8

Split = Literal["all", "below", "above"]


def _bump(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_step(r, inner: float = STEP_INNER, outer: float = STEP_OUTER):
    """C-infinity radial step: 1 for ``r <= inner``, 0 for ``r >= outer``."""
    s = (np.asarray(r, dtype=float) - inner) / (outer - inner)
    up, down = _bump(1.0 - s), _bump(s)
    return up / (up + down)


def psi_profile(r):
    """Low-pass profile, supported in ``|xi| <= 0.8``."""
    return smooth_step(r)


def phi_profile(r):
    """Annulus profile ``chi(r/2) - chi(r)``."""
    r = np.asarray(r, dtype=float)
    return smooth_step(r / 2) - smooth_step(r)


@dataclass(frozen=True, eq=False)
class DyadicCutoffs:
    """Block multipliers sampled on one grid's lattice.

    ``blocks[i]`` is ``phi(2^-k xi)`` for ``k = k_min + i``.  Every block
    that is nonzero somewhere on the lattice is present, so the blocks sum to
    one at each nonzero lattice point.
    """

    grid: Grid
    k_min: int
    k_max: int
    blocks: np.ndarray

    @property
    def indices(self) -> range:
        return range(self.k_min, self.k_max + 1)

    def block(self, k: int) -> np.ndarray:
        if not self.k_min <= k <= self.k_max:
            raise ValueError(f"block {k} outside representable range [{self.k_min}, {self.k_max}]")
        return self.blocks[k - self.k_min]

    def psi(self, k: int = 0) -> np.ndarray:
        """Low-pass multiplier ``psi(2^-k xi)``."""
        return psi_profile(self.grid.xi_mag / 2.0**k)


@lru_cache(maxsize=32)
def cutoffs_for(grid: Grid) -> DyadicCutoffs:
    mag = grid.xi_mag
    pos = mag[mag > 0]
    # phi(2^-k r) != 0 iff 0.7 * 2^k < r < 1.6 * 2^k
    k_lo = int(np.floor(np.log2(pos.min() / 1.6))) + 1
    k_hi = int(np.ceil(np.log2(pos.max() / STEP_INNER))) - 1
    ks = [k for k in range(k_lo - 1, k_hi + 2) if np.any(phi_profile(mag / 2.0**k) > 0)]
    blocks = np.stack([phi_profile(mag / 2.0**k) for k in ks])
    blocks.setflags(write=False)
    return DyadicCutoffs(grid, ks[0], ks[-1], blocks)


def dyadic_block(f: Field, k: int) -> Field:
    """``Delta_k f``: multiply the spectrum by ``phi(2^-k xi)``."""
    return f.with_spectral(f.spectral * cutoffs_for(f.grid).block(k))


def low_pass(f: Field, k: int) -> Field:
    """``S_k f`` with the smooth low-pass ``psi(2^-k xi)``."""
    return f.with_spectral(f.spectral * cutoffs_for(f.grid).psi(k))


@dataclass(frozen=True)
class NormSpec:
    """Which Besov or Chemin-Lerner norm to take.

    ``threshold`` is the split frequency (``sigma * c``); it is required when
    ``split`` is not ``"all"``.
    """

    s: float
    p: float = 2.0
    q: float = 2.0
    r: float | None = None
    split: Split = "all"
    flavor: Literal["besov", "chemin_lerner"] = "besov"
    threshold: float | None = None

    def __post_init__(self):
        for name in ("p", "q", "r"):
            val = getattr(self, name)
            if val is not None and not val >= 1:
                raise ValueError(f"{name} must be >= 1, got {val}")
        if self.split not in ("all", "below", "above"):
            raise ValueError(f"unknown split {self.split!r}")
        if self.split != "all" and self.threshold is None:
            raise ValueError("a split norm needs a threshold")

    def selects(self, k: int) -> bool:
        if self.split == "all":
            return True
        below = 2.0**k < self.threshold
        return below if self.split == "below" else not below


def _lq(values: np.ndarray, q: float, axis=0):
    if np.isinf(q):
        return values.max(axis=axis, initial=0.0)
    return np.sum(values**q, axis=axis) ** (1.0 / q)


def _spatial_norm(mag: np.ndarray, p: float, cell: float) -> np.ndarray:
    axes = (-2, -1)
    if np.isinf(p):
        return mag.max(axis=axes)
    return (np.sum(mag**p, axis=axes) * cell) ** (1.0 / p)


def block_lp_norms(f: Field, p: float) -> dict[int, float]:
    """``{k: ||Delta_k f||_p}`` over the representable blocks."""
    cut = cutoffs_for(f.grid)
    spec = f.spectral
    comps = spec[None] if f.is_scalar else spec
    n2 = f.grid.n_points**2
    out = {}
    for k, mult in zip(cut.indices, cut.blocks):
        vals = np.fft.ifft2(comps * mult * n2).real
        mag = np.sqrt(np.sum(vals**2, axis=0))
        out[k] = float(_spatial_norm(mag, p, f.grid.dx**2))
    return out


def _weighted(norms: dict[int, float], spec: NormSpec) -> np.ndarray:
    return np.array([2.0 ** (k * spec.s) * v for k, v in norms.items() if spec.selects(k)])


def besov_norm(f: Field, spec: NormSpec) -> float:
    """Homogeneous Besov norm: ``l^q`` over blocks of ``2^{ks} ||Delta_k f||_p``."""
    if spec.flavor != "besov":
        raise ValueError("besov_norm needs a besov NormSpec")
    w = _weighted(block_lp_norms(f, spec.p), spec)
    return float(_lq(w, spec.q)) if w.size else 0.0


@dataclass(frozen=True, eq=False)
class TimeSeriesNorms:
    """Block norms ``||Delta_k f(t)||_p`` sampled at increasing times."""

    times: np.ndarray
    ks: tuple[int, ...]
    block_norms: np.ndarray  # shape (len(ks), len(times))
    p: float = 2.0

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        bn = np.asarray(self.block_norms, dtype=float)
        if t.ndim != 1 or t.size == 0:
            raise ValueError("time series is empty")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if bn.shape != (len(self.ks), t.size):
            raise ValueError(f"block_norms shape {bn.shape} does not match ks/times")
        if np.any(bn < 0):
            raise ValueError("block norms must be non-negative")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "block_norms", bn)


def time_series_norms(fields: Sequence[Field], times, p: float = 2.0) -> TimeSeriesNorms:
    """Collect per-block ``L^p`` norms for a sequence of snapshots."""
    if not fields:
        raise ValueError("time series is empty")
    rows = [block_lp_norms(f, p) for f in fields]
    ks = tuple(rows[0])
    data = np.array([[row[k] for row in rows] for k in ks])
    return TimeSeriesNorms(np.asarray(times, dtype=float), ks, data, p)


def _time_lr(values: np.ndarray, times: np.ndarray, r: float) -> np.ndarray:
    """Trapezoid ``L^r`` norm along the last axis; a single sample gives 0 for finite r."""
    if np.isinf(r):
        return values.max(axis=-1)
    if times.size == 1:
        return np.zeros(values.shape[:-1])
    return np.trapezoid(values**r, times, axis=-1) ** (1.0 / r)


def chemin_lerner_norm(ts: TimeSeriesNorms, spec: NormSpec) -> float:
    """``L^r`` in time per block, then the weighted ``l^q`` sum over blocks."""
    if spec.flavor != "chemin_lerner" or spec.r is None:
        raise ValueError("chemin_lerner_norm needs a chemin_lerner NormSpec with r set")
    if ts.times.size == 0:
        raise ValueError("time series is empty")
    per_block = _time_lr(ts.block_norms, ts.times, spec.r)
    w = np.array([2.0 ** (k * spec.s) * v for k, v in zip(ts.ks, per_block) if spec.selects(k)])
    return float(_lq(w, spec.q)) if w.size else 0.0


def besov_time_norm(ts: TimeSeriesNorms, spec: NormSpec, r: float) -> float:
    """``L^r`` in time of the Besov norm (sum over blocks first)."""
    sel = [i for i, k in enumerate(ts.ks) if spec.selects(k)]
    if not sel:
        return 0.0
    weights = np.array([2.0 ** (ts.ks[i] * spec.s) for i in sel])[:, None]
    inst = _lq(weights * ts.block_norms[sel], spec.q, axis=0)
    return float(_time_lr(inst, ts.times, r))


def paraproduct(f: Field, g: Field) -> tuple[Field, Field, Field]:
    """Bony decomposition ``f g = T_f g + T_g f + R(f, g)``.

    ``T_f g = sum_j S_{j-2} f Delta_j g`` with ``S_{j-2} = sum_{k <= j-3} Delta_k``
    and ``R = sum_{|j-k| <= 2} Delta_j f Delta_k g``.  Every product is the
    dealiased product, so the three pieces reconstruct it to roundoff.
    """
    f._check(g)
    if not (f.is_scalar and g.is_scalar):
        raise ValueError("paraproduct acts on scalar fields")
    cut = cutoffs_for(f.grid)
    fb = f.spectral[None] * cut.blocks
    gb = g.spectral[None] * cut.blocks
    nb = len(cut.blocks)
    # low[j] = sum of blocks with index <= j - 3
    f_low = np.concatenate([np.zeros((3, *f.grid.shape)), np.cumsum(fb, axis=0)[:-3]])[:nb]
    g_low = np.concatenate([np.zeros((3, *f.grid.shape)), np.cumsum(gb, axis=0)[:-3]])[:nb]
    grid = f.grid
    t_fg = Field.zeros(grid)
    t_gf = Field.zeros(grid)
    rem = Field.zeros(grid)
    csum = np.concatenate([np.zeros((1, *grid.shape)), np.cumsum(gb, axis=0)])
    for j in range(nb):
        if np.any(f_low[j]) and np.any(gb[j]):
            t_fg = t_fg + dealiased_product(Field(grid, f_low[j]), Field(grid, gb[j]))
        if np.any(g_low[j]) and np.any(fb[j]):
            t_gf = t_gf + dealiased_product(Field(grid, g_low[j]), Field(grid, fb[j]))
        near = csum[min(j + 3, nb)] - csum[max(j - 2, 0)]
        if np.any(fb[j]) and np.any(near):
            rem = rem + dealiased_product(Field(grid, fb[j]), Field(grid, near))
    return t_fg, t_gf, rem


@dataclass(frozen=True)
class ProductLawReport:
    lhs: float
    rhs: float
    s: float
    t: float

    @property
    def ratio(self) -> float:
        if self.rhs == 0:
            return 0.0 if self.lhs == 0 else np.inf
        return self.lhs / self.rhs


def product_law_report(F: Field, G: Field, s: float, t: float, *,
                       q_out: float = 1.0, q_f: float = 2.0, q_g: float = 2.0) -> ProductLawReport:
    """Both sides of the normal-structure product law in ``L^2``-based Besov norms.

    ``F`` is an in-plane solenoidal field, ``G`` the normal scalar.  The
    left side is ``||P(F x G)||`` in ``B^{s+t-1}_{2,q_out}``, the right side
    ``||F||_{B^s_{2,q_f}} ||G||_{B^t_{2,q_g}}``, valid for ``s < 1``,
    ``t < 2``, ``s + t > 0`` and ``1/q_out <= 1/q_f + 1/q_g``.
    """
    if not (s < 1 and t < 2 and s + t > 0):
        raise ValueError(f"(s, t) = ({s}, {t}) outside s < 1, t < 2, s + t > 0")
    if 1 / q_out > 1 / q_f + 1 / q_g + 1e-15:
        raise ValueError("summability exponents violate 1/q_out <= 1/q_f + 1/q_g")
    if F.components != 2 or not G.is_scalar:
        raise ValueError("F must be in-plane and G a normal scalar")
    lhs = besov_norm(leray_project(cross_normal(F, G)), NormSpec(s + t - 1, 2, q_out))
    rhs = besov_norm(F, NormSpec(s, 2, q_f)) * besov_norm(G, NormSpec(t, 2, q_g))
    return ProductLawReport(lhs, rhs, s, t)


def bernstein_constants(f: Field, ks: Sequence[int] | None = None) -> dict[int, float]:
    """``||Delta_k f||_inf / (2^k ||Delta_k f||_2)`` for each nonzero block."""
    sup = block_lp_norms(f, np.inf)
    l2 = block_lp_norms(f, 2)
    ks = ks if ks is not None else [k for k in sup if l2[k] > 0]
    return {k: sup[k] / (2.0**k * l2[k]) for k in ks}
