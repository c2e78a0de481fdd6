"""Periodic-grid Fourier infrastructure.

Fields live on the torus ``[0, L)^2`` sampled on an ``N x N`` grid.  Spectral
coefficients use the Fourier-series normalisation

    f(x) = sum_k fhat_k exp(i xi_k . x),    xi_k = 2 pi k / L,

so ``fhat = fft2(f) / N**2`` and Parseval reads ``||f||_2^2 = L^2 sum |fhat|^2``.
The Nyquist row and column are kept at zero for every field built through
:meth:`Field.from_physical`; this keeps all spectral derivatives consistent
with real-valued physical fields.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "Grid",
    "Field",
    "PhysParams",
    "GridMismatchError",
    "leray_project",
    "biot_savart",
    "curl",
    "curl_scalar",
    "gradient",
    "divergence",
    "laplacian",
    "cross_normal",
    "grad_dot",
    "dealiased_product",
    "lp_norm",
    "l2_spectral",
    "stack",
    "pointwise_magnitude",
    "band_limited_random",
]


class GridMismatchError(ValueError):
    """Raised when two fields that must share a grid do not."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[0, length)^2`` with ``n_points`` per axis."""

    n_points: int
    length: float = 2 * np.pi

    def __post_init__(self):
        n = self.n_points
        if n < 8 or n & (n - 1):
            raise ValueError(f"n_points must be a power of two >= 8, got {n}")
        if not self.length > 0:
            raise ValueError(f"length must be positive, got {self.length}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_points, self.n_points)

    @property
    def dx(self) -> float:
        return self.length / self.n_points

    @cached_property
    def k_index(self) -> np.ndarray:
        """Integer wavenumbers in FFT order, ``-N/2 .. N/2-1``."""
        n = self.n_points
        return np.fft.fftfreq(n, d=1.0 / n).astype(int)

    @cached_property
    def xi(self) -> tuple[np.ndarray, np.ndarray]:
        """Physical wavenumber components ``(xi_1, xi_2)`` on the lattice."""
        k = 2 * np.pi * self.k_index / self.length
        xi1, xi2 = np.meshgrid(k, k, indexing="ij")
        return xi1, xi2

    @cached_property
    def xi_sq(self) -> np.ndarray:
        xi1, xi2 = self.xi
        return xi1**2 + xi2**2

    @cached_property
    def xi_mag(self) -> np.ndarray:
        return np.sqrt(self.xi_sq)

    @cached_property
    def inv_xi_sq(self) -> np.ndarray:
        """``1 / |xi|^2`` with the zero mode mapped to 0."""
        out = np.zeros(self.shape)
        nz = self.xi_sq > 0
        out[nz] = 1.0 / self.xi_sq[nz]
        return out

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """True away from the Nyquist row/column."""
        half = self.n_points // 2
        k1, k2 = np.meshgrid(self.k_index, self.k_index, indexing="ij")
        return (np.abs(k1) != half) & (np.abs(k2) != half)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Two-thirds rule: keep ``|k_i| < N/3`` on both axes."""
        k1, k2 = np.meshgrid(self.k_index, self.k_index, indexing="ij")
        cut = self.n_points / 3
        return (np.abs(k1) < cut) & (np.abs(k2) < cut)

    @cached_property
    def dealias_radius(self) -> float:
        """Largest |xi| inscribed in the retained square of the 2/3 rule."""
        return 2 * np.pi * np.floor((self.n_points - 1) / 3) / self.length

    @cached_property
    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.arange(self.n_points) * self.dx
        return tuple(np.meshgrid(x, x, indexing="ij"))

    def rescaled(self, factor: float) -> "Grid":
        """Same resolution on a box ``factor`` times smaller."""
        return Grid(self.n_points, self.length / factor)


@dataclass(frozen=True, eq=False)
class Field:
    """Real field on a :class:`Grid`, stored by its Fourier coefficients.

    ``spectral`` has shape ``(N, N)`` for a scalar or ``(m, N, N)`` for an
    ``m``-component field.  The array is made read-only on construction.
    """

    grid: Grid
    spectral: np.ndarray

    def __post_init__(self):
        arr = np.array(self.spectral, dtype=complex)
        if arr.shape[-2:] != self.grid.shape or arr.ndim not in (2, 3):
            raise ValueError(f"spectral shape {arr.shape} does not fit {self.grid}")
        arr.setflags(write=False)
        object.__setattr__(self, "spectral", arr)

    @classmethod
    def from_physical(cls, grid: Grid, values, *, keep_mean: bool = False) -> "Field":
        vals = np.asarray(values, dtype=float)
        coeffs = np.fft.fft2(vals) / grid.n_points**2
        coeffs *= grid.nyquist_mask
        if not keep_mean:
            coeffs[..., 0, 0] = 0.0
        return cls(grid, coeffs)

    @classmethod
    def zeros(cls, grid: Grid, components: int = 1) -> "Field":
        shape = grid.shape if components == 1 else (components, *grid.shape)
        return cls(grid, np.zeros(shape, dtype=complex))

    @property
    def components(self) -> int:
        return 1 if self.spectral.ndim == 2 else self.spectral.shape[0]

    @property
    def is_scalar(self) -> bool:
        return self.spectral.ndim == 2

    @cached_property
    def physical(self) -> np.ndarray:
        vals = np.fft.ifft2(self.spectral * self.grid.n_points**2).real
        vals.setflags(write=False)
        return vals

    def component(self, i: int) -> "Field":
        if self.is_scalar:
            raise IndexError("scalar field has no components")
        return Field(self.grid, self.spectral[i])

    def with_spectral(self, coeffs) -> "Field":
        return Field(self.grid, coeffs)

    def _check(self, other: "Field"):
        if other.grid != self.grid:
            raise GridMismatchError(f"{self.grid} vs {other.grid}")

    def __add__(self, other: "Field") -> "Field":
        self._check(other)
        return Field(self.grid, self.spectral + other.spectral)

    def __sub__(self, other: "Field") -> "Field":
        self._check(other)
        return Field(self.grid, self.spectral - other.spectral)

    def __mul__(self, scalar: float) -> "Field":
        return Field(self.grid, self.spectral * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.spectral)

    @property
    def mean(self) -> np.ndarray:
        return self.spectral[..., 0, 0]


def stack(*fields: Field) -> Field:
    """Concatenate fields into one multi-component field."""
    grid = fields[0].grid
    parts = []
    for f in fields:
        if f.grid != grid:
            raise GridMismatchError(f"{grid} vs {f.grid}")
        parts.append(f.spectral[None] if f.is_scalar else f.spectral)
    return Field(grid, np.concatenate(parts))


@dataclass(frozen=True)
class PhysParams:
    """Physical constants of the plasma model.

    ``nu`` is an optional viscosity and ``cutoff_index`` an optional spectral
    truncation radius ``2**cutoff_index`` applied to the vorticity forcing.
    """

    c: float
    sigma: float
    nu: float = 0.0
    cutoff_index: int | None = None

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not self.nu >= 0:
            raise ValueError(f"nu must be non-negative, got {self.nu}")


def _vector(v: Field) -> np.ndarray:
    if v.components != 2:
        raise ValueError(f"expected an in-plane vector field, got {v.components} components")
    return v.spectral


def leray_project(v: Field) -> Field:
    """Project an in-plane vector field onto divergence-free fields."""
    vh = _vector(v)
    xi1, xi2 = v.grid.xi
    div = (xi1 * vh[0] + xi2 * vh[1]) * v.grid.inv_xi_sq
    return v.with_spectral(np.stack([vh[0] - xi1 * div, vh[1] - xi2 * div]))


def gradient(f: Field) -> Field:
    xi1, xi2 = f.grid.xi
    return f.with_spectral(np.stack([1j * xi1 * f.spectral, 1j * xi2 * f.spectral]))


def divergence(v: Field) -> Field:
    vh = _vector(v)
    xi1, xi2 = v.grid.xi
    return Field(v.grid, 1j * (xi1 * vh[0] + xi2 * vh[1]))


def curl(v: Field) -> Field:
    """Scalar curl ``d1 v2 - d2 v1`` of an in-plane field."""
    vh = _vector(v)
    xi1, xi2 = v.grid.xi
    return Field(v.grid, 1j * (xi1 * vh[1] - xi2 * vh[0]))


def curl_scalar(b: Field) -> Field:
    """In-plane curl ``(d2 b, -d1 b)`` of a normal component ``(0, 0, b)``."""
    xi1, xi2 = b.grid.xi
    return b.with_spectral(np.stack([1j * xi2 * b.spectral, -1j * xi1 * b.spectral]))


def laplacian(f: Field) -> Field:
    return f.with_spectral(-f.grid.xi_sq * f.spectral)


def biot_savart(omega: Field, *, atol: float = 1e-12) -> Field:
    """Velocity ``u`` with ``div u = 0`` and ``curl u = omega``."""
    if not omega.is_scalar:
        raise ValueError("vorticity must be a scalar field")
    scale = max(np.abs(omega.spectral).max(), 1.0)
    if abs(omega.mean) > atol * scale:
        raise ValueError("vorticity has a nonzero mean; Biot-Savart is undefined on it")
    xi1, xi2 = omega.grid.xi
    w = omega.spectral * omega.grid.inv_xi_sq
    return Field(omega.grid, np.stack([1j * xi2 * w, -1j * xi1 * w]))


def dealiased_product(a: Field, b: Field) -> Field:
    """Pointwise product of two scalar fields under the two-thirds rule.

    Inputs are truncated to the retained band before multiplying and the
    product is truncated again, so no aliased mode survives.
    """
    a._check(b)
    grid = a.grid
    mask = grid.dealias_mask
    n2 = grid.n_points**2
    pa = np.fft.ifft2(a.spectral * mask * n2).real
    pb = np.fft.ifft2(b.spectral * mask * n2).real
    return Field(grid, np.fft.fft2(pa * pb) / n2 * mask)


def cross_normal(u: Field, b: Field) -> Field:
    """In-plane part of ``(u1, u2, 0) x (0, 0, b) = (u2 b, -u1 b, 0)``."""
    _vector(u)
    u1, u2 = u.component(0), u.component(1)
    return stack(dealiased_product(u2, b), -dealiased_product(u1, b))


def grad_dot(u: Field, f: Field) -> Field:
    """Dealiased advection term ``u . grad f``."""
    _vector(u)
    g = gradient(f)
    return dealiased_product(u.component(0), g.component(0)) + dealiased_product(
        u.component(1), g.component(1)
    )


def pointwise_magnitude(f: Field) -> np.ndarray:
    """Euclidean magnitude over components at each grid point."""
    vals = f.physical
    return np.abs(vals) if f.is_scalar else np.sqrt(np.sum(vals**2, axis=0))


def lp_norm(f: Field, p: float) -> float:
    """Rectangle-rule ``L^p`` norm over the torus (max over the grid for p = inf)."""
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    mag = pointwise_magnitude(f)
    if np.isinf(p):
        return float(mag.max())
    cell = f.grid.dx**2
    if p == 2:
        return float(np.sqrt(np.sum(mag**2) * cell))
    return float((np.sum(mag**p) * cell) ** (1.0 / p))


def l2_spectral(f: Field) -> float:
    """``L^2`` norm from Parseval, without a transform."""
    return float(f.grid.length * np.sqrt(np.sum(np.abs(f.spectral) ** 2)))


def band_limited_random(grid: Grid, rng: np.random.Generator, *, components: int = 1,
                        k_max: int | None = None) -> Field:
    """Random real zero-mean field whose modes satisfy ``|k_i| <= k_max``.

    The default band is the two-thirds dealiasing band.
    """
    if k_max is None:
        k_max = int(np.ceil(grid.n_points / 3)) - 1
    shape = grid.shape if components == 1 else (components, *grid.shape)
    vals = rng.standard_normal(shape)
    coeffs = np.fft.fft2(vals) / grid.n_points**2
    k1, k2 = np.meshgrid(grid.k_index, grid.k_index, indexing="ij")
    keep = (np.abs(k1) <= k_max) & (np.abs(k2) <= k_max) & grid.nyquist_mask
    coeffs = coeffs * keep
    coeffs[..., 0, 0] = 0.0
    return Field(grid, coeffs)
