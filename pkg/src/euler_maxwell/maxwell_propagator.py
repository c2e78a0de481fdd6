"""Exact per-mode propagators for damped Maxwell and scalar dispersive flows.

Every linear flow handled here reduces, mode by mode, to a 2x2 block whose
characteristic polynomial is ``lam**2 + damping * lam + freq**2``.  For such a
block ``K`` and ``t > 0`` the shifted matrix ``M = t*K + (damping*t/2) I``
squares to ``y2 * I`` with ``y2 = t**2 * (damping**2/4 - freq**2)``, so any
entire function of ``t*K`` is ``P I + Q M`` with two scalar coefficients.
The module computes those coefficients for ``exp``, ``phi1`` and ``phi2``
(the exponential-integrator weights) with three regimes:

* a Taylor expansion in ``y2`` near the double root,
* the eigenvalue divided difference with real, well separated roots,
* the real/imaginary parts of the function at one complex root otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Callable

import numpy as np
from scipy.special import gammainc, gammaln

from .spectral_core import Grid

__all__ = [
    "DEGENERACY_THRESHOLD",
    "eigenvalues",
    "phi_functions",
    "block_coefficients",
    "WaveMultipliers",
    "wave_multipliers",
    "ModePropagator",
    "maxwell_mode_propagator",
    "build_mode_propagator",
    "Trajectory",
    "propagate_damped_maxwell",
    "scalar_propagator",
]

# switch to the y2 expansion when |lam_+ - lam_-| * t falls below this
DEGENERACY_THRESHOLD = 1e-4
_SERIES_TERMS = 6
_PHI1_SERIES_RADIUS = 1e-3
_PHI2_SERIES_RADIUS = 1.0
_KINDS = ("exp", "phi1", "phi2")


def eigenvalues(xi_mag, alpha):
    """Roots of ``lam**2 + alpha*lam + |xi|**2``, largest real part first.

    In the overdamped range the small root is evaluated as
    ``-|xi|**2 / (alpha/2 + root)`` to keep full relative accuracy.
    """
    xi_mag = np.asarray(xi_mag, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    half = alpha / 2
    disc = half**2 - xi_mag**2
    root = np.sqrt(np.abs(disc))
    real = disc >= 0
    denom = half + root
    with np.errstate(invalid="ignore", divide="ignore"):
        small = np.where(denom > 0, -(xi_mag**2) / np.where(denom > 0, denom, 1.0), 0.0)
    plus = np.where(real, small + 0j, -half + 1j * root)
    minus = np.where(real, -half - root + 0j, -half - 1j * root)
    if plus.ndim == 0:
        return complex(plus), complex(minus)
    return plus, minus


def _series(z, coeff, terms):
    out = np.zeros_like(z)
    for n in reversed(range(terms)):
        out = out * z + coeff(n)
    return out


def phi_functions(z, kind: str):
    """Evaluate ``exp``, ``phi1(z) = (e^z-1)/z`` or ``phi2(z) = (e^z-1-z)/z^2``.

    Works on complex arrays; small arguments use a Taylor series.
    """
    z = np.asarray(z, dtype=complex)
    if kind == "exp":
        return np.exp(z)
    if kind == "phi1":
        radius, shift = _PHI1_SERIES_RADIUS, 1
    elif kind == "phi2":
        radius, shift = _PHI2_SERIES_RADIUS, 2
    else:
        raise ValueError(f"unknown function kind {kind!r}")
    small = np.abs(z) < radius
    safe = np.where(small, 1.0, z)
    with np.errstate(invalid="ignore", over="ignore"):
        closed = np.expm1(safe) / safe if shift == 1 else (np.expm1(safe) - safe) / safe**2
    series = _series(z, lambda n: 1.0 / factorial(n + shift), 24)
    return np.where(small, series, closed)


def _moments(x, m_max: int):
    """``g_m(x) = int_0^1 theta**m exp(theta*x) dtheta`` for real ``x <= 0``, m = 0..m_max."""
    x = np.asarray(x, dtype=float)
    out = np.empty((m_max + 1,) + x.shape)
    near = np.abs(x) <= 1.0
    xs = np.where(near, x, 0.0)
    big = np.where(near, 2.0, -x)
    logx = np.log(big)
    for m in range(m_max + 1):
        series = _series(xs, lambda k, m=m: 1.0 / (factorial(k) * (m + k + 1)), 30)
        far = np.exp(gammaln(m + 1) - (m + 1) * logx + np.log(gammainc(m + 1, big)))
        out[m] = np.where(near, series, far)
    return out


def _derivatives(zbar, kind: str, count: int):
    """Derivatives ``d^n Phi`` at the real centre ``zbar`` for n < count."""
    if kind == "exp":
        return np.broadcast_to(np.exp(zbar), (count,) + np.shape(zbar))
    g = _moments(zbar, count)
    if kind == "phi1":
        return g[:count]
    return g[:count] - g[1 : count + 1]


def block_coefficients(damping, freq, t, kind: str = "exp"):
    """Coefficients ``(P, Q)`` with ``f(t K) = P I + Q (t K + damping*t/2 I)``.

    ``K`` is any 2x2 block with trace ``-damping`` and determinant ``freq**2``
    and ``f`` is one of ``exp``, ``phi1``, ``phi2``.  All inputs broadcast;
    ``damping >= 0`` is required.
    """
    if kind not in _KINDS:
        raise ValueError(f"unknown function kind {kind!r}")
    damping, freq, t = np.broadcast_arrays(
        np.asarray(damping, float), np.asarray(freq, float), np.asarray(t, float)
    )
    if np.any(damping < 0):
        raise ValueError("damping must be non-negative")
    zbar = -damping * t / 2
    y2 = t**2 * (damping**2 / 4 - freq**2)
    gap = 2 * np.sqrt(np.abs(y2))
    near = gap < DEGENERACY_THRESHOLD

    # Taylor expansion in y2 around the double root
    derivs = _derivatives(np.where(near, zbar, 0.0), kind, 2 * _SERIES_TERMS)
    y2n = np.where(near, y2, 0.0)
    p_near = sum(y2n**k / factorial(2 * k) * derivs[2 * k] for k in range(_SERIES_TERMS))
    q_near = sum(y2n**k / factorial(2 * k + 1) * derivs[2 * k + 1] for k in range(_SERIES_TERMS))

    real = (y2 > 0) & ~near
    root = np.where(near, 1.0, np.sqrt(np.abs(y2)))
    # real roots: the upper one via the product rule to avoid cancellation
    z_minus = zbar - root
    z_plus = -((freq * t) ** 2) / (-zbar + root)
    if kind == "exp":
        p_real = np.exp(z_plus) * (1 + np.exp(-2 * root)) / 2
        q_real = np.exp(z_plus) * (-np.expm1(-2 * root)) / (2 * root)
    else:
        f_plus = phi_functions(z_plus, kind).real
        f_minus = phi_functions(z_minus, kind).real
        p_real = (f_plus + f_minus) / 2
        q_real = (f_plus - f_minus) / (2 * root)
    f_complex = phi_functions(zbar + 1j * root, kind)
    p_cplx = f_complex.real
    q_cplx = f_complex.imag / root

    P = np.where(near, p_near, np.where(real, p_real, p_cplx))
    Q = np.where(near, q_near, np.where(real, q_real, q_cplx))
    return P, Q


def _block(damping, freq, t, kind):
    """``f(t L)`` for ``L = [[-damping, i freq], [i freq, 0]]`` as a (2, 2, ...) array."""
    P, Q = block_coefficients(damping, freq, t, kind)
    half = damping * t / 2
    off = 1j * Q * freq * t
    return np.array([[P - Q * half, off], [off, P + Q * half]], dtype=complex)


@dataclass(frozen=True)
class WaveMultipliers:
    """Damped-wave symbols on a set of frequencies at a fixed time.

    ``m2_plus`` and ``m2_minus`` are singular on the degenerate circle
    ``|xi| = alpha/2`` (their combination is not); they are ``inf`` there.
    """

    t: float
    alpha: float
    damping_split: float
    m1: np.ndarray
    m2: np.ndarray
    m2_plus: np.ndarray
    m2_minus: np.ndarray
    m3: np.ndarray

    def solution(self, xi_mag, f, g):
        """Position and velocity of the unforced damped wave from data ``(f, g)``."""
        weight = np.exp(-self.damping_split * self.t * xi_mag**2 / self.alpha) if self.damping_split else 1.0
        u = weight * (self.m1 * g - self.m3 * f)
        v = weight * (self.m2 * g - self.m1 * xi_mag**2 * f)
        return u, v


def wave_multipliers(xi_mag, t: float, alpha: float, damping_split: float = 0.0) -> WaveMultipliers:
    """Evaluate the damped-wave multipliers from the eigenvalues directly.

    ``damping_split`` is the heat-factor parameter ``A`` in
    ``exp(A t |xi|^2 / alpha)``; with the default 0 the symbols are the bare
    divided differences.  Near the double root the divided differences are
    replaced by their Taylor expansion in ``((lam_+ - lam_-)/2)**2``.
    """
    if t < 0 or alpha < 0:
        raise ValueError("t and alpha must be non-negative")
    if damping_split and not (0 < damping_split < 0.5 and alpha > 0):
        raise ValueError("damping_split must lie in (0, 1/2) and needs alpha > 0")
    xi_mag = np.asarray(xi_mag, dtype=float)
    lp, lm = eigenvalues(xi_mag, alpha)
    lp, lm = np.asarray(lp), np.asarray(lm)
    diff = lp - lm
    near = np.abs(diff) * t < DEGENERACY_THRESHOLD
    safe = np.where(near, 1.0, diff)
    ep, em = np.exp(t * lp), np.exp(t * lm)

    m1 = (ep - em) / safe
    m2 = (ep * lp - em * lm) / safe
    m3 = (ep * lm - em * lp) / safe

    # expansion about lam = -alpha/2 with half-gap d: odd central differences
    centre = -alpha / 2
    d2 = np.where(near, (diff / 2) ** 2, 0.0)
    base = np.exp(t * centre)
    s1 = sum(d2**k * t ** (2 * k + 1) / factorial(2 * k + 1) for k in range(_SERIES_TERMS))
    # derivatives of lam*exp(t lam): exp(t lam) (t^n lam + n t^(n-1))
    s2 = sum(
        d2**k / factorial(2 * k + 1) * (t ** (2 * k + 1) * centre + (2 * k + 1) * t ** (2 * k))
        for k in range(_SERIES_TERMS)
    )
    m1 = np.where(near, base * s1, m1)
    m2 = np.where(near, base * s2, m2)
    m3 = np.where(near, -base * s2 - alpha * base * s1, m3)

    heat = np.exp(damping_split * t * xi_mag**2 / alpha) if damping_split else np.ones_like(xi_mag)
    with np.errstate(divide="ignore", invalid="ignore"):
        m2_plus = np.where(near, np.inf, ep / (lm * safe)) * heat
        m2_minus = np.where(near, np.inf, em * lm / safe) * np.exp(damping_split * t * alpha)

    def real_if(a):
        return a.real if np.all(np.abs(a.imag) <= 1e-14 * np.maximum(np.abs(a.real), 1)) else a

    return WaveMultipliers(
        t=t,
        alpha=alpha,
        damping_split=damping_split,
        m1=real_if(m1 * heat),
        m2=real_if(m2 * heat),
        m2_plus=m2_plus,
        m2_minus=m2_minus,
        m3=real_if(m3 * heat),
    )


@dataclass(frozen=True)
class ModePropagator:
    """Per-mode 3x3 matrices acting on ``(E1_hat, E2_hat, b_hat)``.

    ``exp`` is ``exp(dt L)``, ``phi1`` is ``(1/dt) int_0^dt exp((dt-s) L) ds``
    and ``phi2`` the second exponential-integrator weight; each has shape
    ``(3, 3) + mode_shape``.
    """

    dt: float
    c: float
    sigma: float
    exp: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray

    @property
    def gradient_decay(self) -> float:
        return float(np.exp(-self.sigma * self.c**2 * self.dt))

    @staticmethod
    def apply(matrix: np.ndarray, state: np.ndarray) -> np.ndarray:
        return np.einsum("ij...,j...->i...", matrix, state)

    def etd2(self, state, source_now=None, source_next=None):
        """One exponential step with a linearly interpolated source.

        Sources are the right-hand side forcing on ``(E1, E2, b)``.
        """
        out = self.apply(self.exp, state)
        if source_now is not None:
            nxt = source_now if source_next is None else source_next
            out = out + self.dt * (
                self.apply(self.phi1 - self.phi2, source_now) + self.apply(self.phi2, nxt)
            )
        return out


def maxwell_mode_propagator(xi1, xi2, c: float, sigma: float, dt: float) -> ModePropagator:
    """Exact damped-Maxwell propagator on arbitrary wave vectors (``sigma >= 0``)."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not (c > 0 and sigma >= 0):
        raise ValueError("need c > 0 and sigma >= 0")
    xi1, xi2 = np.broadcast_arrays(np.asarray(xi1, float), np.asarray(xi2, float))
    mag = np.hypot(xi1, xi2)
    zero = mag == 0
    safe = np.where(zero, 1.0, mag)
    tau = np.where(zero, 0.0, np.array([xi2, -xi1]) / safe)
    normal = np.array([xi1, xi2]) / safe
    nn = np.where(zero, np.eye(2).reshape((2, 2) + (1,) * mag.ndim), normal[:, None] * normal[None, :])
    tt = tau[:, None] * tau[None, :]
    damping = sigma * c**2
    mats = {}
    for kind in _KINDS:
        blk = _block(damping, c * mag, dt, kind)
        grad = phi_functions(-damping * dt, kind).real
        out = np.empty((3, 3) + mag.shape, dtype=complex)
        out[:2, :2] = blk[0, 0] * tt + grad * nn
        out[:2, 2] = blk[0, 1] * tau
        out[2, :2] = blk[1, 0] * tau
        out[2, 2] = blk[1, 1]
        mats[kind] = out
    return ModePropagator(dt=dt, c=c, sigma=sigma, **mats)


def build_mode_propagator(grid: Grid, params, dt: float) -> ModePropagator:
    """Propagator for every lattice mode of ``grid`` with the constants in ``params``."""
    xi1, xi2 = grid.xi
    return maxwell_mode_propagator(xi1, xi2, params.c, params.sigma, dt)


@dataclass(frozen=True)
class Trajectory:
    """Stored snapshots; ``states[i]`` is the state at ``times[i]``."""

    times: np.ndarray
    states: np.ndarray


def _step_count(t_end: float, dt: float) -> int:
    if not (dt > 0 and t_end >= 0):
        raise ValueError("need dt > 0 and t_end >= 0")
    n = int(round(t_end / dt))
    if abs(n * dt - t_end) > 1e-9 * max(t_end, dt):
        raise ValueError(f"dt={dt} does not divide t_end={t_end}")
    return n


def _source_sampler(source, n_steps: int, dt: float) -> Callable[[int], np.ndarray | None]:
    if source is None:
        return lambda i: None
    if callable(source):
        return lambda i: np.asarray(source(i * dt))
    source = np.asarray(source)
    if source.shape[0] != n_steps + 1:
        raise ValueError(f"source needs {n_steps + 1} samples, got {source.shape[0]}")
    return lambda i: source[i]


def propagate_damped_maxwell(
    xi, state, t_end: float, dt: float, *, c: float, sigma: float, source=None, every: int = 1
) -> Trajectory:
    """Advance ``(E1_hat, E2_hat, b_hat)`` under damped Maxwell with forcing.

    Solves ``dE/dt = c curl b - sigma c^2 E + c G`` and
    ``db/dt = -c curl E`` mode by mode.  ``xi`` is a :class:`Grid` or a
    pair of wave-vector arrays.  ``source`` gives ``G`` at step boundaries as
    an array of shape ``(n_steps + 1, 2, ...)`` or a callable of time.
    """
    n_steps = _step_count(t_end, dt)
    xi1, xi2 = xi.xi if isinstance(xi, Grid) else xi
    prop = maxwell_mode_propagator(xi1, xi2, c, sigma, dt)
    sample = _source_sampler(source, n_steps, dt)
    state = np.asarray(state, dtype=complex)

    def forcing(i):
        g = sample(i)
        if g is None:
            return None
        out = np.zeros_like(state)
        out[:2] = c * g
        return out

    times, snaps = [0.0], [state]
    now = forcing(0)
    for i in range(1, n_steps + 1):
        nxt = forcing(i)
        state = prop.etd2(state, now, nxt)
        now = nxt
        if i % every == 0 or i == n_steps:
            times.append(i * dt)
            snaps.append(state)
    return Trajectory(np.array(times), np.array(snaps))


def scalar_propagator(
    kind: str,
    alpha: float,
    f,
    g=None,
    F=None,
    *,
    xi_mag,
    t_end: float,
    dt: float,
    sign: int = 1,
    every: int = 1,
) -> Trajectory:
    """Exact per-mode evolution of damped Schrodinger, half-wave or wave equations.

    * ``schrodinger``: ``(d/dt + alpha - i Laplacian) u = F``
    * ``halfwave``: ``(d/dt + alpha - sign * i |D|) u = F``
    * ``wave``: ``u'' + alpha u' - Laplacian u = F`` with ``u' (0) = g``

    Forcing is treated with the second-order exponential integrator.  For the
    wave the stored state is ``(u_hat, du_hat/dt)`` stacked on a leading axis.
    """
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    if (g is not None) != (kind == "wave"):
        raise ValueError("initial velocity g is required for, and only for, the wave")
    n_steps = _step_count(t_end, dt)
    sample = _source_sampler(F, n_steps, dt)
    xi_mag = np.asarray(xi_mag, dtype=float)

    if kind in ("schrodinger", "halfwave"):
        if kind == "schrodinger":
            symbol = -alpha - 1j * xi_mag**2
        else:
            if sign not in (1, -1):
                raise ValueError("sign must be +1 or -1")
            symbol = -alpha + sign * 1j * xi_mag
        z = dt * symbol
        e0, w1, w2 = (np.broadcast_to(phi_functions(z, k), xi_mag.shape) for k in _KINDS)
        state = np.asarray(f, dtype=complex)

        def step(u, s0, s1):
            out = e0 * u
            if s0 is not None:
                out = out + dt * ((w1 - w2) * s0 + w2 * s1)
            return out

    elif kind == "wave":
        mats = {}
        for k in _KINDS:
            P, Q = block_coefficients(alpha, xi_mag, dt, k)
            half = alpha * dt / 2
            # f(dt K) for K = [[0, 1], [-|xi|^2, -alpha]]
            mats[k] = np.array([[P + Q * half, Q * dt], [-Q * dt * xi_mag**2, P - Q * half]])
        state = np.array([np.asarray(f, dtype=complex), np.asarray(g, dtype=complex)])

        def apply(m, v):
            return np.einsum("ij...,j...->i...", m, v)

        def step(u, s0, s1):
            out = apply(mats["exp"], u)
            if s0 is not None:
                zero = np.zeros_like(s0)
                v0, v1 = np.array([zero, s0]), np.array([zero, s1])
                out = out + dt * (apply(mats["phi1"] - mats["phi2"], v0) + apply(mats["phi2"], v1))
            return out

    else:
        raise ValueError(f"unknown equation kind {kind!r}")

    times, snaps = [0.0], [state]
    now = sample(0)
    for i in range(1, n_steps + 1):
        nxt = sample(i)
        state = step(state, now, nxt)
        now = nxt
        if i % every == 0 or i == n_steps:
            times.append(i * dt)
            snaps.append(state)
    return Trajectory(np.array(times), np.array(snaps))
