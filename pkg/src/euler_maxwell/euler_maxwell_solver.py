"""Pseudospectral time stepping for 2D Euler-Maxwell in normal structure.

The unknowns are the vorticity ``omega``, the in-plane electric field
``E = (E1, E2)`` and the normal magnetic component ``b``.  The linear part
of Maxwell's equations (and an optional viscosity) is integrated exactly per
mode; the quadratic terms go through the two-stage exponential Runge-Kutta
scheme

    a       = e^{hL} X + h phi1(hL) N(X)
    X_next  = a + h phi2(hL) (N(a) - N(X)),

which reduces to Heun's method for the vorticity when ``nu = 0``.  With the
exact two-thirds-rule products of :mod:`spectral_core` the semidiscrete
system conserves the total energy up to Ohmic losses, so energy drift
measures time-integration error only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import simpson

from .littlewood_paley import NormSpec, besov_time_norm, chemin_lerner_norm, time_series_norms
from .maxwell_propagator import ModePropagator, build_mode_propagator, phi_functions
from .spectral_core import (
    Field,
    Grid,
    GridMismatchError,
    PhysParams,
    biot_savart,
    cross_normal,
    divergence,
    grad_dot,
    leray_project,
    lp_norm,
    pointwise_magnitude,
    stack,
)

__all__ = [
    "CFL_NUMBER",
    "CFLViolation",
    "BlowUpError",
    "NormalEMState",
    "ohm_current",
    "rhs_vorticity",
    "cfl_limit",
    "step",
    "Run",
    "simulate",
    "step_mhd",
    "simulate_mhd",
    "MHDTrajectory",
    "EnergyReport",
    "energy_report",
    "structure_residuals",
    "vorticity_lemma_check",
    "gagliardo_nirenberg_ratio",
    "write_snapshot",
    "read_snapshot",
]

CFL_NUMBER = 0.5


class CFLViolation(ValueError):
    """The requested step exceeds the advective stability limit."""


class BlowUpError(RuntimeError):
    """Non-finite values appeared; ``last_good`` holds the state before the failed step."""

    def __init__(self, message: str, last_good=None):
        super().__init__(message)
        self.last_good = last_good


def _mean_scale(f: Field) -> float:
    return max(float(np.abs(f.spectral).max(initial=0.0)), 1.0)


@dataclass(frozen=True, eq=False)
class NormalEMState:
    """Vorticity, electric field and normal magnetic field at one time."""

    omega: Field
    E: Field
    b: Field
    time: float = 0.0

    def __post_init__(self):
        if not (self.omega.is_scalar and self.b.is_scalar and self.E.components == 2):
            raise ValueError("need scalar omega and b and a two-component E")
        for f in (self.E, self.b):
            if f.grid != self.omega.grid:
                raise GridMismatchError(f"{self.omega.grid} vs {f.grid}")
        for name, f in (("omega", self.omega), ("E", self.E), ("b", self.b)):
            if np.any(np.abs(f.mean) > 1e-12 * _mean_scale(f)):
                raise ValueError(f"{name} must have zero mean")

    @classmethod
    def from_fields(cls, omega: Field, E: Field, b: Field, time: float = 0.0) -> "NormalEMState":
        """Build a state, projecting ``E`` onto divergence-free fields."""
        return cls(omega, leray_project(E), b, time)

    @classmethod
    def zeros(cls, grid: Grid) -> "NormalEMState":
        return cls(Field.zeros(grid), Field.zeros(grid, 2), Field.zeros(grid))

    @property
    def grid(self) -> Grid:
        return self.omega.grid

    @cached_property
    def velocity(self) -> Field:
        return biot_savart(self.omega)

    @property
    def electromagnetic(self) -> Field:
        """``(E1, E2, b)`` as one three-component field."""
        return stack(self.E, self.b)

    def packed(self) -> np.ndarray:
        return np.concatenate([self.omega.spectral[None], self.E.spectral, self.b.spectral[None]])

    @classmethod
    def unpack(cls, grid: Grid, packed: np.ndarray, time: float) -> "NormalEMState":
        return cls(Field(grid, packed[0]), Field(grid, packed[1:3]), Field(grid, packed[3]), time)


def ohm_current(state: NormalEMState, params: PhysParams) -> Field:
    """``j = sigma (c E + P(u x B))``."""
    drift = leray_project(cross_normal(state.velocity, state.b))
    return (state.E * params.c + drift) * params.sigma


def _truncation(grid: Grid, params: PhysParams) -> np.ndarray | float:
    if params.cutoff_index is None:
        return 1.0
    return (grid.xi_mag <= 2.0**params.cutoff_index).astype(float)


def _vorticity_forcing(state: NormalEMState, params: PhysParams, j: Field) -> np.ndarray:
    transport = grad_dot(state.velocity, state.omega) + grad_dot(j, state.b)
    return -transport.spectral * _truncation(state.grid, params)


def rhs_vorticity(state: NormalEMState, params: PhysParams) -> Field:
    """``-u.grad(omega) - j.grad(b) + nu Lap(omega)``, dealiased and truncated."""
    j = ohm_current(state, params)
    forcing = _vorticity_forcing(state, params, j)
    return state.omega.with_spectral(forcing - params.nu * state.grid.xi_sq * state.omega.spectral)


def cfl_limit(state_or_velocity) -> float:
    """Largest stable step ``CFL_NUMBER * dx / max|u|`` (inf for a fluid at rest)."""
    u = state_or_velocity.velocity if isinstance(state_or_velocity, NormalEMState) else state_or_velocity
    speed = float(pointwise_magnitude(u).max())
    return np.inf if speed == 0 else CFL_NUMBER * u.grid.dx / speed


@dataclass(frozen=True, eq=False)
class _LinearFlow:
    """Exact linear factors for one ``(grid, params, dt)``: Maxwell plus the diffusive parts."""

    maxwell: ModePropagator
    diffusion: tuple[np.ndarray, np.ndarray, np.ndarray]

    def apply(self, which: int, packed: np.ndarray) -> np.ndarray:
        mats = (self.maxwell.exp, self.maxwell.phi1, self.maxwell.phi2)[which]
        out = np.empty_like(packed)
        out[0] = self.diffusion[which] * packed[0]
        out[1:] = ModePropagator.apply(mats, packed[1:])
        return out


_FLOW_CACHE: dict = {}

# three-point Gauss-Legendre rule on [0, 1]
_GL_NODES = 0.5 + np.array([-1.0, 0.0, 1.0]) * np.sqrt(15) / 10
_GL_WEIGHTS = np.array([5.0, 8.0, 5.0]) / 18


def _linear_flow(grid: Grid, params: PhysParams, dt: float) -> _LinearFlow:
    key = (grid, params.c, params.sigma, params.nu, dt)
    flow = _FLOW_CACHE.get(key)
    if flow is None:
        if len(_FLOW_CACHE) > 24:
            _FLOW_CACHE.clear()
        z = -params.nu * grid.xi_sq * dt
        diffusion = tuple(phi_functions(z, k).real for k in ("exp", "phi1", "phi2"))
        flow = _LinearFlow(build_mode_propagator(grid, params, dt), diffusion)
        _FLOW_CACHE[key] = flow
    return flow


def _nonlinear(state: NormalEMState, params: PhysParams) -> tuple[np.ndarray, Field]:
    j = ohm_current(state, params)
    out = np.zeros((4,) + state.grid.shape, dtype=complex)
    out[0] = _vorticity_forcing(state, params, j)
    # dE/dt = c curl b - sigma c^2 E - sigma c P(u x B)
    out[1:3] = (j.spectral - params.sigma * params.c * state.E.spectral) * (-params.c)
    return out, j


def _finish(grid: Grid, packed: np.ndarray, time: float) -> NormalEMState:
    packed[..., 0, 0] = 0.0
    E = leray_project(Field(grid, packed[1:3]))
    return NormalEMState(Field(grid, packed[0]), E, Field(grid, packed[3]), time)


def _advance(state: NormalEMState, params: PhysParams, dt: float, ohmic: bool):
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    limit = cfl_limit(state)
    if dt > limit:
        raise CFLViolation(f"dt={dt:.3e} exceeds the CFL limit {limit:.3e} at t={state.time:.4f}")
    grid = state.grid
    flow = _linear_flow(grid, params, dt)
    x0 = state.packed()
    n0, _ = _nonlinear(state, params)
    a = flow.apply(0, x0) + dt * flow.apply(1, n0)
    mid = _finish(grid, a.copy(), state.time + dt)
    n1, _ = _nonlinear(mid, params)
    out = a + dt * flow.apply(2, n1 - n0)
    if not np.all(np.isfinite(out)):
        raise BlowUpError(f"non-finite values after the step from t={state.time:.6f}", last_good=state)
    loss = None
    if ohmic:
        # int ||j||^2 over the step along the scheme's own exponential dense output
        loss = 0.0
        for node, weight in zip(_GL_NODES, _GL_WEIGHTS):
            s = node * dt
            sub = _linear_flow(grid, params, s)
            xs = sub.apply(0, x0) + s * sub.apply(1, n0) + (s * s / dt) * sub.apply(2, n1 - n0)
            js = ohm_current(_finish(grid, xs, state.time + s), params)
            loss += weight * dt * lp_norm(js, 2) ** 2
    return _finish(grid, out, state.time + dt), loss


def step(state: NormalEMState, params: PhysParams, dt: float) -> NormalEMState:
    """Advance one exponential Runge-Kutta step of size ``dt``.

    Raises :class:`CFLViolation` when ``dt`` exceeds the advective limit and
    :class:`BlowUpError` if the result is not finite.
    """
    return _advance(state, params, dt, ohmic=False)[0]


def _step_count(t_end: float, dt: float) -> int:
    n = int(round(t_end / dt))
    if n < 0 or abs(n * dt - t_end) > 1e-9 * max(t_end, dt):
        raise ValueError(f"dt={dt} does not divide t_end={t_end}")
    return n


@dataclass(frozen=True)
class Run:
    """Snapshots of one run plus the Ohmic integral ``int_0^t ||j||^2`` at each snapshot."""

    states: list
    ohmic: np.ndarray

    def __len__(self):
        return len(self.states)

    def __getitem__(self, i):
        return self.states[i]

    def __iter__(self):
        return iter(self.states)


def simulate(
    state: NormalEMState,
    params: PhysParams,
    dt: float,
    t_end: float,
    *,
    every: int = 1,
    on_snapshot: Callable[[int, NormalEMState], None] | None = None,
    track_ohmic: bool = True,
) -> Run:
    """Run to ``t_end``, keeping snapshots every ``every`` steps (first and last included).

    With ``track_ohmic`` the Ohmic loss is integrated inside each step, which
    resolves the fast electric transients that snapshot quadrature would miss.
    """
    n = _step_count(t_end, dt)
    snaps, losses = [state], [0.0]
    total = 0.0
    if on_snapshot:
        on_snapshot(0, state)
    for i in range(1, n + 1):
        state, loss = _advance(state, params, dt, track_ohmic)
        total += loss or 0.0
        if i % every == 0 or i == n:
            snaps.append(state)
            losses.append(total)
            if on_snapshot:
                on_snapshot(i, state)
    ohmic = np.array(losses) if track_ohmic else np.full(len(snaps), np.nan)
    return Run(snaps, ohmic)


def _mhd_advance(omega: Field, b: Field, sigma: float, dt: float, nu: float, track: bool):
    if not (sigma > 0 and dt > 0):
        raise ValueError("need sigma > 0 and dt > 0")
    grid = omega.grid
    u = biot_savart(omega)
    limit = cfl_limit(u)
    if dt > limit:
        raise CFLViolation(f"dt={dt:.3e} exceeds the CFL limit {limit:.3e}")
    rates = np.array([-nu * grid.xi_sq, -grid.xi_sq / sigma])

    def flow(s):
        return [phi_functions(rates * s, k).real for k in ("exp", "phi1", "phi2")]

    def forcing(w, bb, vel):
        return np.array([-grad_dot(vel, w).spectral, -grad_dot(vel, bb).spectral])

    e0, w1, w2 = flow(dt)
    x0 = np.array([omega.spectral, b.spectral])
    n0 = forcing(omega, b, u)
    a = e0 * x0 + dt * w1 * n0
    a[..., 0, 0] = 0.0
    wa, ba = Field(grid, a[0]), Field(grid, a[1])
    n1 = forcing(wa, ba, biot_savart(wa))
    out = a + dt * w2 * (n1 - n0)
    out[..., 0, 0] = 0.0
    if not np.all(np.isfinite(out)):
        raise BlowUpError("non-finite values in the limit system")
    loss = None
    if track:
        # int ||grad b||^2 over the step along the exponential dense output
        loss = 0.0
        for node, weight in zip(_GL_NODES, _GL_WEIGHTS):
            s = node * dt
            es, p1, p2 = flow(s)
            bs = es[1] * x0[1] + s * p1[1] * n0[1] + (s * s / dt) * p2[1] * (n1[1] - n0[1])
            loss += weight * dt * _grad_l2_sq(Field(grid, bs))
    return Field(grid, out[0]), Field(grid, out[1]), loss


def step_mhd(omega: Field, b: Field, sigma: float, dt: float, nu: float = 0.0) -> tuple[Field, Field]:
    """One step of the limit system: Euler transport for omega, advection-diffusion for b.

    ``d omega/dt + u.grad omega = nu Lap omega`` and
    ``db/dt - Lap b / sigma + u.grad b = 0``, with the heat factor exact.
    """
    omega, b, _ = _mhd_advance(omega, b, sigma, dt, nu, track=False)
    return omega, b


@dataclass(frozen=True)
class MHDTrajectory:
    """Snapshots of the limit system plus ``int_0^t ||grad b||^2`` at each snapshot."""

    times: np.ndarray
    omega: list
    b: list
    gradient_loss: np.ndarray

    def heat_balance(self, sigma: float) -> np.ndarray:
        """``||b(t)||^2 + (2/sigma) int_0^t ||grad b||^2`` at every stored time."""
        mass = np.array([lp_norm(bb, 2) ** 2 for bb in self.b])
        return mass + 2 / sigma * self.gradient_loss


def simulate_mhd(omega: Field, b: Field, sigma: float, dt: float, t_end: float, *,
                 nu: float = 0.0, every: int = 1) -> MHDTrajectory:
    n = _step_count(t_end, dt)
    times, ws, bs, losses = [0.0], [omega], [b], [0.0]
    total = 0.0
    for i in range(1, n + 1):
        omega, b, loss = _mhd_advance(omega, b, sigma, dt, nu, track=True)
        total += loss
        if i % every == 0 or i == n:
            times.append(i * dt)
            ws.append(omega)
            bs.append(b)
            losses.append(total)
    return MHDTrajectory(np.array(times), ws, bs, np.array(losses))


def _grad_l2_sq(f: Field) -> float:
    """``||grad f||_2^2`` by Parseval (summed over components)."""
    return float(f.grid.length**2 * np.sum(f.grid.xi_sq * np.abs(f.spectral) ** 2))


def _running_integral(values: np.ndarray, times: np.ndarray) -> np.ndarray:
    """``int_0^{t_i} values`` for every sample: Simpson on the prefix, trapezoid on two points."""
    out = np.zeros(len(times))
    for i in range(1, len(times)):
        if i == 1:
            out[i] = np.trapezoid(values[:2], times[:2])
        else:
            out[i] = simpson(values[: i + 1], x=times[: i + 1])
    return out


def structure_residuals(state: NormalEMState, params: PhysParams) -> dict[str, float]:
    """Spectral-norm residuals of the constraints, measured on 3D embeddings.

    The out-of-plane components are rebuilt with generic three-dimensional
    cross products and curls (with ``d/dx3 = 0``) rather than assumed zero.
    """
    grid = state.grid
    zero = np.zeros(grid.shape, dtype=complex)
    u = state.velocity.spectral
    u3 = np.array([u[0], u[1], zero])
    e3 = np.array([state.E.spectral[0], state.E.spectral[1], zero])
    B3 = np.array([zero, zero, state.b.spectral])
    j = ohm_current(state, params)
    j3 = np.array([j.spectral[0], j.spectral[1], zero])
    xi1, xi2 = grid.xi
    grad3 = np.array([1j * xi1, 1j * xi2, np.zeros_like(xi1)])

    def curl3(v):
        return np.array(
            [grad3[1] * v[2] - grad3[2] * v[1], grad3[2] * v[0] - grad3[0] * v[2], grad3[0] * v[1] - grad3[1] * v[0]]
        )

    def cross3(a, bb):
        phys_a = np.fft.ifft2(a * grid.n_points**2).real
        phys_b = np.fft.ifft2(bb * grid.n_points**2).real
        return np.fft.fft2(np.cross(phys_a, phys_b, axis=0)) / grid.n_points**2

    def norm(x):
        return float(grid.length * np.sqrt(np.sum(np.abs(x) ** 2)))

    return {
        "div_E": norm(divergence(state.E).spectral),
        "div_j": norm(divergence(j).spectral),
        "u3": norm(u3[2]),
        "E3": norm(e3[2]),
        "B_in_plane": norm(B3[:2]),
        "dB_in_plane": norm(curl3(e3)[:2]),
        "lorentz_3": norm(cross3(j3, B3)[2]),
        "drift_3": norm(cross3(u3, B3)[2]),
    }


@dataclass(frozen=True)
class EnergyReport:
    """Energy bookkeeping of one trajectory; energies are squared ``L^2`` norms.

    ``balance[i]`` is ``E0^2 - (kinetic + electric + magnetic)(t_i) - (2/sigma) J(0,t_i)^2``;
    it is zero for exact solutions and should not be negative.
    """

    times: np.ndarray
    E0: float
    kinetic: np.ndarray
    electric: np.ndarray
    magnetic: np.ndarray
    dissipation: np.ndarray
    balance: np.ndarray
    window: tuple[float, float]
    H: dict = field(default_factory=dict)

    @property
    def H_total(self) -> float:
        return float(sum(self.H.values()))

    def J(self, t1: float, t2: float) -> float:
        """``||j||_{L^2((t1, t2) x torus)}`` from the running integral."""
        i1, i2 = _index_of(self.times, t1), _index_of(self.times, t2)
        return float(np.sqrt(max(self.dissipation[i2] ** 2 - self.dissipation[i1] ** 2, 0.0)))


def _index_of(times: np.ndarray, t: float) -> int:
    i = int(np.argmin(np.abs(times - t)))
    if abs(times[i] - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError(f"no snapshot at t={t}")
    return i


def energy_report(
    trajectory: Sequence[NormalEMState],
    params: PhysParams,
    partition: tuple[float, float] | None = None,
    *,
    p: float = 4.0,
) -> EnergyReport:
    """Energy balance, Ohmic dissipation ``J`` and the components of ``H(t1, t2)``.

    ``partition`` selects the window ``(t1, t2)`` for ``H``; both ends must
    be snapshot times.  The default is the whole trajectory.
    """
    if not trajectory:
        raise ValueError("empty trajectory")
    times = np.array([s.time for s in trajectory])
    if np.any(np.diff(times) <= 0):
        raise ValueError("snapshot times must increase")
    kinetic = np.array([lp_norm(s.velocity, 2) ** 2 for s in trajectory])
    electric = np.array([lp_norm(s.E, 2) ** 2 for s in trajectory])
    magnetic = np.array([lp_norm(s.b, 2) ** 2 for s in trajectory])
    J = np.sqrt(np.maximum(_ohmic_integral(trajectory, params, times), 0.0))
    E0 = float(np.sqrt(kinetic[0] + electric[0] + magnetic[0]))
    balance = E0**2 - kinetic - electric - magnetic - 2 / params.sigma * J**2

    t1, t2 = partition if partition is not None else (times[0], times[-1])
    i1, i2 = _index_of(times, t1), _index_of(times, t2)
    if i2 < i1:
        raise ValueError("window end precedes its start")
    window = trajectory[i1 : i2 + 1]
    wt = times[i1 : i2 + 1]
    H = _h_components(window, wt, params, p, E0)
    return EnergyReport(times, E0, kinetic, electric, magnetic, J, balance, (float(wt[0]), float(wt[-1])), H)


def _ohmic_integral(trajectory, params: PhysParams, times: np.ndarray) -> np.ndarray:
    """In-step integral when the run tracked it, otherwise Simpson over snapshots."""
    ohmic = getattr(trajectory, "ohmic", None)
    if ohmic is not None and np.all(np.isfinite(ohmic)):
        return np.asarray(ohmic)
    current_sq = np.array([lp_norm(ohm_current(s, params), 2) ** 2 for s in trajectory])
    return _running_integral(current_sq, times)


def _h_components(window, times, params: PhysParams, p: float, E0: float) -> dict[str, float]:
    c, split = params.c, params.sigma * params.c
    em = [s.electromagnetic for s in window]
    vort_l2 = max(lp_norm(s.omega, 2) for s in window)
    vort_lp = max(lp_norm(s.omega, p) for s in window)
    em2 = time_series_norms(em, times, 2.0)
    eminf = time_series_norms(em, times, np.inf)

    def cl(ts, s, q, r, which):
        return chemin_lerner_norm(ts, NormSpec(s, ts.p, q, r=r, split=which, threshold=split, flavor="chemin_lerner"))

    def l2_time(values):
        return float(np.sqrt(np.trapezoid(np.asarray(values) ** 2, times))) if len(times) > 1 else 0.0

    b_series = time_series_norms([s.b for s in window], times, 2.0)
    return {
        "u_Linf_H1": vort_l2,
        "u_Linf_W1p": E0 ** ((p - 2) / (2 * p - 2)) * vort_lp ** (p / (2 * p - 2)),
        "EB_CL_inf_B74_high": c ** (-0.75) * cl(em2, 1.75, 1, np.inf, "above"),
        "EB_CL_2_B74_high": c**0.25 * cl(em2, 1.75, 1, 2, "above"),
        "EB_CL_2_B1inf_high": cl(eminf, 1.0, 1, 2, "above"),
        "EB_Linf_H1": max(np.sqrt(_grad_l2_sq(f)) for f in em),
        "cE_L2_H1": c * l2_time([np.sqrt(_grad_l2_sq(s.E)) for s in window]),
        "B_L2_B2_low": besov_time_norm(b_series, NormSpec(2.0, 2, 1, split="below", threshold=split), 2),
    }


def vorticity_lemma_check(trajectory: Sequence[NormalEMState], params: PhysParams) -> dict[str, np.ndarray]:
    """Both sides of ``||w(t)|| <= ||w0|| + ||j||_{L2 L2} ||grad b||_{L2 Linf}`` at every snapshot."""
    times = np.array([s.time for s in trajectory])
    lhs = np.array([lp_norm(s.omega, 2) for s in trajectory])
    grad_b_sup = np.array([float(pointwise_magnitude(_gradient(s.b)).max()) for s in trajectory])
    jt = np.sqrt(np.maximum(_ohmic_integral(trajectory, params, times), 0))
    gt = np.sqrt(np.maximum(_running_integral(grad_b_sup**2, times), 0))
    rhs = lhs[0] + jt * gt
    return {"times": times, "lhs": lhs, "rhs": rhs, "margin": rhs - lhs}


def _gradient(f: Field) -> Field:
    xi1, xi2 = f.grid.xi
    return Field(f.grid, np.stack([1j * xi1 * f.spectral, 1j * xi2 * f.spectral]))


def gagliardo_nirenberg_ratio(u: Field, p: float = 4.0) -> float:
    """``||u||_inf / (||u||_2^{(p-2)/(2p-2)} ||grad u||_p^{p/(2p-2)})`` for a 2D vector field."""
    if not p > 2:
        raise ValueError("p must exceed 2")
    grads = np.concatenate([_gradient(u.component(i)).spectral for i in range(u.components)])
    grad_norm = lp_norm(Field(u.grid, grads), p)
    denom = lp_norm(u, 2) ** ((p - 2) / (2 * p - 2)) * grad_norm ** (p / (2 * p - 2))
    return lp_norm(u, np.inf) / denom


def write_snapshot(state: NormalEMState, params: PhysParams, root, tag: str, step_index: int) -> Path:
    """Write ``root/run-<tag>/snap-<step>.npz`` with spectral data and a JSON header."""
    folder = Path(root) / f"run-{tag}"
    folder.mkdir(parents=True, exist_ok=True)
    header = {
        "N": state.grid.n_points,
        "L": state.grid.length,
        "c": params.c,
        "sigma": params.sigma,
        "nu": params.nu,
        "time": state.time,
        "step": step_index,
    }
    path = folder / f"snap-{step_index:06d}.npz"
    np.savez(path, header=json.dumps(header), spectral=state.packed())
    return path


def read_snapshot(path) -> tuple[NormalEMState, dict]:
    with np.load(path) as data:
        header = json.loads(str(data["header"]))
        packed = data["spectral"]
    grid = Grid(header["N"], header["L"])
    return NormalEMState.unpack(grid, packed, header["time"]), header
