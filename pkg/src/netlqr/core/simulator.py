# src/netlqr/core/simulator.py
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np
import scipy.integrate
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field, model_validator

from netlqr.config.models import ToleranceConfig
from netlqr.core.controller import ControlLaw, GainSchedule, SystemModel, _check_refinement
from netlqr.core.coupling import EffectiveWeights, SpectralData
from netlqr.core.decomposition import cost_breakdown, decompose
from netlqr.core.riccati import RiccatiODESolution, _interpolate, _solve_pd, solve_are, solve_riccati_ode
from netlqr.exceptions import (
    DimensionMismatchError,
    MissingRiccatiSamplesError,
    ModelError,
    NonFiniteBlowupError,
    TooLargeError,
)
from netlqr.types import FloatArray, GlobalField, Integrator
from netlqr.utils import unvec, vec

logger = logging.getLogger(__name__)

# Steps of noise drawn per generator call while simulating a batch of paths
_NOISE_CHUNK = 256

Stepper = Callable[[Callable[[float, FloatArray], FloatArray], float, FloatArray, float], FloatArray]


# ---------------------------------------------------------------------------
# Data containers
# ---------------------------------------------------------------------------

class NoisePath(BaseModel):
    """Brownian increments of one path: (N, d_w, n), variance dt per entry."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    grid: FloatArray
    increments: FloatArray
    seed: int = Field(..., ge=0)
    path: int = Field(..., ge=0)

    @model_validator(mode="after")
    def _check_steps(self) -> NoisePath:
        if self.increments.ndim != 3 or self.increments.shape[0] != self.grid.shape[0] - 1:
            raise DimensionMismatchError(
                f"Expected {self.grid.shape[0] - 1} increments of shape (d_w, n), got {self.increments.shape}"
            )
        return self

    @property
    def d_w(self) -> int:
        return int(self.increments.shape[1])

    @property
    def n(self) -> int:
        return int(self.increments.shape[2])

    def cumulative(self) -> FloatArray:
        """w(t_k) with w(0) = 0, shape (N+1, d_w, n)."""
        out = np.zeros((self.grid.shape[0], self.d_w, self.n))
        np.cumsum(self.increments, axis=0, out=out[1:])
        return out


class NoiseComponents(BaseModel):
    """Increments of w̆ (N, d_w, n) and of every w^l (N, L, d_w, n)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    auxiliary: FloatArray
    eigen: FloatArray


class Trajectory(BaseModel):
    """States (N+1, d_x, n) and controls (N+1, d_u, n) sampled on a uniform grid."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    grid: FloatArray
    x: FloatArray
    u: FloatArray
    noise: NoisePath | None = None

    @model_validator(mode="after")
    def _check(self) -> Trajectory:
        if self.grid.ndim != 1 or np.any(np.diff(self.grid) <= 0):
            raise ModelError("Trajectory grid must be strictly increasing")
        if self.x.shape[0] != self.grid.shape[0] or self.u.shape[0] != self.grid.shape[0]:
            raise DimensionMismatchError("State and control samples must match the grid length")
        if self.x.shape[-1] != self.u.shape[-1]:
            raise DimensionMismatchError("State and control fields disagree on the number of nodes")
        return self

    @property
    def T(self) -> float:
        return float(self.grid[-1])

    @property
    def final(self) -> GlobalField:
        return self.x[-1]


class ComponentTrajectory(BaseModel):
    """Separately simulated auxiliary and eigen subsystems on a shared grid."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    grid: FloatArray
    aux_x: FloatArray = Field(..., description="(N+1, d_x, n)")
    aux_u: FloatArray = Field(..., description="(N+1, d_u, n)")
    eigen_x: FloatArray = Field(..., description="(N+1, L, d_x, n)")
    eigen_u: FloatArray = Field(..., description="(N+1, L, d_u, n)")

    def recompose(self) -> Trajectory:
        return Trajectory(
            grid=self.grid,
            x=self.aux_x + self.eigen_x.sum(axis=1),
            u=self.aux_u + self.eigen_u.sum(axis=1),
        )


class CostReport(BaseModel):
    """Running plus terminal cost, optionally split per node into auxiliary and eigen parts."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    running: float
    terminal: float
    aux_breakdown: FloatArray | None = Field(default=None, description="(n,) J̆_i")
    eigen_breakdown: FloatArray | None = Field(default=None, description="(L, n) J^l_i")

    @property
    def total(self) -> float:
        return self.running + self.terminal

    @property
    def breakdown_total(self) -> float | None:
        if self.aux_breakdown is None or self.eigen_breakdown is None:
            return None
        return float(self.aux_breakdown.sum() + self.eigen_breakdown.sum())


class EnsembleResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    costs: FloatArray = Field(..., description="Per-path realized cost in path order")
    seed: int
    dt: float
    samples: list[Trajectory] = Field(default_factory=list)

    @property
    def n_paths(self) -> int:
        return int(self.costs.shape[0])

    @property
    def mean(self) -> float:
        return float(self.costs.mean())

    @property
    def stderr(self) -> float:
        if self.n_paths < 2:
            return 0.0
        return float(self.costs.std(ddof=1) / math.sqrt(self.n_paths))


class StochasticValue(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    aux: FloatArray = Field(..., description="(n,) V̆_i")
    eigen: FloatArray = Field(..., description="(L, n) V_i^l")
    mc_mean: float | None = None
    mc_stderr: float | None = None

    @property
    def total(self) -> float:
        return float(self.aux.sum() + self.eigen.sum())

    @property
    def mc_z_score(self) -> float | None:
        if self.mc_mean is None or not self.mc_stderr:
            return None
        return (self.mc_mean - self.total) / self.mc_stderr


# ---------------------------------------------------------------------------
# Integration
# ---------------------------------------------------------------------------

def _uniform_grid(T: float, dt: float) -> tuple[FloatArray, float]:
    if T <= 0 or dt <= 0:
        raise ModelError(f"Horizon and step must be positive, got T={T}, dt={dt}")
    N = max(1, math.ceil(T / dt - 1e-9))
    return np.linspace(0.0, T, N + 1), T / N


def _drift(model: SystemModel, M: FloatArray, law: ControlLaw) -> Callable[[float, FloatArray], FloatArray]:
    coupled_x = bool(np.any(model.D))
    coupled_u = bool(np.any(model.E))

    def f(t: float, x: FloatArray) -> FloatArray:
        u = law.control(t, x)
        out = model.A @ x + model.B @ u
        if coupled_x:
            out = out + (model.D @ x) @ M
        if coupled_u:
            out = out + (model.E @ u) @ M
        return out

    return f


def _rk4(f: Callable[[float, FloatArray], FloatArray], t: float, x: FloatArray, h: float) -> FloatArray:
    k1 = f(t, x)
    k2 = f(t + 0.5 * h, x + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, x + 0.5 * h * k2)
    k4 = f(t + h, x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _euler(f: Callable[[float, FloatArray], FloatArray], t: float, x: FloatArray, h: float) -> FloatArray:
    return x + h * f(t, x)


def _as_integrator(integrator: Integrator | str) -> Integrator:
    try:
        return Integrator(integrator)
    except ValueError as e:
        raise ModelError(f"Failed to select integrator: {e}") from e


def _stepper(integrator: Integrator | str, noisy: bool) -> Stepper:
    """Drift step for one interval; the noise increment F dw is added by the caller."""
    if not noisy or _as_integrator(integrator) is Integrator.RK4:
        return _rk4
    return _euler


def _check_finite(x: FloatArray, t: float) -> None:
    if not np.all(np.isfinite(x)):
        raise NonFiniteBlowupError(f"State became non-finite at t={t:.6g}")


def _check_inputs(model: SystemModel, M: FloatArray, x0: GlobalField) -> None:
    n = M.shape[0]
    if M.shape != (n, n):
        raise DimensionMismatchError(f"Coupling must be square, got {M.shape}")
    if x0.shape != (model.d_x, n):
        raise DimensionMismatchError(f"Initial state must be {model.d_x}x{n}, got {x0.shape}")


def simulate_deterministic(
    model: SystemModel,
    M: FloatArray,
    law: ControlLaw,
    x0: GlobalField,
    T: float,
    dt: float | None = None,
) -> Trajectory:
    """Fixed-step RK4 of dx/dt = A x + B u + D x M + E u M under ``law``."""
    return simulate_path(model, M, law, x0, T, dt)


def simulate_path(
    model: SystemModel,
    M: FloatArray,
    law: ControlLaw,
    x0: GlobalField,
    T: float,
    dt: float | None = None,
    noise: NoisePath | None = None,
    integrator: Integrator | str = Integrator.EULER_MARUYAMA,
) -> Trajectory:
    """
    One path of the network. Without noise the step is RK4. A given noise path adds
    F dw per step to the drift step chosen by ``integrator``: Euler-Maruyama by default,
    or RK4, which with F = 0 reproduces the deterministic integrator exactly.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    _check_inputs(model, M, x0)
    if noise is not None:
        grid = noise.grid
        h = float(grid[1] - grid[0])
        if noise.n != M.shape[0] or noise.d_w != model.d_w:
            raise DimensionMismatchError(f"Noise path has shape {noise.increments.shape[1:]}")
    else:
        grid, h = _uniform_grid(T, T / 4000 if dt is None else dt)
    law.check_grid(h, float(grid[-1]))
    f = _drift(model, M, law)
    step = _stepper(integrator, noise is not None)

    N = grid.shape[0] - 1
    xs = np.empty((N + 1, *x0.shape))
    us = np.empty((N + 1, model.d_u, x0.shape[1]))
    xs[0] = x0
    for k in range(N):
        t = float(grid[k])
        us[k] = law.control(t, xs[k])
        x = step(f, t, xs[k], h)
        if noise is not None:
            x = x + model.F @ noise.increments[k]
        _check_finite(x, t + h)
        xs[k + 1] = x
    us[N] = law.control(float(grid[N]), xs[N])
    return Trajectory(grid=grid, x=xs, u=us, noise=noise)


# ---------------------------------------------------------------------------
# Noise
# ---------------------------------------------------------------------------

def _stream(seed: int, path: int, node: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, path, node])))


def _node_streams(seed: int, path: int, n: int) -> list[np.random.Generator]:
    return [_stream(seed, path, i) for i in range(n)]


def _draw(streams: list[np.random.Generator], steps: int, d_w: int) -> FloatArray:
    """(steps, d_w, n) standard normals; column i continues the stream of node i."""
    return np.stack([s.standard_normal((steps, d_w)) for s in streams], axis=-1)


def generate_noise(seed: int, path: int, grid: FloatArray, d_w: int, n: int) -> NoisePath:
    """
    Increments of path ``path``. Every (seed, path, node) triple owns an independent
    Philox stream and step k takes its k-th draws, so a node's noise does not depend
    on n, on the batch layout or on how many steps are drawn at once.
    """
    grid = np.asarray(grid, dtype=np.float64)
    h = float(grid[1] - grid[0])
    draws = _draw(_node_streams(seed, path, n), grid.shape[0] - 1, d_w)
    return NoisePath(grid=grid, increments=draws * math.sqrt(h), seed=seed, path=path)


def decompose_noise(noise: NoisePath, spec: SpectralData) -> NoiseComponents:
    """dw^l = dw v^l v^l^T and dw̆ = dw - sum_l dw^l, per step."""
    if noise.n != spec.n:
        raise DimensionMismatchError(f"Noise path covers {noise.n} nodes, spectral data {spec.n}")
    V = spec.eigenvectors
    coeff = noise.increments @ V  # (N, d_w, L)
    eigen = np.einsum("kdl,nl->kldn", coeff, V)
    return NoiseComponents(auxiliary=noise.increments - eigen.sum(axis=1), eigen=eigen)


def noise_covariance(spec: SpectralData) -> FloatArray:
    """
    Per-unit-time covariance of one scalar noise channel stacked as
    (w̆_1..w̆_n, w^1_1..w^1_n, ..., w^L_1..w^L_n).
    """
    blocks = [spec.auxiliary_projector()] + [spec.projector(ell) for ell in range(spec.rank)]
    return scipy.linalg.block_diag(*blocks)


# ---------------------------------------------------------------------------
# Costs
# ---------------------------------------------------------------------------

def _quadratic(z: FloatArray, W: FloatArray, S: FloatArray) -> FloatArray:
    """<z, S z>_W over the last two axes; leading axes are kept."""
    return np.einsum("...di,ij,...dj->...", z, W, S @ z)


def evaluate_cost(
    traj: Trajectory,
    G: FloatArray,
    H: FloatArray,
    Q: FloatArray,
    R: FloatArray,
    Q_T: FloatArray | None = None,
    spec: SpectralData | None = None,
    weights: EffectiveWeights | None = None,
) -> CostReport:
    """Trapezoidal integral of <x, Qx>_G + <u, Ru>_H plus <x(T), Q_T x(T)>_G."""
    n = traj.x.shape[-1]
    if G.shape != (n, n) or H.shape != (n, n):
        raise DimensionMismatchError(f"G and H must be {n}x{n}")
    if Q.shape != (traj.x.shape[1],) * 2 or R.shape != (traj.u.shape[1],) * 2:
        raise DimensionMismatchError("Q and R must match the state and control dimensions")
    integrand = _quadratic(traj.x, G, Q) + _quadratic(traj.u, H, R)
    running = float(scipy.integrate.trapezoid(integrand, traj.grid))
    terminal = 0.0 if Q_T is None else float(_quadratic(traj.x[-1], G, Q_T))
    report = CostReport(running=running, terminal=terminal)
    if spec is None or weights is None:
        return report

    aux_rate = np.empty((traj.grid.shape[0], n))
    eig_rate = np.empty((traj.grid.shape[0], spec.rank, n))
    for k in range(traj.grid.shape[0]):
        aux_rate[k], eig_rate[k] = cost_breakdown(
            decompose(traj.x[k], spec), decompose(traj.u[k], spec), weights, Q, R
        )
    aux = scipy.integrate.trapezoid(aux_rate, traj.grid, axis=0)
    eig = scipy.integrate.trapezoid(eig_rate, traj.grid, axis=0)
    if Q_T is not None:
        dT = decompose(traj.x[-1], spec)
        q, _ = weights.for_eigen(spec)
        aux = aux + weights.q0 * np.einsum("di,de,ei->i", dT.auxiliary, Q_T, dT.auxiliary)
        eig = eig + q[:, None] * np.einsum("ldi,de,lei->li", dT.eigen, Q_T, dT.eigen)
    return report.model_copy(update={"aux_breakdown": aux, "eigen_breakdown": eig})


def optimal_cost(gains: GainSchedule, x0: GlobalField) -> float:
    """sum_i x̆_i^T P̆(0) x̆_i + sum_l x_i^l^T P^l(0) x_i^l."""
    aux, eigen = _value_components(gains, x0)
    return float(aux.sum() + eigen.sum())


def _value_components(gains: GainSchedule, x0: GlobalField) -> tuple[FloatArray, FloatArray]:
    P_aux, P_groups = gains.riccati_at(0.0)
    dx = decompose(x0, gains.spectral)
    aux = np.einsum("di,de,ei->i", dx.auxiliary, P_aux, dx.auxiliary)
    P_eig = P_groups[gains.spectral.group_of]
    eigen = np.einsum("ldi,lde,lei->li", dx.eigen, P_eig, dx.eigen)
    return aux, eigen


def stochastic_value(model: SystemModel, gains: GainSchedule, x0: GlobalField) -> StochasticValue:
    """
    Per-node optimal values under noise: the deterministic quadratic term plus the
    noise intensity of each component times the integral of tr(P(t) F F^T).
    """
    if not gains.is_finite or gains.aux_riccati is None or gains.group_riccati is None or gains.grid is None:
        raise MissingRiccatiSamplesError("Stochastic value needs finite-horizon gains with Riccati samples")
    spec = gains.spectral
    FFt = model.F @ model.F.T
    aux_trace = RiccatiODESolution(grid=gains.grid, P=gains.aux_riccati, step=gains.step or 1.0).integral_trace(FFt)
    group_trace = np.array(
        [
            RiccatiODESolution(grid=gains.grid, P=P, step=gains.step or 1.0).integral_trace(FFt)
            for P in gains.group_riccati
        ]
    )
    aux, eigen = _value_components(gains, x0)
    v2 = (spec.eigenvectors**2).T  # (L, n)
    aux = aux + (1.0 - v2.sum(axis=0)) * aux_trace
    eigen = eigen + v2 * group_trace[spec.group_of][:, None] if spec.rank else eigen
    return StochasticValue(aux=aux, eigen=eigen)


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

def _simulate_batch(
    model: SystemModel,
    M: FloatArray,
    law: ControlLaw,
    x0: GlobalField,
    grid: FloatArray,
    G: FloatArray,
    H: FloatArray,
    seed: int,
    paths: range,
    keep: int,
    integrator: Integrator | str,
) -> tuple[FloatArray, list[Trajectory]]:
    h = float(grid[1] - grid[0])
    N = grid.shape[0] - 1
    n = x0.shape[1]
    B = len(paths)
    f = _drift(model, M, law)
    step = _stepper(integrator, True)
    streams = [_node_streams(seed, p, n) for p in paths]
    x = np.broadcast_to(x0, (B, *x0.shape)).copy()
    kept = [p - paths.start for p in paths if p < keep]
    xs = np.empty((N + 1, len(kept), *x0.shape)) if kept else None
    us = np.empty((N + 1, len(kept), model.d_u, n)) if kept else None
    sqrt_h = math.sqrt(h)

    def rate(t: float, x: FloatArray) -> tuple[FloatArray, FloatArray]:
        u = law.control(t, x)
        return _quadratic(x, G, model.Q) + _quadratic(u, H, model.R), u

    cost = np.zeros(B)
    chunk = np.empty(0)
    for k in range(N):
        t = float(grid[k])
        c, u = rate(t, x)
        cost += (0.5 if k == 0 else 1.0) * h * c
        if xs is not None and us is not None:
            xs[k], us[k] = x[kept], u[kept]
        if k % _NOISE_CHUNK == 0:
            steps = min(_NOISE_CHUNK, N - k)
            chunk = np.stack([_draw(s, steps, model.d_w) for s in streams], axis=1) * sqrt_h
        x = step(f, t, x, h) + model.F @ chunk[k % _NOISE_CHUNK]
        _check_finite(x, t + h)
    c, u = rate(float(grid[N]), x)
    cost += 0.5 * h * c + _quadratic(x, G, model.Q_T)

    samples: list[Trajectory] = []
    if xs is not None and us is not None:
        xs[N], us[N] = x[kept], u[kept]
        samples = [Trajectory(grid=grid, x=xs[:, j], u=us[:, j]) for j in range(len(kept))]
    logger.debug("Simulated paths %d..%d", paths.start, paths.stop - 1)
    return cost, samples


def simulate_stochastic(
    model: SystemModel,
    M: FloatArray,
    law: ControlLaw,
    x0: GlobalField,
    T: float,
    G: FloatArray,
    H: FloatArray,
    n_paths: int,
    seed: int = 0,
    dt: float | None = None,
    batch_size: int = 256,
    max_workers: int | None = None,
    keep: int = 1,
    integrator: Integrator | str = Integrator.EULER_MARUYAMA,
) -> EnsembleResult:
    """
    Monte Carlo ensemble of realized costs. Paths are split into fixed batches that run
    on a thread pool; costs are reduced in path order so results do not depend on scheduling.
    Path k equals ``simulate_path`` driven by ``generate_noise(seed, k, ...)``.
    """
    if n_paths < 1:
        raise ModelError(f"n_paths must be at least 1, got {n_paths}")
    integrator = _as_integrator(integrator)
    x0 = np.asarray(x0, dtype=np.float64)
    _check_inputs(model, M, x0)
    grid, h = _uniform_grid(T, T / 4000 if dt is None else dt)
    law.check_grid(h, T)

    batches = [range(s, min(s + batch_size, n_paths)) for s in range(0, n_paths, batch_size)]

    def run(paths: range) -> tuple[FloatArray, list[Trajectory]]:
        return _simulate_batch(model, M, law, x0, grid, G, H, seed, paths, keep, integrator)

    if len(batches) == 1 or max_workers == 1:
        results = [run(b) for b in batches]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(run, batches))
    costs = np.concatenate([c for c, _ in results])
    samples = [s for _, batch in results for s in batch]
    logger.info(
        "Simulated %d paths in %d batches (dt=%.3g, integrator=%s)", n_paths, len(batches), h, integrator.value
    )
    return EnsembleResult(costs=costs, seed=seed, dt=h, samples=samples)


# ---------------------------------------------------------------------------
# Component simulation
# ---------------------------------------------------------------------------

def simulate_components(
    model: SystemModel,
    gains: GainSchedule,
    x0: GlobalField,
    T: float,
    dt: float | None = None,
    noise: NoisePath | None = None,
    integrator: Integrator | str = Integrator.EULER_MARUYAMA,
) -> ComponentTrajectory:
    """
    Simulate the auxiliary subsystem and every eigen subsystem on their own, each
    under its decomposed feedback and decomposed noise, with the same step rule as
    ``simulate_path``.
    """
    spec = gains.spectral
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (model.d_x, spec.n):
        raise DimensionMismatchError(f"Initial state must be {model.d_x}x{spec.n}, got {x0.shape}")
    if noise is not None:
        grid = noise.grid
        h = float(grid[1] - grid[0])
        parts = decompose_noise(noise, spec)
        dW = np.concatenate([parts.auxiliary[:, None], parts.eigen], axis=1)  # (N, L+1, d_w, n)
    else:
        grid, h = _uniform_grid(T, T / 4000 if dt is None else dt)
        dW = None

    lam = np.concatenate([[0.0], spec.eigenvalues])
    A_sys = model.A[None] + lam[:, None, None] * model.D[None]
    B_sys = model.B[None] + lam[:, None, None] * model.E[None]

    def gain(t: float) -> FloatArray:
        aux, _ = gains.gains_at(t)
        return np.concatenate([aux[None], gains.eigen_gains_at(t)], axis=0)

    def f(t: float, z: FloatArray) -> FloatArray:
        return A_sys @ z - B_sys @ (gain(t) @ z)

    step = _stepper(integrator, dW is not None)
    dx0 = decompose(x0, spec)
    z = np.concatenate([dx0.auxiliary[None], dx0.eigen], axis=0)
    N = grid.shape[0] - 1
    zs = np.empty((N + 1, *z.shape))
    zs[0] = z
    for k in range(N):
        t = float(grid[k])
        z = step(f, t, z, h)
        if dW is not None:
            z = z + model.F @ dW[k]
        _check_finite(z, t + h)
        zs[k + 1] = z
    K = np.stack([gain(float(t)) for t in grid])  # (N+1, L+1, d_u, d_x)
    vs = -np.einsum("klud,kldn->klun", K, zs)
    return ComponentTrajectory(grid=grid, aux_x=zs[:, 0], aux_u=vs[:, 0], eigen_x=zs[:, 1:], eigen_u=vs[:, 1:])


# ---------------------------------------------------------------------------
# Centralized oracle
# ---------------------------------------------------------------------------

class CentralizedLaw(ControlLaw):
    """u = unvec(-K(t) vec(x)) with the n d_u x n d_x gain of the vectorized problem."""

    gain: FloatArray = Field(..., description="(N+1, n d_u, n d_x) or (n d_u, n d_x)")
    grid: FloatArray | None = None
    d_u: int = Field(..., ge=1)
    n: int = Field(..., ge=1)

    def gain_at(self, t: float) -> FloatArray:
        if self.grid is None:
            return self.gain
        return _interpolate(self.grid, self.gain, t)

    def control(self, t: float, x: FloatArray) -> FloatArray:
        K = self.gain_at(t)
        return unvec(-(vec(x) @ K.T), self.d_u, self.n)

    def check_grid(self, dt: float, T: float) -> None:
        if self.grid is not None:
            _check_refinement(float(self.grid[1] - self.grid[0]), dt, "oracle gain")


class OracleResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    law: CentralizedLaw
    trajectory: Trajectory
    cost: CostReport
    optimal_value: float = Field(..., description="vec(x0)^T P(0) vec(x0)")
    dimension: int


def centralized_oracle(
    model: SystemModel,
    M: FloatArray,
    G: FloatArray,
    H: FloatArray,
    x0: GlobalField,
    T: float,
    dt: float | None = None,
    step: float | None = None,
    finite: bool = True,
    max_dim: int = 400,
    tol: ToleranceConfig | None = None,
) -> OracleResult:
    """
    Brute-force LQR on vec(x) with A = I (x) A + M (x) D, B = I (x) B + M (x) E,
    Q = G (x) Q and R = H (x) R, simulated in closed loop over [0, T].
    """
    tol = tol or ToleranceConfig()
    n = M.shape[0]
    dim = n * model.d_x
    if dim > max_dim:
        raise TooLargeError(f"Centralized problem has dimension {dim}, limit is {max_dim}")
    x0 = np.asarray(x0, dtype=np.float64)
    _check_inputs(model, M, x0)
    data = model.vectorized(M, G, H)
    B_T = data.B.T

    if finite:
        sol = solve_riccati_ode(data, T, T / 2000 if step is None else step, tol.pd_tol)
        flat = np.moveaxis(B_T @ sol.P, 0, 1).reshape(B_T.shape[0], -1)
        K = np.moveaxis(_solve_pd(data.R, flat).reshape(B_T.shape[0], sol.P.shape[0], dim), 1, 0)
        law = CentralizedLaw(gain=K, grid=sol.grid, d_u=model.d_u, n=n)
        P0 = sol.P[0]
        Q_T = model.Q_T
    else:
        are = solve_are(data, tol)
        law = CentralizedLaw(gain=_solve_pd(data.R, B_T @ are.P), d_u=model.d_u, n=n)
        P0 = are.P
        Q_T = None
    logger.debug("Centralized oracle solved at dimension %d", dim)
    traj = simulate_deterministic(model, M, law, x0, T, dt)
    cost = evaluate_cost(traj, G, H, model.Q, model.R, Q_T)
    v = vec(x0)
    return OracleResult(law=law, trajectory=traj, cost=cost, optimal_value=float(v @ P0 @ v), dimension=dim)
