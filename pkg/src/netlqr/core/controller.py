# src/netlqr/core/controller.py
from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator

from netlqr.config.models import ToleranceConfig
from netlqr.core.coupling import EffectiveWeights, SpectralData, validate_assumptions
from netlqr.core.decomposition import decompose
from netlqr.core.riccati import (
    LQRData,
    _interpolate,
    gain_from_solution,
    solve_are,
    solve_riccati_ode,
)
from netlqr.exceptions import (
    AssumptionViolationError,
    DimensionMismatchError,
    GridMismatchError,
    MissingInformationError,
    MissingRiccatiSamplesError,
    ModelError,
    NonFiniteBlowupError,
    TimeOutOfRangeError,
)
from netlqr.types import FloatArray, GlobalField, HorizonKind, InformationStructure
from netlqr.utils import as_matrix

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# System model
# ---------------------------------------------------------------------------

class SystemModel(BaseModel):
    """Matrices shared by every subsystem: dx_i = (A x_i + B u_i + D x_i^G + E u_i^G) dt + F dw_i."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    A: FloatArray
    B: FloatArray
    D: FloatArray
    E: FloatArray
    F: FloatArray
    Q: FloatArray
    R: FloatArray
    Q_T: FloatArray

    @field_validator("A", "B", "D", "E", "F", "Q", "R", "Q_T", mode="before")
    @classmethod
    def _coerce(cls, v: object) -> FloatArray:
        return as_matrix(v)

    @model_validator(mode="after")
    def _check_shapes(self) -> SystemModel:
        d_x, d_u = self.B.shape
        expected = {
            "A": (d_x, d_x),
            "D": (d_x, d_x),
            "E": (d_x, d_u),
            "Q": (d_x, d_x),
            "Q_T": (d_x, d_x),
            "R": (d_u, d_u),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise DimensionMismatchError(f"{name} must be {shape[0]}x{shape[1]}, got {getattr(self, name).shape}")
        if self.F.shape[0] != d_x:
            raise DimensionMismatchError(f"F must have {d_x} rows, got {self.F.shape}")
        return self

    @classmethod
    def from_values(
        cls,
        A: Any,
        B: Any,
        Q: Any,
        R: Any,
        D: Any = None,
        E: Any = None,
        F: Any = None,
        Q_T: Any = None,
    ) -> SystemModel:
        """Build from scalars or row lists; D, E, F and Q_T default to zero."""
        A_, B_ = as_matrix(A, "A"), as_matrix(B, "B")
        d_x, d_u = A_.shape[0], B_.shape[1]
        return cls(
            A=A_,
            B=B_,
            D=np.zeros((d_x, d_x)) if D is None else D,
            E=np.zeros((d_x, d_u)) if E is None else E,
            F=np.zeros((d_x, 1)) if F is None else F,
            Q=Q,
            R=R,
            Q_T=np.zeros((d_x, d_x)) if Q_T is None else Q_T,
        )

    @property
    def d_x(self) -> int:
        return int(self.A.shape[0])

    @property
    def d_u(self) -> int:
        return int(self.B.shape[1])

    @property
    def d_w(self) -> int:
        return int(self.F.shape[1])

    @property
    def is_stochastic(self) -> bool:
        return bool(np.any(self.F != 0.0))

    def subsystem(self, lam: float, q: float = 1.0, r: float = 1.0) -> LQRData:
        """LQR data of the subsystem seen along an eigendirection with eigenvalue ``lam``."""
        return LQRData(
            A=self.A + lam * self.D,
            B=self.B + lam * self.E,
            Q=q * self.Q,
            R=r * self.R,
            Q_T=q * self.Q_T,
        )

    def vectorized(self, M: FloatArray, G: FloatArray, H: FloatArray) -> LQRData:
        """Centralized n d_x problem on vec(x) with node-major stacking."""
        n = M.shape[0]
        eye = np.eye(n)
        return LQRData(
            A=np.kron(eye, self.A) + np.kron(M, self.D),
            B=np.kron(eye, self.B) + np.kron(M, self.E),
            Q=np.kron(G, self.Q),
            R=np.kron(H, self.R),
            Q_T=np.kron(G, self.Q_T),
        )


# ---------------------------------------------------------------------------
# Gain schedules
# ---------------------------------------------------------------------------

class GainSchedule(BaseModel):
    """Auxiliary gain plus one gain per distinct eigenvalue group, sampled or stationary."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    horizon: HorizonKind
    spectral: SpectralData
    weights: EffectiveWeights
    grid: FloatArray | None = Field(default=None, description="Shared time grid (finite horizon)")
    aux_gain: FloatArray = Field(..., description="(N+1, d_u, d_x) or (d_u, d_x)")
    group_gains: FloatArray = Field(..., description="(G, N+1, d_u, d_x) or (G, d_u, d_x)")
    aux_riccati: FloatArray | None = None
    group_riccati: FloatArray | None = None
    riccati_solves: int = Field(..., ge=1)

    @property
    def is_finite(self) -> bool:
        return self.horizon is HorizonKind.FINITE

    @property
    def T(self) -> float:
        return float(self.grid[-1]) if self.grid is not None else math.inf

    @property
    def step(self) -> float | None:
        return float(self.grid[1] - self.grid[0]) if self.grid is not None and self.grid.shape[0] > 1 else None

    def gains_at(self, t: float) -> tuple[FloatArray, FloatArray]:
        """(K̆(t), K^g(t) stacked over groups), linearly interpolated on the grid."""
        if not self.is_finite:
            return self.aux_gain, self.group_gains
        assert self.grid is not None
        aux = _interpolate(self.grid, self.aux_gain, t)
        groups = _interpolate(self.grid, np.moveaxis(self.group_gains, 1, 0), t)
        return aux, groups

    def eigen_gains_at(self, t: float) -> FloatArray:
        """(L, d_u, d_x): the group gain repeated for every eigen index."""
        _, groups = self.gains_at(t)
        return groups[self.spectral.group_of]

    def riccati_at(self, t: float) -> tuple[FloatArray, FloatArray]:
        if self.aux_riccati is None or self.group_riccati is None:
            raise MissingRiccatiSamplesError("Gain schedule carries no Riccati samples")
        if not self.is_finite:
            return self.aux_riccati, self.group_riccati
        assert self.grid is not None
        return (
            _interpolate(self.grid, self.aux_riccati, t),
            _interpolate(self.grid, np.moveaxis(self.group_riccati, 1, 0), t),
        )

    def composite_gain(self, t: float) -> FloatArray:
        """The n d_u x n d_x gain of the equivalent centralized feedback on vec(x)."""
        aux, groups = self.gains_at(t)
        spec = self.spectral
        K = np.kron(spec.auxiliary_projector(), aux)
        for g in range(spec.n_distinct):
            K = K + np.kron(spec.group_projector(g), groups[g])
        return K


def _solve_all(fn: Any, problems: list[LQRData], max_workers: int | None) -> list[Any]:
    # Independent solves; map keeps the input order.
    if len(problems) == 1 or max_workers == 1:
        return [fn(p) for p in problems]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(fn, problems))


def _require(report_ok: bool, report: Any, what: str) -> None:
    if not report_ok:
        details = "; ".join(f"{d.assumption} {d.subject}: {d.message or 'failed'}" for d in report.failures())
        raise AssumptionViolationError(f"{what} assumptions violated: {details}")


def synthesize_finite(
    model: SystemModel,
    spec: SpectralData,
    weights: EffectiveWeights,
    T: float,
    step: float | None = None,
    max_workers: int | None = None,
    tol: ToleranceConfig | None = None,
) -> GainSchedule:
    """
    Finite-horizon decomposed gains: one Riccati ODE for the auxiliary subsystem and
    one per distinct nonzero eigenvalue, all on the same grid.
    """
    tol = tol or spec.tolerances
    report = validate_assumptions(model, spec, weights, tol=tol)
    _require(report.finite_ok, report, "Finite-horizon")
    step = T / 2000 if step is None else step

    values = spec.group_values
    problems = [model.subsystem(0.0, weights.q0, weights.r0)]
    problems += [model.subsystem(float(lam), float(weights.q[g]), float(weights.r[g])) for g, lam in enumerate(values)]
    solutions = _solve_all(lambda p: solve_riccati_ode(p, T, step, tol.pd_tol), problems, max_workers)

    aux_gain = gain_from_solution(solutions[0].P, model.subsystem(0.0), weights.r0)
    group_gains = [
        gain_from_solution(sol.P, model.subsystem(float(values[g])), float(weights.r[g]))
        for g, sol in enumerate(solutions[1:])
    ]
    N1 = solutions[0].grid.shape[0]
    logger.info("Synthesized finite-horizon gains with %d Riccati solves (L=%d)", len(problems), spec.rank)
    return GainSchedule(
        horizon=HorizonKind.FINITE,
        spectral=spec,
        weights=weights,
        grid=solutions[0].grid,
        aux_gain=aux_gain,
        group_gains=_stack(group_gains, (0, N1, model.d_u, model.d_x)),
        aux_riccati=solutions[0].P,
        group_riccati=_stack([s.P for s in solutions[1:]], (0, N1, model.d_x, model.d_x)),
        riccati_solves=len(problems),
    )


def synthesize_infinite(
    model: SystemModel,
    spec: SpectralData,
    weights: EffectiveWeights,
    max_workers: int | None = None,
    tol: ToleranceConfig | None = None,
    max_iter: int = 50,
) -> GainSchedule:
    """Stationary decomposed gains from one ARE per distinct group plus the auxiliary ARE."""
    tol = tol or spec.tolerances
    report = validate_assumptions(model, spec, weights, check_stabilizability=True, tol=tol)
    _require(report.infinite_ok, report, "Infinite-horizon")

    values = spec.group_values
    problems = [model.subsystem(0.0, weights.q0, weights.r0)]
    problems += [model.subsystem(float(lam), float(weights.q[g]), float(weights.r[g])) for g, lam in enumerate(values)]
    solutions = _solve_all(lambda p: solve_are(p, tol, max_iter), problems, max_workers)

    aux_gain = gain_from_solution(solutions[0].P, model.subsystem(0.0), weights.r0)
    group_gains = [
        gain_from_solution(sol.P, model.subsystem(float(values[g])), float(weights.r[g]))
        for g, sol in enumerate(solutions[1:])
    ]
    logger.info("Synthesized stationary gains with %d ARE solves (L=%d)", len(problems), spec.rank)
    return GainSchedule(
        horizon=HorizonKind.INFINITE,
        spectral=spec,
        weights=weights,
        aux_gain=aux_gain,
        group_gains=_stack(group_gains, (0, model.d_u, model.d_x)),
        aux_riccati=solutions[0].P,
        group_riccati=_stack([s.P for s in solutions[1:]], (0, model.d_x, model.d_x)),
        riccati_solves=len(problems),
    )


def _stack(items: list[FloatArray], empty_shape: tuple[int, ...]) -> FloatArray:
    return np.stack(items) if items else np.zeros(empty_shape)


# ---------------------------------------------------------------------------
# Closed-loop evaluation
# ---------------------------------------------------------------------------

def control_closed_loop(gains: GainSchedule, x: GlobalField, t: float = 0.0) -> GlobalField:
    """u_i = -K̆ x̆_i - sum_l K^l x_i^l, evaluated through the state decomposition."""
    dx = decompose(x, gains.spectral)
    aux, _ = gains.gains_at(t)
    eigen = gains.eigen_gains_at(t)
    return -aux @ dx.auxiliary - np.einsum("lud,ldn->un", eigen, dx.eigen)


def control_local_feedback(gains: GainSchedule, x: GlobalField, t: float = 0.0) -> GlobalField:
    """Equivalent form u = -K̆ x - sum_g (K^g - K̆) x Pi_g with Pi_g the group projector."""
    aux, groups = gains.gains_at(t)
    u = -aux @ x
    for g in range(gains.spectral.n_distinct):
        u = u - (groups[g] - aux) @ x @ gains.spectral.group_projector(g)
    return u


def mean_field_gains(gains: GainSchedule, t: float = 0.0) -> tuple[FloatArray, FloatArray]:
    """(K̆, K̄) when the coupling has the single nonzero eigenvalue of (1/n) 1 1^T."""
    if gains.spectral.n_distinct != 1:
        raise ModelError(f"Mean-field gains need exactly one eigenvalue group, got {gains.spectral.n_distinct}")
    aux, groups = gains.gains_at(t)
    return aux, groups[0]


# ---------------------------------------------------------------------------
# Information structures
# ---------------------------------------------------------------------------

class InformationPacket(BaseModel, ABC):
    """Data available at one node; enough to rebuild its initial components."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    node: int = Field(..., ge=0)

    @abstractmethod
    def initial_components(self) -> tuple[FloatArray, FloatArray]:
        """(x̆_i(0) of shape (d,), x_i^l(0) stacked as (L, d))."""


class GlobalPacket(InformationPacket):
    structure: Literal[InformationStructure.GLOBAL] = InformationStructure.GLOBAL
    x0: FloatArray | None = None
    eigenvectors: FloatArray | None = None

    def initial_components(self) -> tuple[FloatArray, FloatArray]:
        if self.x0 is None or self.eigenvectors is None:
            raise MissingInformationError(f"Node {self.node}: global packet needs x(0) and all eigenvectors")
        V = self.eigenvectors
        eigen = (self.x0 @ V).T * V[self.node][:, None]
        return self.x0[:, self.node] - eigen.sum(axis=0), eigen


class LocalPacket(InformationPacket):
    structure: Literal[InformationStructure.LOCAL] = InformationStructure.LOCAL
    x_i0: FloatArray | None = None
    eigen_i0: FloatArray | None = None

    def initial_components(self) -> tuple[FloatArray, FloatArray]:
        if self.x_i0 is None or self.eigen_i0 is None:
            raise MissingInformationError(f"Node {self.node}: local packet needs x_i(0) and its eigenstates")
        return self.x_i0 - self.eigen_i0.sum(axis=0), self.eigen_i0


class AggregatePacket(InformationPacket):
    structure: Literal[InformationStructure.AGGREGATE] = InformationStructure.AGGREGATE
    aggregates: FloatArray | None = Field(default=None, description="(L, d): x(0) v^l")
    v_i: FloatArray | None = Field(default=None, description="(L,): v_i^l")
    x_i0: FloatArray | None = None

    def initial_components(self) -> tuple[FloatArray, FloatArray]:
        if self.aggregates is None or self.v_i is None or self.x_i0 is None:
            raise MissingInformationError(f"Node {self.node}: aggregate packet needs x(0)v^l, v_i and x_i(0)")
        eigen = self.aggregates * self.v_i[:, None]
        return self.x_i0 - eigen.sum(axis=0), eigen


def prepare_information(
    structure: InformationStructure,
    x0: GlobalField,
    spec: SpectralData,
) -> list[InformationPacket]:
    """One packet per node carrying exactly what the chosen structure allows it to know."""
    if x0.ndim != 2 or x0.shape[1] != spec.n:
        raise DimensionMismatchError(f"Expected a d x {spec.n} initial state, got shape {x0.shape}")
    structure = InformationStructure(structure)
    V = spec.eigenvectors
    if structure is InformationStructure.GLOBAL:
        return [GlobalPacket(node=i, x0=x0.copy(), eigenvectors=V) for i in range(spec.n)]
    coeff = (x0 @ V).T  # (L, d)
    if structure is InformationStructure.LOCAL:
        return [
            LocalPacket(node=i, x_i0=x0[:, i].copy(), eigen_i0=coeff * V[i][:, None]) for i in range(spec.n)
        ]
    return [AggregatePacket(node=i, aggregates=coeff, v_i=V[i].copy(), x_i0=x0[:, i].copy()) for i in range(spec.n)]


def assemble_initial(packets: list[InformationPacket], spec: SpectralData) -> tuple[FloatArray, FloatArray]:
    """Column-stack each node's reconstruction: x̆(0) (d, n) and x^l(0) (L, d, n)."""
    parts = [p.initial_components() for p in sorted(packets, key=lambda p: p.node)]
    if len(parts) != spec.n:
        raise MissingInformationError(f"Expected {spec.n} packets, got {len(parts)}")
    aux = np.stack([a for a, _ in parts], axis=1)
    eigen = np.stack([e for _, e in parts], axis=2) if spec.rank else np.zeros((0, aux.shape[0], spec.n))
    return aux, eigen


# ---------------------------------------------------------------------------
# Transition matrices
# ---------------------------------------------------------------------------

class TransitionMatrices(BaseModel):
    """Phi(t, 0) of the auxiliary and of each group's closed loop on a fixed grid."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    grid: FloatArray
    aux: FloatArray = Field(..., description="(N+1, d, d)")
    groups: FloatArray = Field(..., description="(G, N+1, d, d)")

    def index(self, t: float) -> int:
        T = float(self.grid[-1])
        slack = 1e-9 * max(1.0, T)
        if t < -slack or t > T + slack:
            raise TimeOutOfRangeError(f"t={t:.6g} is outside [0, {T:.6g}]")
        h = float(self.grid[1] - self.grid[0])
        k = int(round(t / h))
        if abs(t - k * h) > slack:
            raise GridMismatchError(f"t={t:.9g} is not on the transition grid (step {h:.6g})")
        return k


def compute_transitions(
    gains: GainSchedule,
    model: SystemModel,
    T: float | None = None,
    step: float | None = None,
) -> TransitionMatrices:
    """
    Integrate dPhi/dt = A_cl(t) Phi, Phi(0) = I, for the auxiliary closed loop
    A - B K̆(t) and every group closed loop (A + lam D) - (B + lam E) K^g(t).
    """
    T = gains.T if T is None else T
    if not math.isfinite(T):
        raise ModelError("Stationary gains need an explicit horizon for transition matrices")
    step = (gains.step or T / 2000) if step is None else step
    N = max(1, math.ceil(T / step - 1e-9))
    h = T / N
    spec = gains.spectral
    lam = np.concatenate([[0.0], spec.group_values])
    A_sys = model.A[None] + lam[:, None, None] * model.D[None]
    B_sys = model.B[None] + lam[:, None, None] * model.E[None]

    def a_cl(t: float) -> FloatArray:
        aux, groups = gains.gains_at(min(t, T))
        K = np.concatenate([aux[None], groups], axis=0)
        return A_sys - B_sys @ K

    d = model.d_x
    Phi = np.broadcast_to(np.eye(d), (lam.shape[0], d, d)).copy()
    out = np.empty((N + 1, lam.shape[0], d, d))
    out[0] = Phi
    for k in range(N):
        t = k * h
        Am, Ah, A1 = a_cl(t), a_cl(t + 0.5 * h), a_cl(t + h)
        k1 = Am @ Phi
        k2 = Ah @ (Phi + 0.5 * h * k1)
        k3 = Ah @ (Phi + 0.5 * h * k2)
        k4 = A1 @ (Phi + h * k3)
        Phi = Phi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(Phi)):
            raise NonFiniteBlowupError(f"Transition matrix became non-finite at t={t + h:.6g}")
        out[k + 1] = Phi
    return TransitionMatrices(
        grid=np.linspace(0.0, T, N + 1),
        aux=out[:, 0],
        groups=np.moveaxis(out[:, 1:], 1, 0),
    )


def control_open_loop(
    transitions: TransitionMatrices,
    gains: GainSchedule,
    packet: InformationPacket,
) -> FloatArray:
    """u_i(t_k) = -K̆ Phĭ x̆_i(0) - sum_l K^l Phi^l x_i^l(0) on the transition grid, (N+1, d_u)."""
    aux0, eigen0 = packet.initial_components()
    g_of = gains.spectral.group_of
    out = np.empty((transitions.grid.shape[0], gains.aux_gain.shape[-2]))
    for k, t in enumerate(transitions.grid):
        K_aux, K_groups = gains.gains_at(float(t))
        u = -K_aux @ transitions.aux[k] @ aux0
        if g_of.size:
            pred = np.einsum("ldc,lc->ld", transitions.groups[g_of, k], eigen0)
            u = u - np.einsum("lud,ld->u", K_groups[g_of], pred)
        out[k] = u
    return out


def control_mixed(
    transitions: TransitionMatrices,
    gains: GainSchedule,
    packet: InformationPacket,
    x_i: FloatArray,
    t: float,
) -> FloatArray:
    """Live local feedback on x̆_i(t) = x_i(t) - sum_l Phi^l x_i^l(0); eigen parts open loop."""
    _, eigen0 = packet.initial_components()
    k = transitions.index(t)
    g_of = gains.spectral.group_of
    K_aux, K_groups = gains.gains_at(t)
    pred = np.einsum("ldc,lc->ld", transitions.groups[g_of, k], eigen0) if g_of.size else np.zeros((0, x_i.shape[0]))
    aux_live = x_i - pred.sum(axis=0)
    return -K_aux @ aux_live - np.einsum("lud,ld->u", K_groups[g_of], pred)


# ---------------------------------------------------------------------------
# Control laws used by the simulator
# ---------------------------------------------------------------------------

class ControlLaw(BaseModel, ABC):
    """Maps (t, x) to u for a whole network; x may carry leading batch axes."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @abstractmethod
    def control(self, t: float, x: FloatArray) -> FloatArray: ...

    def check_grid(self, dt: float, T: float) -> None:
        """Raise GridMismatchError unless steps of size dt line up with the law's own grid."""
        return None


def _check_refinement(base: float | None, dt: float, what: str) -> None:
    if base is None:
        return
    ratio = base / dt
    if abs(ratio - round(ratio)) > 1e-6 or round(ratio) < 1:
        raise GridMismatchError(f"Simulation step {dt:.6g} does not refine the {what} grid step {base:.6g}")


class ClosedLoopLaw(ControlLaw):
    """State feedback u = -K̆ x Pi_0 - sum_g K^g x Pi_g."""

    gains: GainSchedule
    _aux_proj: FloatArray = PrivateAttr()
    _group_proj: list[FloatArray] = PrivateAttr()

    def model_post_init(self, __context: Any) -> None:
        spec = self.gains.spectral
        self._aux_proj = spec.auxiliary_projector()
        self._group_proj = [spec.group_projector(g) for g in range(spec.n_distinct)]

    def control(self, t: float, x: FloatArray) -> FloatArray:
        aux, groups = self.gains.gains_at(t)
        u = -(aux @ x) @ self._aux_proj
        for g, proj in enumerate(self._group_proj):
            u = u - (groups[g] @ x) @ proj
        return u

    def check_grid(self, dt: float, T: float) -> None:
        if self.gains.is_finite:
            _check_refinement(self.gains.step, dt, "gain")
            if T > self.gains.T * (1 + 1e-9):
                raise TimeOutOfRangeError(f"Simulation horizon {T} exceeds the gain horizon {self.gains.T}")


class OpenLoopLaw(ControlLaw):
    """Precomputed controls from each node's initial components; ignores the live state."""

    gains: GainSchedule
    transitions: TransitionMatrices
    aux0: FloatArray = Field(..., description="(d, n)")
    group0: FloatArray = Field(..., description="(G, d, n) eigen initial parts summed per group")

    @classmethod
    def from_packets(
        cls,
        gains: GainSchedule,
        transitions: TransitionMatrices,
        packets: list[InformationPacket],
    ) -> OpenLoopLaw:
        aux0, eigen0 = assemble_initial(packets, gains.spectral)
        group0 = _group_sum(eigen0, gains.spectral)
        return cls(gains=gains, transitions=transitions, aux0=aux0, group0=group0)

    def predicted(self, k: int) -> tuple[FloatArray, FloatArray]:
        return self.transitions.aux[k] @ self.aux0, self.transitions.groups[:, k] @ self.group0

    def control(self, t: float, x: FloatArray) -> FloatArray:
        k = self.transitions.index(t)
        aux_x, group_x = self.predicted(k)
        K_aux, K_groups = self.gains.gains_at(t)
        u = -K_aux @ aux_x - np.einsum("gud,gdn->un", K_groups, group_x)
        return np.broadcast_to(u, (*x.shape[:-2], *u.shape))

    def check_grid(self, dt: float, T: float) -> None:
        h = float(self.transitions.grid[1] - self.transitions.grid[0])
        ratio = dt / h
        if abs(ratio - round(ratio)) > 1e-6 or round(ratio) < 1:
            raise GridMismatchError(f"Transition step {h:.6g} does not divide the simulation step {dt:.6g}")
        if T > float(self.transitions.grid[-1]) * (1 + 1e-9):
            raise TimeOutOfRangeError(f"Simulation horizon {T} exceeds the transition horizon")


class MixedLaw(OpenLoopLaw):
    """Open-loop eigen parts with live feedback on the local auxiliary state."""

    def control(self, t: float, x: FloatArray) -> FloatArray:
        k = self.transitions.index(t)
        _, group_x = self.predicted(k)
        K_aux, K_groups = self.gains.gains_at(t)
        aux_live = x - group_x.sum(axis=0)
        return -(K_aux @ aux_live) - np.einsum("gud,gdn->un", K_groups, group_x)


def _group_sum(eigen: FloatArray, spec: SpectralData) -> FloatArray:
    if spec.n_distinct == 0:
        return np.zeros((0, *eigen.shape[1:]))
    return np.stack([eigen[members].sum(axis=0) for members in spec.groups])


def build_law(
    kind: str,
    gains: GainSchedule,
    model: SystemModel,
    x0: GlobalField,
    structure: InformationStructure = InformationStructure.LOCAL,
    dt: float | None = None,
) -> ControlLaw:
    """
    Closed, open or mixed law for the given gains. Open and mixed laws use transition
    matrices at half the simulation step so RK4 stage times fall on their grid.
    """
    if kind == "closed":
        return ClosedLoopLaw(gains=gains)
    if kind not in ("open", "mixed"):
        raise ModelError(f"Unknown control law '{kind}'")
    if not gains.is_finite:
        raise ModelError("Open-loop and mixed laws need finite-horizon gains")
    packets = prepare_information(structure, x0, gains.spectral)
    sim_dt = dt if dt is not None else (gains.step or gains.T / 2000)
    transitions = compute_transitions(gains, model, gains.T, sim_dt / 2.0)
    law_cls = OpenLoopLaw if kind == "open" else MixedLaw
    return law_cls.from_packets(gains, transitions, packets)
