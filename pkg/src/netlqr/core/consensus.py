# src/netlqr/core/consensus.py
from __future__ import annotations

import logging

import numpy as np
import scipy.linalg
import scipy.spatial.distance
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator

from netlqr.config.models import ToleranceConfig
from netlqr.core.controller import ControlLaw, GainSchedule, SystemModel, synthesize_infinite
from netlqr.core.coupling import (
    GraphSpec,
    PolynomialCoupling,
    SpectralData,
    build_coupling,
    effective_weights,
    spectral_decompose,
)
from netlqr.core.simulator import Trajectory, simulate_deterministic
from netlqr.exceptions import (
    AsymmetricMatrixError,
    DimensionMismatchError,
    ModelError,
    NotPositiveDefiniteError,
)
from netlqr.types import CouplingKind, FloatArray, GlobalField
from netlqr.utils import as_matrix, asymmetry, min_eigenvalue, psd_sqrt, symmetrize

logger = logging.getLogger(__name__)


class ConsensusSetup(BaseModel):
    """Single-integrator agents x_i' = u_i on a connected weighted graph."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    graph: GraphSpec
    Q: FloatArray
    R: FloatArray
    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)
    _spectral: SpectralData = PrivateAttr()

    @field_validator("Q", "R", mode="before")
    @classmethod
    def _coerce(cls, v: object) -> FloatArray:
        return as_matrix(v)

    @model_validator(mode="after")
    def _check(self) -> ConsensusSetup:
        if self.Q.shape != self.R.shape or self.Q.shape[0] != self.Q.shape[1]:
            raise DimensionMismatchError(f"Q and R must be square of equal size, got {self.Q.shape}, {self.R.shape}")
        tol = self.tolerances
        for name, S in (("Q", self.Q), ("R", self.R)):
            if asymmetry(S) > tol.sym_tol:
                raise AsymmetricMatrixError(f"{name} is not symmetric")
            if min_eigenvalue(S) <= tol.pd_tol * max(1.0, float(np.linalg.norm(S))):
                raise NotPositiveDefiniteError(f"{name} must be positive definite")
        if any(w < 0 for _, _, w in self.graph.edges):
            raise ModelError("Consensus graphs need nonnegative edge weights")
        return self

    def model_post_init(self, __context: object) -> None:
        spec = spectral_decompose(self.laplacian, self.tolerances)
        if spec.rank != self.graph.n - 1:
            raise ModelError(
                f"Graph is not connected: Laplacian has {self.graph.n - spec.rank} zero eigenvalues"
            )
        self._spectral = spec

    @property
    def d_x(self) -> int:
        return int(self.Q.shape[0])

    @property
    def laplacian(self) -> FloatArray:
        return build_coupling(self.graph, CouplingKind.LAPLACIAN)

    @property
    def spectral(self) -> SpectralData:
        return self._spectral

    @property
    def algebraic_connectivity(self) -> float:
        """Smallest nonzero Laplacian eigenvalue."""
        return float(self._spectral.eigenvalues[0]) if self._spectral.rank else 0.0


class ConsensusGain(BaseModel):
    """Pi with Pi R^-1 Pi = Q; the protocol gain is R^-1 Pi."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    Pi: FloatArray
    R: FloatArray

    @property
    def protocol_gain(self) -> FloatArray:
        return scipy.linalg.cho_solve(scipy.linalg.cho_factor(self.R), self.Pi)

    def residual(self, Q: FloatArray) -> float:
        """||Pi R^-1 Pi - Q||_F relative to 1 + ||Q||_F."""
        lhs = self.Pi @ self.protocol_gain
        return float(np.linalg.norm(lhs - Q)) / (1.0 + float(np.linalg.norm(Q)))


def solve_pi(Q: FloatArray, R: FloatArray) -> ConsensusGain:
    """Pi = R^1/2 (R^-1/2 Q R^-1/2)^1/2 R^1/2 from symmetric square roots."""
    Q, R = as_matrix(Q, "Q"), as_matrix(R, "R")
    if Q.shape != R.shape or Q.shape[0] != Q.shape[1]:
        raise DimensionMismatchError(f"Q and R must be square of equal size, got {Q.shape}, {R.shape}")
    if min_eigenvalue(R) <= 0.0:
        raise NotPositiveDefiniteError(f"R must be positive definite (min eigenvalue {min_eigenvalue(R):.3e})")
    R_half = psd_sqrt(R)
    R_half_inv = np.linalg.inv(R_half)
    inner = psd_sqrt(R_half_inv @ Q @ R_half_inv)
    return ConsensusGain(Pi=symmetrize(R_half @ inner @ R_half), R=R)


def consensus_control(setup: ConsensusSetup, gain: ConsensusGain, x: GlobalField) -> GlobalField:
    """u_i = -R^-1 Pi sum_j w_ij (x_i - x_j)."""
    if x.shape[-2:] != (setup.d_x, setup.graph.n):
        raise DimensionMismatchError(f"Expected a {setup.d_x}x{setup.graph.n} field, got {x.shape}")
    return -(gain.protocol_gain @ x) @ setup.laplacian


def disagreement(x: GlobalField) -> float:
    """Largest Euclidean distance between two node states."""
    if x.ndim != 2:
        raise DimensionMismatchError(f"Expected a d x n field, got shape {x.shape}")
    if x.shape[1] < 2:
        return 0.0
    return float(scipy.spatial.distance.pdist(x.T).max())


def consensus_instance(setup: ConsensusSetup) -> tuple[SystemModel, FloatArray, PolynomialCoupling]:
    """A = 0, B = I, D = E = 0 on the Laplacian with G = L^2 and H = I."""
    d = setup.d_x
    model = SystemModel.from_values(A=np.zeros((d, d)), B=np.eye(d), Q=setup.Q, R=setup.R)
    return model, setup.laplacian, PolynomialCoupling(q=[0.0, 0.0, 1.0], r=[1.0])


def framework_gains(setup: ConsensusSetup, max_workers: int | None = None) -> GainSchedule:
    """Stationary decomposed gains of the consensus instance."""
    model, _, coupling = consensus_instance(setup)
    weights = effective_weights(setup.spectral, coupling)
    return synthesize_infinite(model, setup.spectral, weights, max_workers=max_workers, tol=setup.tolerances)


def gain_identity_residual(gains: GainSchedule, gain: ConsensusGain) -> float:
    """max_g ||P^g - lambda^g Pi||_F relative to 1 + ||Pi||_F."""
    if gains.group_riccati is None:
        return 0.0
    scale = 1.0 + float(np.linalg.norm(gain.Pi))
    worst = 0.0
    for lam, P in zip(gains.spectral.group_values, gains.group_riccati):
        worst = max(worst, float(np.linalg.norm(P - lam * gain.Pi)) / scale)
    return worst


class ConsensusLaw(ControlLaw):
    """The neighbor-difference protocol as a network control law."""

    gain: FloatArray
    laplacian: FloatArray

    @classmethod
    def from_setup(cls, setup: ConsensusSetup, gain: ConsensusGain) -> ConsensusLaw:
        return cls(gain=gain.protocol_gain, laplacian=setup.laplacian)

    def control(self, t: float, x: FloatArray) -> FloatArray:
        return -(self.gain @ x) @ self.laplacian


class ConsensusRun(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    trajectory: Trajectory
    disagreement: FloatArray = Field(..., description="Disagreement at every grid point")

    @property
    def average_drift(self) -> float:
        """Largest deviation of the node average from its initial value."""
        avg = self.trajectory.x.mean(axis=2)
        return float(np.max(np.abs(avg - avg[0])))

    @property
    def reduction(self) -> float:
        first = float(self.disagreement[0])
        return float(self.disagreement[-1]) / first if first > 0 else 0.0


def simulate_consensus(
    setup: ConsensusSetup,
    gain: ConsensusGain,
    x0: GlobalField,
    T: float,
    dt: float | None = None,
) -> ConsensusRun:
    model, L, _ = consensus_instance(setup)
    traj = simulate_deterministic(model, L, ConsensusLaw.from_setup(setup, gain), x0, T, dt)
    trace = np.array([disagreement(x) for x in traj.x])
    logger.info("Consensus disagreement %.3e -> %.3e over T=%.3g", trace[0], trace[-1], T)
    return ConsensusRun(trajectory=traj, disagreement=trace)


def convergence_horizon(setup: ConsensusSetup, gain: ConsensusGain) -> float:
    """20 / (lambda_min+ * sigma_min(R^-1 Pi))."""
    sigma = float(scipy.linalg.svdvals(gain.protocol_gain).min())
    return 20.0 / (setup.algebraic_connectivity * sigma)
