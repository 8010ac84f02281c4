# src/netlqr/core/riccati.py
from __future__ import annotations

import logging
import math
from typing import Literal

import numpy as np
import scipy.integrate
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from netlqr.config.models import ToleranceConfig
from netlqr.exceptions import (
    DimensionMismatchError,
    NoConvergenceError,
    NonFiniteBlowupError,
    NotStabilizableError,
    SingularMatrixError,
    StepTooLargeError,
    TimeOutOfRangeError,
)
from netlqr.types import FloatArray
from netlqr.utils import as_matrix, frozen, min_eigenvalue, symmetrize

logger = logging.getLogger(__name__)


class LQRData(BaseModel):
    """One linear-quadratic problem: drift, input, state/control/terminal weights."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    A: FloatArray
    B: FloatArray
    Q: FloatArray
    R: FloatArray
    Q_T: FloatArray | None = None

    @field_validator("A", "B", "Q", "R", "Q_T", mode="before")
    @classmethod
    def _coerce(cls, v: object) -> FloatArray | None:
        return None if v is None else as_matrix(v)

    @model_validator(mode="after")
    def _check_shapes(self) -> LQRData:
        d, m = self.B.shape
        if self.A.shape != (d, d):
            raise DimensionMismatchError(f"A must be {d}x{d} to match B, got {self.A.shape}")
        if self.Q.shape != (d, d):
            raise DimensionMismatchError(f"Q must be {d}x{d}, got {self.Q.shape}")
        if self.R.shape != (m, m):
            raise DimensionMismatchError(f"R must be {m}x{m}, got {self.R.shape}")
        if self.Q_T is not None and self.Q_T.shape != (d, d):
            raise DimensionMismatchError(f"Q_T must be {d}x{d}, got {self.Q_T.shape}")
        return self

    @property
    def dim(self) -> int:
        return int(self.A.shape[0])

    def input_gramian(self) -> FloatArray:
        """B R^-1 B^T."""
        return symmetrize(self.B @ _solve_pd(self.R, self.B.T))

    def residual(self, P: FloatArray) -> FloatArray:
        """A^T P + P A - P B R^-1 B^T P + Q."""
        return self.A.T @ P + P @ self.A - P @ self.input_gramian() @ P + self.Q


def _solve_pd(R: FloatArray, rhs: FloatArray) -> FloatArray:
    try:
        return scipy.linalg.cho_solve(scipy.linalg.cho_factor(R), rhs)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise SingularMatrixError(f"Failed to invert control weight: {e}") from e


# ---------------------------------------------------------------------------
# PBH tests
# ---------------------------------------------------------------------------

def pbh_margin(A: FloatArray, B: FloatArray, rel_tol: float = 1e-8, margin: float = 1e-10) -> float:
    """
    Smallest singular value of [A - sI, B] relative to the scale of [A, B], minus
    ``rel_tol``, over the modes s of A with Re(s) >= -margin. Nonnegative iff (A, B)
    is stabilizable; +inf when A has no such mode.
    """
    d = A.shape[0]
    worst = math.inf
    base = float(np.linalg.norm(np.hstack([A, B]), 2))
    for s in scipy.linalg.eigvals(A):
        if s.real < -margin:
            continue
        pencil = np.hstack([A - s * np.eye(d), B])
        sv = np.linalg.svd(pencil, compute_uv=False)
        scale = max(float(sv[0]), base)
        ratio = float(sv[d - 1] / scale) if scale > 0 else 0.0
        worst = min(worst, ratio - rel_tol)
    return worst


def spectral_abscissa(A: FloatArray) -> float:
    """Largest real part over the eigenvalues of A."""
    return float(np.max(scipy.linalg.eigvals(A).real))


def is_stabilizable(A: FloatArray, B: FloatArray, tol: ToleranceConfig | None = None) -> bool:
    tol = tol or ToleranceConfig()
    return pbh_margin(A, B, tol.pbh_tol, tol.pbh_margin) >= 0


def is_detectable(A: FloatArray, C: FloatArray, tol: ToleranceConfig | None = None) -> bool:
    return is_stabilizable(A.T, C.T, tol)


# ---------------------------------------------------------------------------
# Riccati differential equation
# ---------------------------------------------------------------------------

class RiccatiODESolution(BaseModel):
    """Samples P(t_k) on t_0 = 0 < ... < t_N = T."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    grid: FloatArray
    P: FloatArray = Field(..., description="(N+1, d, d) samples ordered by t")
    step: float = Field(..., gt=0)
    order: int = 4

    @property
    def T(self) -> float:
        return float(self.grid[-1])

    @property
    def initial(self) -> FloatArray:
        return self.P[0]

    def at(self, t: float) -> FloatArray:
        """Linear interpolation between grid samples."""
        return _interpolate(self.grid, self.P, t)

    def integral_trace(self, W: FloatArray) -> float:
        """Trapezoidal integral of tr(P(t) W) over the grid."""
        traces = np.einsum("kij,ji->k", self.P, W)
        return float(scipy.integrate.trapezoid(traces, self.grid))


def _interpolate(grid: FloatArray, samples: FloatArray, t: float) -> FloatArray:
    T = float(grid[-1])
    slack = 1e-9 * max(1.0, T)
    if t < -slack or t > T + slack:
        raise TimeOutOfRangeError(f"t={t:.6g} is outside [0, {T:.6g}]")
    step = float(grid[1] - grid[0]) if grid.shape[0] > 1 else 1.0
    pos = min(max(t, 0.0), T) / step
    k = min(int(math.floor(pos + 1e-9)), grid.shape[0] - 1)
    frac = pos - k
    if k == grid.shape[0] - 1 or abs(frac) <= 1e-9:
        return samples[k]
    return (1.0 - frac) * samples[k] + frac * samples[k + 1]


def solve_riccati_ode(
    data: LQRData,
    T: float,
    step: float | None = None,
    pd_tol: float = 1e-8,
) -> RiccatiODESolution:
    """
    Integrate -dP/dt = A^T P + P A - P B R^-1 B^T P + Q backward from P(T) = Q_T.

    Classical RK4 in reversed time s = T - t with N = ceil(T / step) equal steps.
    Every step is symmetrized and checked for finiteness and positive
    semi-definiteness.
    """
    if T <= 0:
        raise TimeOutOfRangeError(f"Horizon must be positive, got {T}")
    if data.Q_T is None:
        raise DimensionMismatchError("Finite-horizon problems need a terminal weight Q_T")
    step = T / 2000 if step is None else step
    N = max(1, math.ceil(T / step - 1e-9))
    h = T / N
    S = data.input_gramian()
    A, Q = data.A, data.Q

    def rhs(P: FloatArray) -> FloatArray:
        PA = P @ A
        return PA.T + PA - P @ S @ P + Q

    d = data.dim
    out = np.empty((N + 1, d, d))
    out[N] = data.Q_T
    P = np.array(data.Q_T, dtype=np.float64)
    for k in range(N):
        k1 = rhs(P)
        k2 = rhs(P + 0.5 * h * k1)
        k3 = rhs(P + 0.5 * h * k2)
        k4 = rhs(P + h * k3)
        P = symmetrize(P + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
        t = T - (k + 1) * h
        if not np.all(np.isfinite(P)):
            raise NonFiniteBlowupError(f"Riccati solution became non-finite at t={t:.6g} (finite escape time?)")
        _check_psd(P, pd_tol, t)
        out[N - k - 1] = P

    logger.debug("Riccati ODE solved: d=%d, T=%.6g, steps=%d", d, T, N)
    return RiccatiODESolution(grid=frozen(np.linspace(0.0, T, N + 1)), P=frozen(out), step=h)


def _check_psd(P: FloatArray, pd_tol: float, t: float) -> None:
    scale = max(1.0, float(np.linalg.norm(P)))
    try:
        scipy.linalg.cholesky(P + pd_tol * scale * np.eye(P.shape[0]), lower=True)
    except np.linalg.LinAlgError:
        lam = min_eigenvalue(P)
        raise StepTooLargeError(
            f"Riccati sample at t={t:.6g} lost positive semi-definiteness (min eigenvalue {lam:.3e}); reduce the step"
        ) from None


# ---------------------------------------------------------------------------
# Algebraic Riccati equation
# ---------------------------------------------------------------------------

class ARESolution(BaseModel):
    """Stationary Riccati solution with its residual and closed-loop spectrum."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    P: FloatArray
    residual: float
    closed_loop_eigenvalues: FloatArray
    method: Literal["schur", "newton", "zero"] = "schur"
    iterations: int = 0
    stabilizing: bool = True


def closed_loop_eigenvalues(data: LQRData, P: FloatArray) -> FloatArray:
    return scipy.linalg.eigvals(data.A - data.input_gramian() @ P)


def _scaled_residual(data: LQRData, P: FloatArray) -> float:
    return float(np.linalg.norm(data.residual(P))) / (1.0 + float(np.linalg.norm(P)) ** 2)


def _finish(
    data: LQRData, P: FloatArray, method: Literal["schur", "newton", "zero"], iterations: int = 0
) -> ARESolution:
    eig = closed_loop_eigenvalues(data, P)
    return ARESolution(
        P=frozen(P),
        residual=_scaled_residual(data, P),
        closed_loop_eigenvalues=eig,
        method=method,
        iterations=iterations,
        stabilizing=bool(np.all(eig.real < 0)),
    )


def solve_are(data: LQRData, tol: ToleranceConfig | None = None, max_iter: int = 50) -> ARESolution:
    """
    Stabilizing solution of 0 = A^T P + P A - P B R^-1 B^T P + Q.

    Ordered real Schur form of the Hamiltonian gives the stable invariant subspace
    [U1; U2] and P = U2 U1^-1. An ill-conditioned U1 or a residual above tolerance
    hands over to Kleinman-Newton. A zero state weight returns P = 0 when A has no
    mode with Re(s) > pbh_margin; unstable modes still go through the Schur path.
    """
    tol = tol or ToleranceConfig()
    d = data.dim
    if float(np.linalg.norm(data.Q)) == 0.0 and spectral_abscissa(data.A) <= tol.pbh_margin:
        solution = _finish(data, np.zeros((d, d)), "zero")
        if not solution.stabilizing:
            logger.warning("Zero state weight with marginal drift: returning P = 0 (cost-free direction)")
        return solution

    if pbh_margin(data.A, data.B, tol.pbh_tol, tol.pbh_margin) < 0:
        raise NotStabilizableError("(A, B) is not stabilizable: an unstable mode is uncontrollable")

    candidate, cond = _schur_candidate(data, tol)
    if candidate is not None and _scaled_residual(data, candidate) <= tol.are_tol:
        solution = _finish(data, candidate, "schur")
        logger.debug("ARE solved by Schur: d=%d, residual=%.3e", d, solution.residual)
        return solution
    logger.warning("Schur ARE solve not accepted (cond(U1)=%.3e); switching to Kleinman-Newton", cond)

    K0 = _stabilizing_seed(data, candidate, tol)
    return kleinman_newton(data, K0, tol, max_iter)


def _schur_candidate(data: LQRData, tol: ToleranceConfig) -> tuple[FloatArray | None, float]:
    """P = U2 U1^-1 from the stable Schur subspace, or None when U1 is ill-conditioned."""
    d = data.dim
    S = data.input_gramian()
    H = np.block([[data.A, -S], [-data.Q, -data.A.T]])
    try:
        _, Z, sdim = scipy.linalg.schur(H, output="real", sort="lhp")
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NoConvergenceError(f"Failed to compute Hamiltonian Schur form: {e}") from e
    if sdim != d:
        raise NotStabilizableError(
            f"Hamiltonian has {2 * d - 2 * sdim} eigenvalues on the imaginary axis; (A, Q^1/2) is not detectable"
        )
    U1, U2 = Z[:d, :d], Z[d:, :d]
    cond = float(np.linalg.cond(U1))
    if cond > tol.ill_conditioned:
        return None, cond
    return symmetrize(np.linalg.solve(U1.T, U2.T).T), cond


def _stabilizing_seed(data: LQRData, candidate: FloatArray | None, tol: ToleranceConfig) -> FloatArray:
    if candidate is not None:
        K = _solve_pd(data.R, data.B.T @ candidate)
        if np.all(scipy.linalg.eigvals(data.A - data.B @ K).real < 0):
            return K
    # Q + I is detectable and has the same stabilizable pair.
    regularized = data.model_copy(update={"Q": data.Q + np.eye(data.dim)})
    P, _ = _schur_candidate(regularized, tol)
    if P is None:
        raise NoConvergenceError("Failed to find a stabilizing seed gain for Kleinman-Newton")
    return _solve_pd(data.R, data.B.T @ P)


def kleinman_newton(
    data: LQRData, K0: FloatArray, tol: ToleranceConfig | None = None, max_iter: int = 50
) -> ARESolution:
    """Newton iteration on the ARE: one Lyapunov solve per step from a stabilizing K0."""
    tol = tol or ToleranceConfig()
    K = K0
    for it in range(1, max_iter + 1):
        Acl = data.A - data.B @ K
        rhs = -(data.Q + K.T @ data.R @ K)
        try:
            P = symmetrize(scipy.linalg.solve_continuous_lyapunov(Acl.T, rhs))
        except (np.linalg.LinAlgError, ValueError) as e:
            raise NoConvergenceError(f"Failed Lyapunov solve in Newton step {it}: {e}") from e
        K = _solve_pd(data.R, data.B.T @ P)
        res = _scaled_residual(data, P)
        logger.debug("Kleinman-Newton step %d: residual=%.3e", it, res)
        if res <= tol.are_tol:
            return _finish(data, P, "newton", it)
    raise NoConvergenceError(f"Kleinman-Newton did not converge in {max_iter} iterations")


# ---------------------------------------------------------------------------
# Gains
# ---------------------------------------------------------------------------

def gain_from_solution(P: FloatArray, data: LQRData, r_scale: float = 1.0) -> FloatArray:
    """
    (r_scale R)^-1 B^T P for a single P (d x d) or stacked samples (N, d, d).

    ``data.R`` is the unscaled control weight and ``data.B`` the effective input matrix.
    """
    if r_scale <= 0:
        raise SingularMatrixError(f"Control weight scale must be positive, got {r_scale}")
    P = np.asarray(P, dtype=np.float64)
    m, d = data.B.shape[1], data.B.shape[0]
    if P.shape[-2:] != (d, d):
        raise DimensionMismatchError(f"P must be {d}x{d}, got {P.shape[-2:]}")
    BtP = np.matmul(data.B.T, P)  # (..., m, d)
    flat = np.moveaxis(BtP, -2, 0).reshape(m, -1)
    K = _solve_pd(r_scale * data.R, flat)
    return np.moveaxis(K.reshape(m, *BtP.shape[:-2], d), 0, -2)
