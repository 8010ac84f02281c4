# src/netlqr/core/coupling.py
from __future__ import annotations

import logging
from collections.abc import Sequence
from typing import TYPE_CHECKING, Annotated, Literal, Union

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from netlqr.config.models import ToleranceConfig
from netlqr.core.riccati import pbh_margin, spectral_abscissa
from netlqr.exceptions import (
    AsymmetricMatrixError,
    DimensionMismatchError,
    IndexOutOfRangeError,
    ModelError,
    SpectralRadiusError,
)
from netlqr.types import CouplingKind, FloatArray, SpectralFunctionName
from netlqr.utils import as_matrix, asymmetry, frozen, min_eigenvalue, psd_sqrt, symmetrize

if TYPE_CHECKING:
    from netlqr.core.controller import SystemModel

logger = logging.getLogger(__name__)

# Components below this magnitude are skipped when fixing eigenvector signs.
_SIGN_TOL = 1e-10


# ---------------------------------------------------------------------------
# Graphs and coupling matrices
# ---------------------------------------------------------------------------

class GraphSpec(BaseModel):
    """Undirected weighted graph on nodes 1..n; self-loops allowed."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=1, description="Number of nodes")
    edges: list[tuple[int, int, float]] = Field(default_factory=list, description="(i, j, weight), 1-based")

    @model_validator(mode="after")
    def _check_indices(self) -> GraphSpec:
        for i, j, _ in self.edges:
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise IndexOutOfRangeError(f"Edge ({i}, {j}) references a node outside 1..{self.n}")
        return self

    @classmethod
    def ring4(cls, a: float, b: float) -> GraphSpec:
        """Four-node cycle with weights a on 1-2, 2-3 and b on 1-4, 3-4."""
        return cls(n=4, edges=[(1, 2, a), (2, 3, a), (1, 4, b), (3, 4, b)])

    @classmethod
    def complete(cls, n: int, weight: float | None = None, self_loops: bool = True) -> GraphSpec:
        w = 1.0 / n if weight is None else weight
        edges = [(i, j, w) for i in range(1, n + 1) for j in range(i, n + 1) if self_loops or i != j]
        return cls(n=n, edges=edges)

    @classmethod
    def path(cls, n: int, weight: float = 1.0) -> GraphSpec:
        return cls(n=n, edges=[(i, i + 1, weight) for i in range(1, n)])

    @classmethod
    def from_adjacency(cls, W: FloatArray, sym_tol: float = 1e-10) -> GraphSpec:
        W = np.asarray(W, dtype=np.float64)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise DimensionMismatchError(f"Adjacency must be square, got shape {W.shape}")
        if asymmetry(W) > sym_tol:
            raise AsymmetricMatrixError("Adjacency matrix is not symmetric")
        n = W.shape[0]
        edges = [(i + 1, j + 1, float(W[i, j])) for i in range(n) for j in range(i, n) if W[i, j] != 0.0]
        return cls(n=n, edges=edges)

    def adjacency(self) -> FloatArray:
        """Symmetric weighted adjacency W; a repeated edge overwrites the earlier weight."""
        W = np.zeros((self.n, self.n))
        for i, j, w in self.edges:
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise IndexOutOfRangeError(f"Edge ({i}, {j}) references a node outside 1..{self.n}")
            W[i - 1, j - 1] = w
            W[j - 1, i - 1] = w
        return frozen(W)


class CouplingSpec(BaseModel):
    """Which matrix of the graph couples the subsystems."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    kind: CouplingKind = CouplingKind.ADJACENCY
    matrix: FloatArray | None = None

    @field_validator("matrix", mode="before")
    @classmethod
    def _coerce(cls, v: object) -> FloatArray | None:
        return None if v is None else as_matrix(v, "custom coupling")


def build_coupling(
    graph: GraphSpec,
    kind: CouplingSpec | CouplingKind | str = CouplingKind.ADJACENCY,
    sym_tol: float = 1e-10,
) -> FloatArray:
    """Return W, the Laplacian diag(W1) - W, or a custom symmetric matrix."""
    spec = kind if isinstance(kind, CouplingSpec) else CouplingSpec(kind=CouplingKind(kind))
    W = graph.adjacency()
    if spec.kind is CouplingKind.ADJACENCY:
        return W
    if spec.kind is CouplingKind.LAPLACIAN:
        return frozen(np.diag(W.sum(axis=1)) - W)
    if spec.matrix is None:
        raise ModelError("Custom coupling requires a matrix")
    M = spec.matrix
    if M.shape != (graph.n, graph.n):
        raise DimensionMismatchError(f"Custom coupling must be {graph.n}x{graph.n}, got {M.shape}")
    if asymmetry(M) > sym_tol:
        raise AsymmetricMatrixError(f"Custom coupling is not symmetric (relative skew {asymmetry(M):.3e})")
    return M


def kronecker_expand(M: FloatArray, c: int) -> FloatArray:
    """M kron (1/c) 1 1^T: every node becomes a c-clique of averaged copies."""
    if c < 1:
        raise ModelError(f"Expansion factor must be positive, got {c}")
    return frozen(np.kron(M, np.full((c, c), 1.0 / c)))


def network_field(x: FloatArray, M: FloatArray) -> FloatArray:
    """Locally perceived field: column i is sum_j m_ij x_j."""
    if x.shape[-1] != M.shape[0]:
        raise DimensionMismatchError(f"Field has {x.shape[-1]} columns, coupling is {M.shape[0]}x{M.shape[0]}")
    return x @ M


# ---------------------------------------------------------------------------
# Spectral data
# ---------------------------------------------------------------------------

class SpectralData(BaseModel):
    """Nonzero eigenpairs of a symmetric coupling matrix grouped by equal eigenvalue."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n: int = Field(..., ge=1)
    eigenvalues: FloatArray = Field(..., description="Retained eigenvalues, ascending")
    eigenvectors: FloatArray = Field(..., description="n x L, unit columns")
    groups: list[list[int]] = Field(default_factory=list, description="0-based eigen indices per distinct value")
    norm: float = Field(default=0.0, ge=0, description="Spectral norm of M")
    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)

    @property
    def rank(self) -> int:
        return int(self.eigenvalues.shape[0])

    @property
    def n_distinct(self) -> int:
        return len(self.groups)

    @property
    def group_values(self) -> FloatArray:
        return np.array([float(np.mean(self.eigenvalues[g])) for g in self.groups])

    @property
    def group_of(self) -> FloatArray:
        """Group index for every eigen index."""
        out = np.empty(self.rank, dtype=np.int64)
        for g, members in enumerate(self.groups):
            out[members] = g
        return out

    def eigenvector(self, ell: int) -> FloatArray:
        return self.eigenvectors[:, ell]

    def projector(self, ell: int) -> FloatArray:
        v = self.eigenvectors[:, ell]
        return np.outer(v, v)

    def group_projector(self, g: int) -> FloatArray:
        V = self.eigenvectors[:, self.groups[g]]
        return V @ V.T

    def auxiliary_projector(self) -> FloatArray:
        V = self.eigenvectors
        return np.eye(self.n) - V @ V.T

    def reconstruct(self) -> FloatArray:
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.T

    def same_as(self, other: SpectralData) -> bool:
        if other is self:
            return True
        return (
            self.n == other.n
            and self.rank == other.rank
            and self.groups == other.groups
            and np.array_equal(self.eigenvalues, other.eigenvalues)
            and np.array_equal(self.eigenvectors, other.eigenvectors)
        )


def spectral_decompose(M: FloatArray, tol: ToleranceConfig | None = None) -> SpectralData:
    """
    Eigendecompose a symmetric coupling and keep the eigenvalues above the rank threshold.

    Eigenvalues come back ascending and are grouped by single linkage with gap
    ``group_tol``. Each eigenvector is signed so that its first nonzero component is
    positive; inside a repeated group the basis is the one returned by ``eigh``.
    """
    tol = tol or ToleranceConfig()
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatchError(f"Coupling must be square, got shape {M.shape}")
    if asymmetry(M) > tol.sym_tol:
        raise AsymmetricMatrixError(f"Coupling is not symmetric (relative skew {asymmetry(M):.3e})")
    n = M.shape[0]
    try:
        w, V = scipy.linalg.eigh(symmetrize(M))
    except (np.linalg.LinAlgError, ValueError) as e:
        raise ModelError(f"Failed to eigendecompose coupling: {e}") from e

    norm = float(np.max(np.abs(w))) if n else 0.0
    keep = np.abs(w) > tol.rank_tol * norm if norm > 0 else np.zeros(n, dtype=bool)
    w, V = w[keep], V[:, keep]

    for ell in range(V.shape[1]):
        lead = np.flatnonzero(np.abs(V[:, ell]) > _SIGN_TOL)
        if lead.size and V[lead[0], ell] < 0:
            V[:, ell] = -V[:, ell]

    groups: list[list[int]] = []
    for ell in range(w.shape[0]):
        if groups and w[ell] - w[ell - 1] <= tol.group_tol:
            groups[-1].append(ell)
        else:
            groups.append([ell])

    for members in groups:
        spread = float(w[members[-1]] - w[members[0]])
        if spread > tol.group_tol:
            logger.warning("Eigenvalue group %s spans %.3e, wider than group_tol", members, spread)

    spec = SpectralData(
        n=n,
        eigenvalues=frozen(w),
        eigenvectors=frozen(V),
        groups=groups,
        norm=norm,
        tolerances=tol,
    )
    residual = float(np.linalg.norm(M - spec.reconstruct()))
    if residual > tol.rank_tol * max(float(np.linalg.norm(M)), 1e-300) and norm > 0:
        logger.warning("Spectral reconstruction residual %.3e exceeds rank tolerance", residual)
    logger.debug("Spectral data: n=%d, L=%d, L_dist=%d", n, spec.rank, spec.n_distinct)
    return spec


# ---------------------------------------------------------------------------
# Cost coupling and effective weights
# ---------------------------------------------------------------------------

def horner(coeffs: Sequence[float], s: float) -> float:
    """Evaluate sum_k c_k s^k by Horner's rule."""
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * s + c
    return acc


def horner_matrix(coeffs: Sequence[float], M: FloatArray) -> FloatArray:
    eye = np.eye(M.shape[0])
    acc = coeffs[-1] * eye
    for c in reversed(coeffs[:-1]):
        acc = acc @ M + c * eye
    return symmetrize(acc)


class NamedFunction(BaseModel):
    """Closed-form limit of a power series in the coupling."""

    model_config = ConfigDict(frozen=True)

    name: SpectralFunctionName
    gamma: float

    def __call__(self, s: float) -> float:
        if self.name == "exp":
            return float(np.exp(self.gamma * s))
        return 1.0 / (1.0 - self.gamma * s)

    def of_matrix(self, M: FloatArray) -> FloatArray:
        if self.name == "exp":
            return symmetrize(scipy.linalg.expm(self.gamma * M))
        return symmetrize(np.linalg.inv(np.eye(M.shape[0]) - self.gamma * M))

    def check_radius(self, radius: float) -> None:
        if self.name == "inverse" and abs(self.gamma) * radius >= 1.0:
            raise SpectralRadiusError(
                f"inverse({self.gamma}) needs spectral radius < {1 / abs(self.gamma):.6g}, got {radius:.6g}"
            )


class PolynomialCoupling(BaseModel):
    """G = sum_k q_k M^k and H = sum_k r_k M^k."""

    model_config = ConfigDict(frozen=True)

    mode: Literal["polynomial"] = "polynomial"
    q: list[float] = Field(..., min_length=1)
    r: list[float] = Field(default_factory=lambda: [1.0], min_length=1)

    def state_weight(self, s: float) -> float:
        return horner(self.q, s)

    def control_weight(self, s: float) -> float:
        return horner(self.r, s)

    def check_radius(self, radius: float) -> None:
        return None

    def matrices(self, M: FloatArray) -> tuple[FloatArray, FloatArray]:
        return horner_matrix(self.q, M), horner_matrix(self.r, M)


class SpectralFunctionCoupling(BaseModel):
    """G = f_G(M) and H = f_H(M) for named analytic functions."""

    model_config = ConfigDict(frozen=True)

    mode: Literal["spectral"] = "spectral"
    f_G: NamedFunction
    f_H: NamedFunction

    def state_weight(self, s: float) -> float:
        return self.f_G(s)

    def control_weight(self, s: float) -> float:
        return self.f_H(s)

    def check_radius(self, radius: float) -> None:
        self.f_G.check_radius(radius)
        self.f_H.check_radius(radius)

    def matrices(self, M: FloatArray) -> tuple[FloatArray, FloatArray]:
        radius = float(np.max(np.abs(scipy.linalg.eigvalsh(symmetrize(M))))) if M.size else 0.0
        self.check_radius(radius)
        return self.f_G.of_matrix(M), self.f_H.of_matrix(M)


CostCoupling = Annotated[Union[PolynomialCoupling, SpectralFunctionCoupling], Field(discriminator="mode")]


def weight_matrices(
    coupling: PolynomialCoupling | SpectralFunctionCoupling, M: FloatArray
) -> tuple[FloatArray, FloatArray]:
    """Full n x n cost coupling matrices (G, H)."""
    return coupling.matrices(np.asarray(M, dtype=np.float64))


class EffectiveWeights(BaseModel):
    """Scalar weights of the auxiliary subsystem and of each distinct eigenvalue group."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    q0: float
    r0: float
    q: FloatArray = Field(..., description="q^g per distinct group")
    r: FloatArray = Field(..., description="r^g per distinct group")

    def for_eigen(self, spec: SpectralData) -> tuple[FloatArray, FloatArray]:
        """Weights expanded to one entry per eigen index."""
        g = spec.group_of
        return self.q[g], self.r[g]


def effective_weights(
    spec: SpectralData,
    coupling: PolynomialCoupling | SpectralFunctionCoupling,
) -> EffectiveWeights:
    coupling.check_radius(spec.norm)
    values = spec.group_values
    return EffectiveWeights(
        q0=coupling.state_weight(0.0),
        r0=coupling.control_weight(0.0),
        q=frozen(np.array([coupling.state_weight(s) for s in values])),
        r=frozen(np.array([coupling.control_weight(s) for s in values])),
    )


# ---------------------------------------------------------------------------
# Assumptions
# ---------------------------------------------------------------------------

class Diagnostic(BaseModel):
    assumption: Literal["definiteness", "weights", "auxiliary", "eigen"]
    subject: str
    ok: bool
    margin: float | None = None
    message: str = ""


class AssumptionReport(BaseModel):
    structural_ok: bool = True
    definite_ok: bool
    weights_ok: bool
    auxiliary_ok: bool | None = None
    eigen_ok: bool | None = None
    diagnostics: list[Diagnostic] = Field(default_factory=list)

    @property
    def finite_ok(self) -> bool:
        return self.structural_ok and self.definite_ok and self.weights_ok

    @property
    def infinite_ok(self) -> bool:
        return self.finite_ok and bool(self.auxiliary_ok) and bool(self.eigen_ok)

    def failures(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if not d.ok]


def _stabilizability_checks(
    label: Literal["auxiliary", "eigen"],
    subject: str,
    A: FloatArray,
    B: FloatArray,
    q: float,
    Q_half: FloatArray,
    tol: ToleranceConfig,
) -> list[Diagnostic]:
    stab = pbh_margin(A, B, tol.pbh_tol, tol.pbh_margin)
    out = [Diagnostic(assumption=label, subject=f"{subject} stabilizable", ok=stab >= 0, margin=stab)]
    if abs(q) <= tol.pd_tol:
        abscissa = spectral_abscissa(A)
        waived = abscissa <= tol.pbh_margin
        out.append(
            Diagnostic(
                assumption=label,
                subject=f"{subject} detectable",
                ok=waived,
                margin=None if waived else -abscissa,
                message=(
                    "zero state weight; detectability waived"
                    if waived
                    else f"zero state weight leaves an unstable mode unobserved (Re = {abscissa:.3e})"
                ),
            )
        )
        return out
    C = np.sqrt(max(q, 0.0)) * Q_half
    det = pbh_margin(A.T, C.T, tol.pbh_tol, tol.pbh_margin)
    out.append(Diagnostic(assumption=label, subject=f"{subject} detectable", ok=det >= 0, margin=det))
    return out


def validate_assumptions(
    model: SystemModel,
    spec: SpectralData,
    weights: EffectiveWeights,
    check_stabilizability: bool = False,
    tol: ToleranceConfig | None = None,
) -> AssumptionReport:
    """
    Check definiteness of Q, Q_T and R, the signs of the effective weights and, on request,
    the PBH stabilizability and detectability of every subsystem.
    """
    tol = tol or spec.tolerances
    if weights.q.shape[0] != spec.n_distinct or weights.r.shape[0] != spec.n_distinct:
        raise DimensionMismatchError(
            f"Weights cover {weights.q.shape[0]} groups, spectral data has {spec.n_distinct}"
        )
    diags: list[Diagnostic] = []

    for name, S, strict in (("Q", model.Q, False), ("Q_T", model.Q_T, False), ("R", model.R, True)):
        scale = max(1.0, float(np.linalg.norm(S)))
        sym = asymmetry(S) <= tol.sym_tol
        lam = min_eigenvalue(S)
        ok = sym and (lam > tol.pd_tol * scale if strict else lam >= -tol.pd_tol * scale)
        kind = "positive definite" if strict else "positive semi-definite"
        diags.append(
            Diagnostic(
                assumption="definiteness",
                subject=name,
                ok=ok,
                margin=lam,
                message="" if ok else f"{name} is not symmetric {kind}",
            )
        )

    def _weight_check(subject: str, q: float, r: float) -> None:
        ok = q >= -tol.pd_tol and r > tol.pd_tol
        diags.append(
            Diagnostic(
                assumption="weights",
                subject=subject,
                ok=ok,
                margin=min(q, r),
                message="" if ok else f"q={q:.6g}, r={r:.6g} (need q >= 0, r > 0)",
            )
        )

    _weight_check("auxiliary", weights.q0, weights.r0)
    for g, lam in enumerate(spec.group_values):
        _weight_check(f"group {g} (lambda={lam:.6g})", float(weights.q[g]), float(weights.r[g]))

    definite = all(d.ok for d in diags if d.assumption == "definiteness")
    weights_ok = all(d.ok for d in diags if d.assumption == "weights")
    report = AssumptionReport(definite_ok=definite, weights_ok=weights_ok, diagnostics=diags)
    if not check_stabilizability:
        return report

    try:
        Q_half = psd_sqrt(model.Q)
    except ModelError:
        Q_half = np.zeros_like(model.Q)
    diags.extend(_stabilizability_checks("auxiliary", "auxiliary", model.A, model.B, weights.q0, Q_half, tol))
    for g, lam in enumerate(spec.group_values):
        diags.extend(
            _stabilizability_checks(
                "eigen",
                f"group {g} (lambda={lam:.6g})",
                model.A + lam * model.D,
                model.B + lam * model.E,
                float(weights.q[g]),
                Q_half,
                tol,
            )
        )
    for d in diags:
        if d.message and d.ok:
            logger.warning("%s %s: %s", d.assumption, d.subject, d.message)
    return report.model_copy(
        update={
            "auxiliary_ok": all(d.ok for d in diags if d.assumption == "auxiliary"),
            "eigen_ok": all(d.ok for d in diags if d.assumption == "eigen"),
            "diagnostics": diags,
        }
    )
