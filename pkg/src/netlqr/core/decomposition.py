# src/netlqr/core/decomposition.py
from __future__ import annotations

import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from netlqr.core.coupling import EffectiveWeights, SpectralData
from netlqr.exceptions import DimensionMismatchError, MismatchedSpectralDataError
from netlqr.types import FloatArray, GlobalField
from netlqr.utils import relative_residual

logger = logging.getLogger(__name__)

PROPERTY_TOL = 1e-9


class DecomposedField(BaseModel):
    """Eigen components x^l = x v^l v^l^T and the auxiliary remainder of a d x n field."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    eigen: FloatArray = Field(..., description="(L, d, n) eigen components")
    auxiliary: FloatArray = Field(..., description="(d, n) auxiliary component")
    spectral: SpectralData

    @property
    def d(self) -> int:
        return int(self.auxiliary.shape[0])

    @property
    def n(self) -> int:
        return int(self.auxiliary.shape[1])

    def group_sum(self, g: int) -> FloatArray:
        return self.eigen[self.spectral.groups[g]].sum(axis=0)

    def node(self, i: int) -> tuple[FloatArray, FloatArray]:
        """(x̆_i, [x_i^1 .. x_i^L]) for node i (0-based)."""
        return self.auxiliary[:, i], self.eigen[:, :, i]


def project_eigen(x: GlobalField, v: FloatArray, orth_tol: float = 1e-10) -> FloatArray:
    """x v v^T."""
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if x.shape[-1] != v.shape[0]:
        raise DimensionMismatchError(f"Field has {x.shape[-1]} columns, eigenvector has {v.shape[0]} entries")
    if abs(float(v @ v) - 1.0) > orth_tol:
        raise DimensionMismatchError(f"Eigenvector is not unit length (|v|^2 = {float(v @ v):.12g})")
    return np.outer(x @ v, v) if x.ndim == 2 else np.einsum("...d,n->...dn", x @ v, v)


def decompose(x: GlobalField, spec: SpectralData) -> DecomposedField:
    if x.ndim != 2 or x.shape[1] != spec.n:
        raise DimensionMismatchError(f"Expected a d x {spec.n} field, got shape {x.shape}")
    V = spec.eigenvectors
    coeff = x @ V  # (d, L): column l is x v^l
    eigen = np.einsum("dl,nl->ldn", coeff, V)
    auxiliary = x - eigen.sum(axis=0)
    return DecomposedField(eigen=eigen, auxiliary=auxiliary, spectral=spec)


def recompose(df: DecomposedField) -> GlobalField:
    return df.auxiliary + df.eigen.sum(axis=0)


def weighted_inner(x: GlobalField, y: GlobalField, P: FloatArray) -> float:
    """<x, y>_P = sum_ij p_ij x_i^T y_j."""
    if x.shape != y.shape or P.shape != (x.shape[1], x.shape[1]):
        raise DimensionMismatchError(f"Incompatible shapes x {x.shape}, y {y.shape}, P {P.shape}")
    return float(np.einsum("di,ij,dj->", x, P, y))


def instantaneous_cost(
    x: GlobalField,
    u: GlobalField,
    G: FloatArray,
    H: FloatArray,
    Q: FloatArray,
    R: FloatArray,
) -> float:
    """<x, Qx>_G + <u, Ru>_H."""
    if Q.shape != (x.shape[0], x.shape[0]) or R.shape != (u.shape[0], u.shape[0]):
        raise DimensionMismatchError("Weight matrices do not match field dimensions")
    return weighted_inner(x, Q @ x, G) + weighted_inner(u, R @ u, H)


def _check_same(dx: DecomposedField, du: DecomposedField, weights: EffectiveWeights) -> None:
    if not dx.spectral.same_as(du.spectral):
        raise MismatchedSpectralDataError("State and control decompositions use different spectral data")
    if weights.q.shape[0] != dx.spectral.n_distinct:
        raise MismatchedSpectralDataError(
            f"Weights cover {weights.q.shape[0]} groups, spectral data has {dx.spectral.n_distinct}"
        )


def cost_breakdown(
    dx: DecomposedField,
    du: DecomposedField,
    weights: EffectiveWeights,
    Q: FloatArray,
    R: FloatArray,
) -> tuple[FloatArray, FloatArray]:
    """
    Per-node integrands: auxiliary (n,) with q0 x̆_i^T Q x̆_i + r0 ŭ_i^T R ŭ_i, and
    eigen (L, n) with q^l x_i^l^T Q x_i^l + r^l u_i^l^T R u_i^l.
    """
    _check_same(dx, du, weights)
    q, r = weights.for_eigen(dx.spectral)
    aux = weights.q0 * np.einsum("di,de,ei->i", dx.auxiliary, Q, dx.auxiliary)
    aux = aux + weights.r0 * np.einsum("di,de,ei->i", du.auxiliary, R, du.auxiliary)
    eig = q[:, None] * np.einsum("ldi,de,lei->li", dx.eigen, Q, dx.eigen)
    eig = eig + r[:, None] * np.einsum("ldi,de,lei->li", du.eigen, R, du.eigen)
    return aux, eig


def decomposed_cost(
    dx: DecomposedField,
    du: DecomposedField,
    weights: EffectiveWeights,
    Q: FloatArray,
    R: FloatArray,
) -> float:
    aux, eig = cost_breakdown(dx, du, weights, Q, R)
    return float(aux.sum() + eig.sum())


# ---------------------------------------------------------------------------
# Property suite
# ---------------------------------------------------------------------------

class PropertyReport(BaseModel):
    residuals: dict[str, float] = Field(default_factory=dict)
    tol: float = PROPERTY_TOL

    @property
    def passed(self) -> dict[str, bool]:
        return {k: v <= self.tol for k, v in self.residuals.items()}

    @property
    def all_passed(self) -> bool:
        return all(self.passed.values())


def _rayleigh_weights(spec: SpectralData, W: FloatArray) -> tuple[float, FloatArray]:
    """Recover the scalar weights of W from its action on the eigen and auxiliary subspaces."""
    per_group = np.array(
        [float(spec.eigenvectors[:, g[0]] @ W @ spec.eigenvectors[:, g[0]]) for g in spec.groups]
    )
    Pi0 = spec.auxiliary_projector()
    dim0 = float(np.trace(Pi0))
    w0 = float(np.trace(Pi0 @ W)) / dim0 if dim0 > 0.5 else 0.0
    return w0, per_group


def check_properties(
    x: GlobalField,
    u: GlobalField,
    spec: SpectralData,
    G: FloatArray,
    H: FloatArray,
    M: FloatArray,
    Q: FloatArray | None = None,
    weights: EffectiveWeights | None = None,
    max_power: int = 3,
) -> PropertyReport:
    """
    Evaluate the algebraic identities of the decomposition as relative residuals.

    Weights default to the Rayleigh quotients of G and H on each subspace and Q to the
    identity.
    """
    if weights is None:
        q0, qg = _rayleigh_weights(spec, G)
        r0, rg = _rayleigh_weights(spec, H)
    else:
        q0, qg, r0, rg = weights.q0, weights.q, weights.r0, weights.r
    Q = np.eye(x.shape[0]) if Q is None else Q
    dx, du = decompose(x, spec), decompose(u, spec)
    lam = spec.eigenvalues
    g_of = spec.group_of
    res: dict[str, float] = {}

    def worst(name: str, value: float) -> None:
        res[name] = max(res.get(name, 0.0), value)

    for ell in range(spec.rank):
        xl, ul = dx.eigen[ell], du.eigen[ell]
        worst("eigen_shift", relative_residual(xl @ M, lam[ell] * xl))
        Mk = np.eye(spec.n)
        for k in range(1, max_power + 1):
            Mk = Mk @ M
            worst("eigen_power", relative_residual(xl @ Mk, lam[ell] ** k * xl))
        worst("eigen_weight", relative_residual(xl @ G, qg[g_of[ell]] * xl))
        worst("eigen_weight", relative_residual(ul @ H, rg[g_of[ell]] * ul))
        for other in range(spec.rank):
            if other != ell:
                cross = float(np.einsum("di,de,ei->", xl, Q, dx.eigen[other]))
                scale = 1.0 + float(np.linalg.norm(xl)) * float(np.linalg.norm(dx.eigen[other]))
                worst("cross_orthogonal", abs(cross) / scale)
        lhs = float(np.einsum("di,de,ei->", x, Q, xl))
        rhs = float(np.einsum("di,de,ei->", xl, Q, xl))
        worst("cross_projection", abs(lhs - rhs) / (1.0 + max(abs(lhs), abs(rhs))))

    xa, ua = dx.auxiliary, du.auxiliary
    res["aux_kernel"] = relative_residual(xa @ M, np.zeros_like(xa))
    Mk = np.eye(spec.n)
    res["aux_power"] = 0.0
    for k in range(1, max_power + 1):
        Mk = Mk @ M
        worst("aux_power", relative_residual(xa @ Mk, np.zeros_like(xa)))
    res["aux_weight"] = max(relative_residual(xa @ G, q0 * xa), relative_residual(ua @ H, r0 * ua))
    q_ell, r_ell = qg[g_of], rg[g_of]
    res["weight_split"] = max(
        relative_residual(x @ G, q0 * xa + np.einsum("l,ldn->dn", q_ell, dx.eigen)),
        relative_residual(u @ H, r0 * ua + np.einsum("l,ldn->dn", r_ell, du.eigen)),
    )
    for name in ("eigen_shift", "eigen_power", "eigen_weight", "cross_orthogonal", "cross_projection"):
        res.setdefault(name, 0.0)

    # <x, y>_P = sum_i x_i^T y P_i with P_i the i-th column of P
    y = Q @ x
    direct = weighted_inner(x, y, G)
    columnwise = float(sum(x[:, i] @ (y @ G[:, i]) for i in range(spec.n)))
    res["inner"] = abs(direct - columnwise) / (1.0 + max(abs(direct), abs(columnwise)))

    report = PropertyReport(residuals=dict(sorted(res.items())))
    if not report.all_passed:
        logger.warning("Decomposition properties failed: %s", [k for k, ok in report.passed.items() if not ok])
    return report
