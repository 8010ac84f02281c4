# src/netlqr/utils/helpers.py
from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Any

import numpy as np
import scipy.linalg

from netlqr.exceptions import DimensionMismatchError, NotPositiveDefiniteError
from netlqr.types import FloatArray


def as_matrix(value: Any, name: str = "matrix") -> FloatArray:
    """
    Coerce a scalar, a row list or a nested row list into a read-only 2-D float array.

    Scalars become 1x1 matrices and a flat list is a single row.
    """
    try:
        arr = np.array(value, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise DimensionMismatchError(f"Failed to read {name} as a matrix: {e}") from e
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    elif arr.ndim != 2:
        raise DimensionMismatchError(f"{name} must be two-dimensional, got shape {arr.shape}")
    return frozen(arr)


def frozen(arr: FloatArray) -> FloatArray:
    """Return a read-only float copy of ``arr``."""
    out = np.array(arr, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


def symmetrize(P: FloatArray) -> FloatArray:
    return 0.5 * (P + np.swapaxes(P, -1, -2))


def asymmetry(M: FloatArray) -> float:
    """Frobenius norm of the skew part relative to max(1, ||M||)."""
    scale = max(1.0, float(np.linalg.norm(M)))
    return float(np.linalg.norm(M - M.T)) / scale


def is_symmetric(M: FloatArray, tol: float) -> bool:
    return M.ndim == 2 and M.shape[0] == M.shape[1] and asymmetry(M) <= tol


def psd_sqrt(S: FloatArray, clamp: float = 1e-12) -> FloatArray:
    """
    Symmetric square root of a PSD matrix via ``scipy.linalg.eigh``.

    Eigenvalues in (-clamp, 0) are treated as zero; anything more negative is rejected.
    """
    w, V = scipy.linalg.eigh(symmetrize(S))
    scale = max(1.0, float(np.max(np.abs(w)))) if w.size else 1.0
    if w.size and w.min() < -clamp * scale:
        raise NotPositiveDefiniteError(f"Matrix is not positive semi-definite (min eigenvalue {w.min():.3e})")
    w = np.clip(w, 0.0, None)
    return symmetrize((V * np.sqrt(w)) @ V.T)


def min_eigenvalue(S: FloatArray) -> float:
    if S.size == 0:
        return 0.0
    return float(scipy.linalg.eigvalsh(symmetrize(S))[0])


def relative_gap(value: float, reference: float) -> float:
    """|value - reference| / |reference|, falling back to the absolute gap near zero."""
    denom = abs(reference)
    if denom < 1e-300:
        return abs(value - reference)
    return abs(value - reference) / denom


def relative_residual(lhs: FloatArray, rhs: FloatArray) -> float:
    """Residual of an identity relative to 1 + the magnitude of the larger side."""
    scale = 1.0 + max(float(np.linalg.norm(lhs)), float(np.linalg.norm(rhs)))
    return float(np.linalg.norm(lhs - rhs)) / scale


def vec(x: FloatArray) -> FloatArray:
    """Stack the node columns of a (..., d, n) field into (..., d*n), node-major."""
    return np.reshape(np.swapaxes(x, -1, -2), (*x.shape[:-2], -1))


def unvec(v: FloatArray, d: int, n: int) -> FloatArray:
    """Inverse of :func:`vec`."""
    return np.swapaxes(np.reshape(v, (*v.shape[:-1], n, d)), -1, -2)


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()
