# src/netlqr/utils/__init__.py
from __future__ import annotations

from netlqr.utils.helpers import (
    as_matrix,
    asymmetry,
    frozen,
    is_symmetric,
    min_eigenvalue,
    psd_sqrt,
    relative_gap,
    relative_residual,
    sha256_file,
    symmetrize,
    unvec,
    vec,
)

__all__ = [
    "as_matrix",
    "asymmetry",
    "frozen",
    "is_symmetric",
    "min_eigenvalue",
    "psd_sqrt",
    "relative_gap",
    "relative_residual",
    "sha256_file",
    "symmetrize",
    "unvec",
    "vec",
]
