# src/netlqr/types/__init__.py
from __future__ import annotations

from netlqr.types.common import (
    ComponentKind,
    CouplingKind,
    FloatArray,
    GlobalField,
    HorizonKind,
    InformationStructure,
    Integrator,
    LawKind,
    Matrix,
    MatrixLike,
    RunMode,
    SpectralFunctionName,
)

__all__ = [
    "ComponentKind",
    "CouplingKind",
    "FloatArray",
    "GlobalField",
    "HorizonKind",
    "InformationStructure",
    "Integrator",
    "LawKind",
    "Matrix",
    "MatrixLike",
    "RunMode",
    "SpectralFunctionName",
]
