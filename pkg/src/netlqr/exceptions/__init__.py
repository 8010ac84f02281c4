# src/netlqr/exceptions/__init__.py
from __future__ import annotations

from netlqr.exceptions.errors import (
    AssumptionViolationError,
    AsymmetricMatrixError,
    DimensionMismatchError,
    GridMismatchError,
    IndexOutOfRangeError,
    MismatchedSpectralDataError,
    MissingInformationError,
    MissingRiccatiSamplesError,
    ModelError,
    NetlqrError,
    NoConvergenceError,
    NonFiniteBlowupError,
    NotPositiveDefiniteError,
    NotStabilizableError,
    NumericalError,
    ParseError,
    SingularMatrixError,
    SpectralRadiusError,
    StepTooLargeError,
    TimeOutOfRangeError,
    TooLargeError,
    ValidationError,
    VerificationError,
    VerificationGapError,
)

__all__ = [
    "AssumptionViolationError",
    "AsymmetricMatrixError",
    "DimensionMismatchError",
    "GridMismatchError",
    "IndexOutOfRangeError",
    "MismatchedSpectralDataError",
    "MissingInformationError",
    "MissingRiccatiSamplesError",
    "ModelError",
    "NetlqrError",
    "NoConvergenceError",
    "NonFiniteBlowupError",
    "NotPositiveDefiniteError",
    "NotStabilizableError",
    "NumericalError",
    "ParseError",
    "SingularMatrixError",
    "SpectralRadiusError",
    "StepTooLargeError",
    "TimeOutOfRangeError",
    "TooLargeError",
    "ValidationError",
    "VerificationError",
    "VerificationGapError",
]
