# src/netlqr/exceptions/errors.py
from __future__ import annotations


class NetlqrError(Exception):
    """Base exception for all netlqr errors."""
    exit_code: int = 1


# ---------------------------------------------------------------------------
# Model / input errors (exit code 1)
# ---------------------------------------------------------------------------

class ModelError(NetlqrError):
    """Raised when an instance, config or argument is invalid."""
    exit_code = 1


class DimensionMismatchError(ModelError):
    """Raised when matrix or field shapes are inconsistent."""
    pass


class AsymmetricMatrixError(ModelError):
    """Raised when a coupling or weight matrix is not symmetric within tolerance."""
    pass


class IndexOutOfRangeError(ModelError):
    """Raised when a graph edge references a node outside 1..n."""
    pass


class SpectralRadiusError(ModelError):
    """Raised when an inverse spectral function is evaluated outside its radius."""
    pass


class AssumptionViolationError(ModelError):
    """Raised when weight, definiteness or stabilizability assumptions fail."""
    pass


class MismatchedSpectralDataError(ModelError):
    """Raised when decomposed fields and weights come from different spectral data."""
    pass


class MissingInformationError(ModelError):
    """Raised when a node's information packet cannot evaluate the control law."""
    pass


class TimeOutOfRangeError(ModelError):
    """Raised when a gain schedule is queried outside its grid."""
    pass


class GridMismatchError(ModelError):
    """Raised when a simulation grid does not refine the gain grid."""
    pass


class MissingRiccatiSamplesError(ModelError):
    """Raised when Riccati samples are required but the schedule has none."""
    pass


class TooLargeError(ModelError):
    """Raised when the centralized problem exceeds the configured dimension."""
    pass


class NotPositiveDefiniteError(ModelError):
    """Raised when a matrix required to be positive definite is not."""
    pass


class ParseError(ModelError):
    """Raised when a config file cannot be parsed."""
    pass


class ValidationError(ModelError):
    """Raised when a parsed config fails schema validation."""
    pass


# ---------------------------------------------------------------------------
# Numerical errors (exit code 2)
# ---------------------------------------------------------------------------

class NumericalError(NetlqrError):
    """Raised when a numerical procedure fails."""
    exit_code = 2


class NonFiniteBlowupError(NumericalError):
    """Raised when an integration produces NaN or Inf."""
    pass


class StepTooLargeError(NumericalError):
    """Raised when a Riccati sample loses symmetry or positive semi-definiteness."""
    pass


class NotStabilizableError(NumericalError):
    """Raised when no stabilizing Riccati solution exists."""
    pass


class NoConvergenceError(NumericalError):
    """Raised when an iterative solver exhausts its budget."""
    pass


class SingularMatrixError(NumericalError):
    """Raised when a control weight cannot be inverted."""
    pass


# ---------------------------------------------------------------------------
# Verification errors (exit code 3)
# ---------------------------------------------------------------------------

class VerificationError(NetlqrError):
    """Raised when a verification check fails."""
    exit_code = 3


class VerificationGapError(VerificationError):
    """Raised when the decomposed cost deviates from the centralized oracle."""
    pass
