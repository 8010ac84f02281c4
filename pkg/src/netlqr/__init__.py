# src/netlqr/__init__.py
from __future__ import annotations

from netlqr.config import ExperimentConfig, SolverConfig, ToleranceConfig, parse_config
from netlqr.core import (
    GainSchedule,
    GraphSpec,
    SpectralData,
    SystemModel,
    centralized_oracle,
    decompose,
    run,
    simulate_deterministic,
    spectral_decompose,
    synthesize_finite,
    synthesize_infinite,
)
from netlqr.exceptions import (
    ModelError,
    NetlqrError,
    NumericalError,
    ParseError,
    ValidationError,
    VerificationError,
)

__version__ = "0.1.0"

__all__ = [
    # Core objects
    "GraphSpec",
    "SpectralData",
    "SystemModel",
    "GainSchedule",
    "spectral_decompose",
    "decompose",
    "synthesize_finite",
    "synthesize_infinite",
    "simulate_deterministic",
    "centralized_oracle",
    "run",
    # Configuration
    "ExperimentConfig",
    "SolverConfig",
    "ToleranceConfig",
    "parse_config",
    # Exceptions
    "NetlqrError",
    "ModelError",
    "NumericalError",
    "ParseError",
    "ValidationError",
    "VerificationError",
    # Version
    "__version__",
]
