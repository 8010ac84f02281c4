# src/netlqr/config/__init__.py
from __future__ import annotations

from netlqr.config.loader import config_from_dict, dump_config, parse_config
from netlqr.config.models import (
    BenchConfig,
    CompleteGraphConfig,
    CouplingConfig,
    EdgeListGraphConfig,
    ExperimentConfig,
    Ring4GraphConfig,
    HorizonConfig,
    InitialStateConfig,
    KronGraphConfig,
    ModelConfig,
    MonteCarloConfig,
    NamedFunctionConfig,
    OutputConfig,
    PathGraphConfig,
    PolynomialCostConfig,
    RandomStateConfig,
    SolverConfig,
    SpectralCostConfig,
    ToleranceConfig,
)

__all__ = [
    "BenchConfig",
    "CompleteGraphConfig",
    "CouplingConfig",
    "EdgeListGraphConfig",
    "ExperimentConfig",
    "Ring4GraphConfig",
    "HorizonConfig",
    "InitialStateConfig",
    "KronGraphConfig",
    "ModelConfig",
    "MonteCarloConfig",
    "NamedFunctionConfig",
    "OutputConfig",
    "PathGraphConfig",
    "PolynomialCostConfig",
    "RandomStateConfig",
    "SolverConfig",
    "SpectralCostConfig",
    "ToleranceConfig",
    "config_from_dict",
    "dump_config",
    "parse_config",
]
