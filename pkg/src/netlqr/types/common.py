# src/netlqr/types/common.py
from __future__ import annotations

from enum import Enum
from typing import Literal

import numpy as np

# Common type aliases
FloatArray = np.ndarray
Matrix = FloatArray
GlobalField = FloatArray  # d x n, one column per node
MatrixLike = float | int | list[float] | list[list[float]]

# Named analytic functions for the cost coupling
SpectralFunctionName = Literal["exp", "inverse"]

# Trajectory component labels used in tables and plots
ComponentKind = Literal["raw", "eigen", "auxiliary"]


class CouplingKind(str, Enum):
    ADJACENCY = "adjacency"
    LAPLACIAN = "laplacian"
    CUSTOM = "custom"


class InformationStructure(str, Enum):
    """Data each node holds to evaluate the optimal law."""

    GLOBAL = "global"
    LOCAL = "local"
    AGGREGATE = "aggregate"


class LawKind(str, Enum):
    CLOSED = "closed"
    OPEN = "open"
    MIXED = "mixed"


class HorizonKind(str, Enum):
    FINITE = "finite"
    INFINITE = "infinite"


class Integrator(str, Enum):
    """Step rule for noisy paths; noise-free runs always use RK4."""

    EULER_MARUYAMA = "euler_maruyama"
    RK4 = "rk4"


class RunMode(str, Enum):
    DECOMPOSE = "decompose"
    SYNTHESIZE = "synthesize"
    SIMULATE = "simulate"
    VERIFY = "verify"
    CONSENSUS = "consensus"
    BENCH = "bench"
