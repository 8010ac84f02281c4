# tests/conftest.py
"""Pytest configuration and fixtures."""
from pathlib import Path

import numpy as np
import pytest

from netlqr.core import (
    GraphSpec,
    PolynomialCoupling,
    SystemModel,
    build_coupling,
    effective_weights,
    kronecker_expand,
    spectral_decompose,
    weight_matrices,
)

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture
def config_dir() -> Path:
    """Directory of the bundled experiment configs."""
    return CONFIG_DIR


@pytest.fixture
def rng():
    """Seeded generator for test data."""
    return np.random.default_rng(12345)


@pytest.fixture
def ring_graph():
    """Four-node cycle with weights 2 and 1."""
    return GraphSpec.ring4(2.0, 1.0)


@pytest.fixture
def ring_adjacency(ring_graph):
    return build_coupling(ring_graph, "adjacency")


@pytest.fixture
def ring_spectral(ring_adjacency):
    return spectral_decompose(ring_adjacency)


@pytest.fixture
def scalar_coupling():
    """G = (I - M)^2, H = I."""
    return PolynomialCoupling(q=[1.0, -2.0, 1.0], r=[1.0])


@pytest.fixture
def scalar_model():
    """Scalar subsystems with state and input coupling."""
    return SystemModel.from_values(A=2.0, B=1.0, D=3.0, E=0.5, Q=5.0, Q_T=6.0, R=2.0)


@pytest.fixture
def oscillator_model():
    """Two-state subsystems with a single input and state coupling."""
    return SystemModel.from_values(
        A=[[0.0, 1.0], [-1.0, 0.0]],
        B=[[0.0], [1.0]],
        D=[[0.0, 0.0], [0.5, 0.0]],
        E=[[0.0], [0.2]],
        Q=[[1.0, 0.0], [0.0, 1.0]],
        Q_T=[[1.0, 0.0], [0.0, 1.0]],
        R=[[1.0]],
    )


@pytest.fixture
def scalar_instance(ring_adjacency, ring_spectral, scalar_coupling, scalar_model, rng):
    """Everything needed to synthesize and simulate the scalar ring4 network."""
    G, H = weight_matrices(scalar_coupling, ring_adjacency)
    return {
        "model": scalar_model,
        "M": ring_adjacency,
        "G": G,
        "H": H,
        "spectral": ring_spectral,
        "weights": effective_weights(ring_spectral, scalar_coupling),
        "x0": rng.standard_normal((1, 4)),
    }


def _random_coupling(rng: np.random.Generator, n: int, kind: str) -> np.ndarray:
    """Symmetric coupling with spectral radius 1.5; ``kron`` returns 2 * ceil(n / 2) nodes."""
    if kind == "full":
        S = rng.standard_normal((n, n))
        M = S + S.T
    elif kind == "low_rank":
        V = rng.standard_normal((n, max(1, n // 2)))
        M = (V * rng.choice([-1.0, 1.0], V.shape[1])) @ V.T
    elif kind == "repeated":
        U, _ = np.linalg.qr(rng.standard_normal((n, n)))
        values = np.zeros(n)
        a, b = rng.uniform(0.5, 1.5, 2)
        values[: (n + 1) // 2] = a
        values[(n + 1) // 2 : n - 1] = -b
        M = (U * values) @ U.T
    elif kind == "kron":
        m = (n + 1) // 2
        S = rng.standard_normal((m, m))
        M = kronecker_expand(S + S.T, 2)
    else:
        raise ValueError(f"Unknown coupling kind: {kind}")
    M = 0.5 * (M + M.T)
    return 1.5 * M / np.abs(np.linalg.eigvalsh(M)).max()


@pytest.fixture
def random_coupling():
    """Factory ``(rng, n, kind)`` of seeded couplings: full, low_rank, repeated or kron."""
    return _random_coupling
