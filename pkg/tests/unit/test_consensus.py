# tests/unit/test_consensus.py
import math

import numpy as np
import pytest
from netlqr.core import (
    ClosedLoopLaw,
    ConsensusSetup,
    GraphSpec,
    consensus_control,
    convergence_horizon,
    disagreement,
    framework_gains,
    simulate_consensus,
    solve_pi,
)
from netlqr.core.consensus import gain_identity_residual
from netlqr.exceptions import ModelError, NotPositiveDefiniteError


@pytest.fixture
def path_setup():
    return ConsensusSetup(graph=GraphSpec.path(6), Q=1.0, R=1.0)


@pytest.fixture
def vector_setup(rng):
    X = rng.standard_normal((2, 2))
    return ConsensusSetup(
        graph=GraphSpec.ring4(2.0, 1.0),
        Q=X @ X.T + 0.5 * np.eye(2),
        R=np.array([[2.0, 0.3], [0.3, 1.0]]),
    )


class TestSolvePi:
    def test_scalar(self):
        gain = solve_pi(np.array([[0.1]]), np.array([[1.0]]))
        assert gain.Pi[0, 0] == pytest.approx(math.sqrt(0.1), rel=1e-12)

    def test_matrix_identity(self, vector_setup):
        gain = solve_pi(vector_setup.Q, vector_setup.R)
        assert gain.residual(vector_setup.Q) < 1e-10
        np.testing.assert_allclose(gain.Pi, gain.Pi.T)
        assert np.linalg.eigvalsh(gain.Pi).min() > 0

    def test_rejects_indefinite_r(self):
        with pytest.raises(NotPositiveDefiniteError):
            solve_pi(np.eye(1), -np.eye(1))


class TestDisagreement:
    def test_two_nodes(self):
        assert disagreement(np.array([[0.0, 1.0]])) == pytest.approx(1.0)

    def test_largest_pair(self):
        x = np.array([[0.0, 3.0, 0.0], [0.0, 0.0, 4.0]])
        assert disagreement(x) == pytest.approx(5.0)

    def test_single_node(self):
        assert disagreement(np.ones((2, 1))) == 0.0


class TestSetup:
    def test_connectivity(self, path_setup):
        assert path_setup.spectral.rank == 5
        assert path_setup.algebraic_connectivity == pytest.approx(2.0 - 2.0 * math.cos(math.pi / 6))

    def test_disconnected_graph(self):
        with pytest.raises(ModelError):
            ConsensusSetup(graph=GraphSpec(n=3, edges=[(1, 2, 1.0)]), Q=1.0, R=1.0)

    def test_negative_weight(self):
        with pytest.raises(ModelError):
            ConsensusSetup(graph=GraphSpec(n=3, edges=[(1, 2, 1.0), (2, 3, -1.0)]), Q=1.0, R=1.0)

    def test_indefinite_q(self):
        with pytest.raises(NotPositiveDefiniteError):
            ConsensusSetup(graph=GraphSpec.path(3), Q=-1.0, R=1.0)


class TestFrameworkAgreement:
    def test_protocol_matches_decomposed_law(self, vector_setup, rng):
        gain = solve_pi(vector_setup.Q, vector_setup.R)
        gains = framework_gains(vector_setup)
        law = ClosedLoopLaw(gains=gains)
        for _ in range(5):
            x = rng.standard_normal((2, 4))
            np.testing.assert_allclose(consensus_control(vector_setup, gain, x), law.control(0.0, x), atol=1e-8)

    def test_gain_identity(self, vector_setup):
        """Each group solution equals its eigenvalue times Pi."""
        gain = solve_pi(vector_setup.Q, vector_setup.R)
        gains = framework_gains(vector_setup)
        assert gain_identity_residual(gains, gain) < 1e-8

    def test_auxiliary_riccati_vanishes(self, path_setup):
        gains = framework_gains(path_setup)
        np.testing.assert_array_equal(gains.aux_riccati, np.zeros((1, 1)))
        np.testing.assert_array_equal(gains.aux_gain, np.zeros((1, 1)))


class TestSimulation:
    def test_path_converges(self, path_setup, rng):
        gain = solve_pi(path_setup.Q, path_setup.R)
        x0 = rng.standard_normal((1, 6))
        result = simulate_consensus(path_setup, gain, x0, T=80.0, dt=0.01)
        assert result.disagreement[-1] < 1e-6
        assert result.reduction < 1e-5
        assert result.average_drift < 1e-10
        np.testing.assert_allclose(result.trajectory.final, x0.mean(), atol=1e-6)

    def test_disagreement_non_increasing(self, vector_setup, rng):
        gain = solve_pi(vector_setup.Q, vector_setup.R)
        result = simulate_consensus(vector_setup, gain, rng.standard_normal((2, 4)), T=5.0, dt=0.01)
        assert result.disagreement[-1] < result.disagreement[0]

    def test_convergence_horizon(self, path_setup):
        gain = solve_pi(path_setup.Q, path_setup.R)
        assert convergence_horizon(path_setup, gain) == pytest.approx(20.0 / path_setup.algebraic_connectivity)
