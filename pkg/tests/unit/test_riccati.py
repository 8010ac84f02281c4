# tests/unit/test_riccati.py
import math

import numpy as np
import pytest
import scipy.linalg
from netlqr.core import (
    LQRData,
    gain_from_solution,
    is_detectable,
    is_stabilizable,
    kleinman_newton,
    solve_are,
    solve_riccati_ode,
    spectral_abscissa,
)
from netlqr.exceptions import (
    DimensionMismatchError,
    NonFiniteBlowupError,
    NotStabilizableError,
    SingularMatrixError,
    StepTooLargeError,
    TimeOutOfRangeError,
)


@pytest.fixture
def oscillator_data():
    return LQRData(
        A=[[0.0, 1.0], [-1.0, 0.0]],
        B=[[0.0], [1.0]],
        Q=[[2.0, 0.0], [0.0, 1.0]],
        R=[[0.5]],
        Q_T=[[1.0, 0.0], [0.0, 1.0]],
    )


class TestLQRData:
    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            LQRData(A=np.eye(2), B=[[1.0], [0.0]], Q=np.eye(3), R=1.0)

    def test_residual_vanishes_at_solution(self):
        data = LQRData(A=1.0, B=1.0, Q=1.0, R=1.0)
        P = np.array([[1.0 + math.sqrt(2.0)]])
        np.testing.assert_allclose(data.residual(P), 0.0, atol=1e-12)


class TestPBH:
    def test_stabilizable(self, oscillator_data):
        assert is_stabilizable(oscillator_data.A, oscillator_data.B)

    def test_uncontrollable_unstable_mode(self):
        A = np.eye(2)
        B = np.array([[1.0], [0.0]])
        assert not is_stabilizable(A, B)

    def test_uncontrollable_stable_mode(self):
        A = np.diag([1.0, -1.0])
        B = np.array([[1.0], [0.0]])
        assert is_stabilizable(A, B)

    def test_detectable(self):
        A = np.diag([1.0, -1.0])
        assert is_detectable(A, np.array([[1.0, 0.0]]))
        assert not is_detectable(A, np.array([[0.0, 1.0]]))


class TestRiccatiODE:
    def test_tanh_closed_form(self):
        """-dP/dt = 1 - P^2 with P(T) = 0 is solved by P(t) = tanh(T - t)."""
        data = LQRData(A=0.0, B=1.0, Q=1.0, R=1.0, Q_T=0.0)
        sol = solve_riccati_ode(data, T=2.0, step=1e-3)
        assert sol.P.shape == (2001, 1, 1)
        np.testing.assert_allclose(sol.P[:, 0, 0], np.tanh(2.0 - sol.grid), atol=1e-10)
        assert sol.at(0.5)[0, 0] == pytest.approx(math.tanh(1.5), abs=1e-6)

    def test_fourth_order_convergence(self):
        """Halving the step divides the error against tanh(T - t) by at least 12."""
        data = LQRData(A=0.0, B=1.0, Q=1.0, R=1.0, Q_T=0.0)
        errors = [abs(solve_riccati_ode(data, T=2.0, step=h).P[0, 0, 0] - math.tanh(2.0)) for h in (0.1, 0.05, 0.025)]
        assert errors[0] / errors[1] >= 12.0
        assert errors[1] / errors[2] >= 12.0

    def test_fourth_order_self_convergence(self, oscillator_data):
        """Without a closed form, successive differences shrink by at least 12 per halving."""
        P0 = [solve_riccati_ode(oscillator_data, T=2.0, step=h).P[0] for h in (0.1, 0.05, 0.025)]
        ratio = np.linalg.norm(P0[0] - P0[1]) / np.linalg.norm(P0[1] - P0[2])
        assert ratio >= 12.0

    def test_terminal_condition(self, oscillator_data):
        sol = solve_riccati_ode(oscillator_data, T=1.0, step=1e-2)
        np.testing.assert_array_equal(sol.P[-1], oscillator_data.Q_T)
        assert sol.step == pytest.approx(1e-2)
        for P in sol.P:
            np.testing.assert_array_equal(P, P.T)
            assert np.linalg.eigvalsh(P).min() >= -1e-12

    def test_long_horizon_approaches_are(self, oscillator_data):
        sol = solve_riccati_ode(oscillator_data, T=30.0, step=1e-2)
        are = solve_are(oscillator_data)
        np.testing.assert_allclose(sol.P[0], are.P, atol=1e-8)

    def test_overflow(self):
        """An uncontrollable fast mode drives P past the float range before t = 0."""
        data = LQRData(A=400.0, B=0.0, Q=1.0, R=1.0, Q_T=0.0)
        with pytest.raises(NonFiniteBlowupError):
            solve_riccati_ode(data, T=2.0, step=1e-3)

    def test_indefinite_samples(self):
        data = LQRData(A=0.0, B=1.0, Q=-1.0, R=1.0, Q_T=0.0)
        with pytest.raises(StepTooLargeError):
            solve_riccati_ode(data, T=1.0, step=1e-2)

    def test_query_outside_grid(self, oscillator_data):
        sol = solve_riccati_ode(oscillator_data, T=1.0, step=1e-2)
        with pytest.raises(TimeOutOfRangeError):
            sol.at(1.5)

    def test_missing_terminal_weight(self):
        with pytest.raises(DimensionMismatchError):
            solve_riccati_ode(LQRData(A=0.0, B=1.0, Q=1.0, R=1.0), T=1.0)


class TestARE:
    def test_scalar_closed_form(self):
        data = LQRData(A=1.0, B=1.0, Q=1.0, R=1.0)
        sol = solve_are(data)
        assert sol.P[0, 0] == pytest.approx(1.0 + math.sqrt(2.0), rel=1e-12)
        assert sol.method == "schur"
        assert sol.stabilizing

    def test_matches_scipy(self, oscillator_data):
        sol = solve_are(oscillator_data)
        ref = scipy.linalg.solve_continuous_are(
            oscillator_data.A, oscillator_data.B, oscillator_data.Q, oscillator_data.R
        )
        np.testing.assert_allclose(sol.P, ref, atol=1e-9)
        assert sol.residual <= 1e-9
        assert np.all(sol.closed_loop_eigenvalues.real < 0)

    def test_zero_state_weight(self):
        """Marginal drift with zero weight keeps P = 0."""
        sol = solve_are(LQRData(A=0.0, B=1.0, Q=0.0, R=1.0))
        assert sol.method == "zero"
        np.testing.assert_array_equal(sol.P, [[0.0]])

    def test_zero_state_weight_stable_drift(self):
        sol = solve_are(LQRData(A=-1.0, B=1.0, Q=0.0, R=1.0))
        assert sol.method == "zero"
        assert sol.stabilizing

    def test_zero_state_weight_unstable_drift(self):
        """A = 1 with Q = 0 still gets the stabilizing solution P = 2A = 2."""
        sol = solve_are(LQRData(A=1.0, B=1.0, Q=0.0, R=1.0))
        assert sol.method == "schur"
        assert sol.P[0, 0] == pytest.approx(2.0, rel=1e-10)
        assert sol.stabilizing
        np.testing.assert_allclose(sol.closed_loop_eigenvalues.real, [-1.0], rtol=1e-10)

    def test_zero_state_weight_unstable_uncontrollable(self):
        data = LQRData(A=np.diag([1.0, 2.0]), B=[[1.0], [0.0]], Q=np.zeros((2, 2)), R=1.0)
        with pytest.raises(NotStabilizableError):
            solve_are(data)

    def test_spectral_abscissa(self):
        assert spectral_abscissa(np.array([[0.0, 1.0], [-1.0, 0.0]])) == pytest.approx(0.0, abs=1e-14)
        assert spectral_abscissa(np.diag([-3.0, 2.0])) == pytest.approx(2.0)

    def test_not_stabilizable(self):
        data = LQRData(A=np.eye(2), B=[[1.0], [0.0]], Q=np.eye(2), R=1.0)
        with pytest.raises(NotStabilizableError):
            solve_are(data)

    def test_kleinman_newton(self):
        data = LQRData(A=1.0, B=1.0, Q=1.0, R=1.0)
        sol = kleinman_newton(data, np.array([[2.0]]))
        assert sol.method == "newton"
        assert sol.P[0, 0] == pytest.approx(1.0 + math.sqrt(2.0), rel=1e-8)


class TestGains:
    def test_single_and_stacked(self, oscillator_data):
        sol = solve_riccati_ode(oscillator_data, T=1.0, step=0.1)
        K = gain_from_solution(sol.P, oscillator_data, r_scale=2.0)
        assert K.shape == (11, 1, 2)
        expected = np.linalg.solve(2.0 * oscillator_data.R, oscillator_data.B.T @ sol.P[3])
        np.testing.assert_allclose(K[3], expected, atol=1e-12)
        np.testing.assert_allclose(gain_from_solution(sol.P[3], oscillator_data, 2.0), expected, atol=1e-12)

    def test_nonpositive_scale(self, oscillator_data):
        with pytest.raises(SingularMatrixError):
            gain_from_solution(np.eye(2), oscillator_data, r_scale=0.0)
