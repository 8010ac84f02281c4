# tests/unit/test_simulator.py
import math

import numpy as np
import pytest
from netlqr.core import (
    CentralizedLaw,
    ClosedLoopLaw,
    ControlLaw,
    GraphSpec,
    PolynomialCoupling,
    SystemModel,
    build_coupling,
    centralized_oracle,
    control_closed_loop,
    decompose_noise,
    effective_weights,
    evaluate_cost,
    generate_noise,
    noise_covariance,
    optimal_cost,
    simulate_components,
    simulate_deterministic,
    simulate_path,
    simulate_stochastic,
    spectral_decompose,
    stochastic_value,
    synthesize_finite,
    synthesize_infinite,
    weight_matrices,
)
from netlqr.exceptions import DimensionMismatchError, ModelError, NonFiniteBlowupError, TooLargeError

T = 1.0
STEPS = 400


class ZeroLaw(ControlLaw):
    d_u: int = 1

    def control(self, t, x):
        return np.zeros((*x.shape[:-2], self.d_u, x.shape[-1]))


@pytest.fixture
def gains(scalar_instance):
    inst = scalar_instance
    return synthesize_finite(inst["model"], inst["spectral"], inst["weights"], T, step=T / STEPS)


@pytest.fixture
def noisy_model(scalar_model):
    return scalar_model.model_copy(update={"F": np.array([[1.0]])})


class TestDeterministic:
    def test_decoupled_decay(self):
        model = SystemModel.from_values(A=-1.0, B=1.0, Q=1.0, R=1.0)
        x0 = np.array([[1.0, -2.0, 0.5]])
        traj = simulate_deterministic(model, np.zeros((3, 3)), ZeroLaw(), x0, 2.0, 0.01)
        assert traj.x.shape == (201, 1, 3)
        np.testing.assert_allclose(traj.final, math.exp(-2.0) * x0, rtol=1e-9)

    def test_network_drift(self, ring_adjacency):
        """dx/dt = x M: the solution is x0 expm(M t)."""
        model = SystemModel.from_values(A=0.0, B=1.0, D=0.1, Q=1.0, R=1.0)
        x0 = np.array([[1.0, 0.0, 0.0, 0.0]])
        traj = simulate_deterministic(model, ring_adjacency, ZeroLaw(), x0, 1.0, 1e-3)
        spec = spectral_decompose(ring_adjacency)
        V = spec.eigenvectors
        expected = x0 @ (np.eye(4) - V @ V.T) + ((x0 @ V) * np.exp(0.1 * spec.eigenvalues)) @ V.T
        np.testing.assert_allclose(traj.final, expected, rtol=1e-10)

    def test_blowup(self):
        model = SystemModel.from_values(A=800.0, B=1.0, Q=1.0, R=1.0)
        with pytest.raises(NonFiniteBlowupError):
            simulate_deterministic(model, np.zeros((1, 1)), ZeroLaw(), np.ones((1, 1)), 2.0, 1e-3)

    def test_wrong_initial_state(self, ring_adjacency, scalar_model):
        with pytest.raises(DimensionMismatchError):
            simulate_deterministic(scalar_model, ring_adjacency, ZeroLaw(), np.ones((1, 3)), 1.0)


class TestCosts:
    def test_cost_matches_value(self, scalar_instance, gains):
        inst = scalar_instance
        law = ClosedLoopLaw(gains=gains)
        traj = simulate_deterministic(inst["model"], inst["M"], law, inst["x0"], T, T / (10 * STEPS))
        model = inst["model"]
        cost = evaluate_cost(traj, inst["G"], inst["H"], model.Q, model.R, model.Q_T, inst["spectral"], inst["weights"])
        assert cost.total == pytest.approx(optimal_cost(gains, inst["x0"]), rel=1e-4)
        assert cost.breakdown_total == pytest.approx(cost.total, rel=1e-10)
        assert cost.eigen_breakdown.shape == (2, 4)

    def test_oracle_agrees(self, scalar_instance, gains):
        inst = scalar_instance
        model = inst["model"]
        traj = simulate_deterministic(model, inst["M"], ClosedLoopLaw(gains=gains), inst["x0"], T, T / STEPS)
        cost = evaluate_cost(traj, inst["G"], inst["H"], model.Q, model.R, model.Q_T)
        oracle = centralized_oracle(
            model, inst["M"], inst["G"], inst["H"], inst["x0"], T, dt=T / STEPS, step=T / STEPS
        )
        assert oracle.dimension == 4
        assert cost.total == pytest.approx(oracle.cost.total, rel=1e-8)
        assert optimal_cost(gains, inst["x0"]) == pytest.approx(oracle.optimal_value, rel=1e-8)
        np.testing.assert_allclose(traj.u, oracle.trajectory.u, atol=1e-8 * (1.0 + np.abs(traj.u).max()))

    def test_oracle_size_limit(self, scalar_instance):
        inst = scalar_instance
        with pytest.raises(TooLargeError):
            centralized_oracle(inst["model"], inst["M"], inst["G"], inst["H"], inst["x0"], T, max_dim=3)

    def test_infinite_oracle(self, oscillator_model, ring_adjacency, ring_spectral, scalar_coupling, rng):
        G, H = weight_matrices(scalar_coupling, ring_adjacency)
        gains = synthesize_infinite(oscillator_model, ring_spectral, effective_weights(ring_spectral, scalar_coupling))
        x0 = rng.standard_normal((2, 4))
        oracle = centralized_oracle(oscillator_model, ring_adjacency, G, H, x0, 5.0, dt=5e-3, finite=False)
        np.testing.assert_allclose(oracle.law.gain, gains.composite_gain(0.0), atol=1e-8)
        assert optimal_cost(gains, x0) == pytest.approx(oracle.optimal_value, rel=1e-8)


class TestComponents:
    def test_recomposes_network_trajectory(self, scalar_instance, gains):
        inst = scalar_instance
        direct = simulate_deterministic(inst["model"], inst["M"], ClosedLoopLaw(gains=gains), inst["x0"], T, T / STEPS)
        parts = simulate_components(inst["model"], gains, inst["x0"], T, T / STEPS)
        joined = parts.recompose()
        scale = 1.0 + float(np.abs(direct.x).max())
        np.testing.assert_allclose(joined.x, direct.x, atol=1e-10 * scale)
        np.testing.assert_allclose(joined.u, direct.u, atol=1e-9 * scale)

    def test_auxiliary_stays_in_kernel(self, scalar_instance, gains):
        inst = scalar_instance
        parts = simulate_components(inst["model"], gains, inst["x0"], T, T / STEPS)
        np.testing.assert_allclose(parts.aux_x @ inst["M"], 0.0, atol=1e-10)

    def test_projected_dynamics_finite_difference(self, scalar_instance, gains):
        """Central differences of each projected network trajectory follow that component's subsystem."""
        inst = scalar_instance
        model, spec = inst["model"], inst["spectral"]
        h = T / (10 * STEPS)
        direct = simulate_deterministic(model, inst["M"], ClosedLoopLaw(gains=gains), inst["x0"], T, h)
        parts = simulate_components(model, gains, inst["x0"], T, h)
        projections = [(0.0, spec.auxiliary_projector(), parts.aux_x)]
        for ell, lam in enumerate(spec.eigenvalues):
            projections.append((float(lam), spec.projector(ell), parts.eigen_x[:, ell]))
        for lam, P, component in projections:
            x, u = direct.x @ P, direct.u @ P
            scale = 1.0 + float(np.abs(x).max())
            np.testing.assert_allclose(component, x, atol=1e-9 * scale)
            slope = (x[2:] - x[:-2]) / (2.0 * h)
            rhs = (model.A + lam * model.D) @ x[1:-1] + (model.B + lam * model.E) @ u[1:-1]
            np.testing.assert_allclose(slope, rhs, atol=1e-2 * (1.0 + float(np.abs(rhs).max())))

    def test_noisy_components_recompose(self, scalar_instance, noisy_model, gains):
        inst = scalar_instance
        grid = np.linspace(0.0, T, STEPS + 1)
        noise = generate_noise(7, 0, grid, 1, 4)
        direct = simulate_path(noisy_model, inst["M"], ClosedLoopLaw(gains=gains), inst["x0"], T, noise=noise)
        joined = simulate_components(noisy_model, gains, inst["x0"], T, noise=noise).recompose()
        scale = 1.0 + float(np.abs(direct.x).max())
        np.testing.assert_allclose(joined.x, direct.x, atol=1e-10 * scale)


class TestNoise:
    def test_reproducible_streams(self):
        grid = np.linspace(0.0, 1.0, 101)
        a = generate_noise(3, 5, grid, 2, 4)
        b = generate_noise(3, 5, grid, 2, 4)
        c = generate_noise(3, 6, grid, 2, 4)
        assert a.increments.shape == (100, 2, 4)
        np.testing.assert_array_equal(a.increments, b.increments)
        assert not np.array_equal(a.increments, c.increments)
        np.testing.assert_allclose(a.cumulative()[-1], a.increments.sum(axis=0))

    def test_node_streams_do_not_depend_on_network_size(self):
        grid = np.linspace(0.0, 1.0, 101)
        small = generate_noise(3, 5, grid, 2, 4)
        large = generate_noise(3, 5, grid, 2, 7)
        np.testing.assert_array_equal(small.increments, large.increments[:, :, :4])

    def test_shorter_grid_is_prefix(self):
        long = generate_noise(3, 5, np.linspace(0.0, 1.0, 101), 1, 3)
        short = generate_noise(3, 5, np.linspace(0.0, 0.5, 51), 1, 3)
        np.testing.assert_allclose(short.increments, long.increments[:50], rtol=1e-12)

    def test_increment_statistics(self):
        """10^5 steps per node: variance within 2% of dt, zero mean, uncorrelated nodes."""
        dt = 1e-4
        noise = generate_noise(11, 0, np.linspace(0.0, 10.0, 100_001), 1, 3)
        inc = noise.increments[:, 0, :]
        np.testing.assert_allclose(inc.var(axis=0) / dt, 1.0, rtol=0.02)
        assert np.all(np.abs(inc.mean(axis=0)) < 5.0 * math.sqrt(dt / inc.shape[0]))
        corr = np.corrcoef(inc.T)
        assert np.all(np.abs(corr[np.triu_indices(3, 1)]) < 0.02)

    def test_decomposed_covariance_matches_projectors(self):
        spec = spectral_decompose(build_coupling(GraphSpec.complete(4), "adjacency"))
        dt = 1e-4
        noise = generate_noise(12, 0, np.linspace(0.0, 10.0, 100_001), 1, 4)
        parts = decompose_noise(noise, spec)
        stacked = np.concatenate([parts.auxiliary[:, 0, :], parts.eigen[:, :, 0, :].reshape(-1, 4 * spec.rank)], axis=1)
        np.testing.assert_allclose(np.cov(stacked, rowvar=False) / dt, noise_covariance(spec), atol=0.02)

    def test_decomposition_sums_back(self, ring_spectral):
        noise = generate_noise(0, 0, np.linspace(0.0, 1.0, 11), 1, 4)
        parts = decompose_noise(noise, ring_spectral)
        np.testing.assert_allclose(parts.auxiliary + parts.eigen.sum(axis=1), noise.increments, atol=1e-14)

    def test_mean_field_covariance(self):
        """Averaging coupling on four nodes: eigen noise variance 1/4, auxiliary 3/4 per node."""
        spec = spectral_decompose(build_coupling(GraphSpec.complete(4), "adjacency"))
        cov = noise_covariance(spec)
        assert cov.shape == (8, 8)
        np.testing.assert_allclose(np.diag(cov)[:4], 0.75)
        np.testing.assert_allclose(np.diag(cov)[4:], 0.25)
        np.testing.assert_allclose(cov[:4, 4:], 0.0)


class TestMonteCarlo:
    def test_zero_noise_matches_deterministic(self, scalar_instance, gains):
        """The RK4 rule with F = 0 is the deterministic integrator."""
        inst = scalar_instance
        model = inst["model"]
        law = ClosedLoopLaw(gains=gains)
        traj = simulate_deterministic(model, inst["M"], law, inst["x0"], T, T / STEPS)
        expected = evaluate_cost(traj, inst["G"], inst["H"], model.Q, model.R, model.Q_T).total
        ens = simulate_stochastic(
            model,
            inst["M"],
            law,
            inst["x0"],
            T,
            inst["G"],
            inst["H"],
            n_paths=6,
            seed=1,
            dt=T / STEPS,
            batch_size=4,
            integrator="rk4",
        )
        assert ens.n_paths == 6
        np.testing.assert_allclose(ens.costs, expected, rtol=1e-10)
        assert len(ens.samples) == 1
        np.testing.assert_allclose(ens.samples[0].x, traj.x, rtol=1e-10, atol=1e-12)

    def test_euler_maruyama_step(self, scalar_instance, gains):
        """With F = 0 the default rule is x_{k+1} = x_k + h (A x + B u + D x M + E u M)."""
        inst = scalar_instance
        model, M = inst["model"], inst["M"]
        h = T / STEPS
        ens = simulate_stochastic(
            model, M, ClosedLoopLaw(gains=gains), inst["x0"], T, inst["G"], inst["H"], n_paths=2, seed=1, dt=h
        )
        x, u = ens.samples[0].x, ens.samples[0].u
        drift = model.A @ x[:-1] + model.B @ u[:-1] + (model.D @ x[:-1]) @ M + (model.E @ u[:-1]) @ M
        scale = 1.0 + float(np.abs(x).max())
        np.testing.assert_allclose(x[1:] - x[:-1], h * drift, atol=1e-12 * scale)

    def test_unknown_integrator(self, scalar_instance, gains):
        inst = scalar_instance
        with pytest.raises(ModelError):
            simulate_stochastic(
                inst["model"],
                inst["M"],
                ClosedLoopLaw(gains=gains),
                inst["x0"],
                T,
                inst["G"],
                inst["H"],
                n_paths=1,
                integrator="midpoint",
            )

    def test_worker_count_does_not_change_results(self, scalar_instance, noisy_model, gains):
        inst = scalar_instance
        law = ClosedLoopLaw(gains=gains)
        kwargs = dict(n_paths=12, seed=9, dt=T / STEPS, batch_size=4)
        args = (noisy_model, inst["M"], law, inst["x0"], T, inst["G"], inst["H"])
        serial = simulate_stochastic(*args, max_workers=1, **kwargs)
        pooled = simulate_stochastic(*args, max_workers=3, **kwargs)
        np.testing.assert_array_equal(serial.costs, pooled.costs)

    def test_batch_size_does_not_change_results(self, scalar_instance, noisy_model, gains):
        inst = scalar_instance
        law = ClosedLoopLaw(gains=gains)
        args = (noisy_model, inst["M"], law, inst["x0"], T, inst["G"], inst["H"])
        one = simulate_stochastic(*args, n_paths=5, seed=2, dt=T / STEPS, batch_size=1)
        five = simulate_stochastic(*args, n_paths=5, seed=2, dt=T / STEPS, batch_size=5)
        np.testing.assert_allclose(one.costs, five.costs, rtol=1e-12)

    @pytest.mark.parametrize("integrator", ["euler_maruyama", "rk4"])
    def test_batch_path_matches_single_path(self, scalar_instance, noisy_model, gains, integrator):
        inst = scalar_instance
        law = ClosedLoopLaw(gains=gains)
        ens = simulate_stochastic(
            noisy_model,
            inst["M"],
            law,
            inst["x0"],
            T,
            inst["G"],
            inst["H"],
            n_paths=3,
            seed=4,
            dt=T / STEPS,
            keep=3,
            integrator=integrator,
        )
        noise = generate_noise(4, 2, np.linspace(0.0, T, STEPS + 1), 1, 4)
        single = simulate_path(noisy_model, inst["M"], law, inst["x0"], T, noise=noise, integrator=integrator)
        np.testing.assert_allclose(ens.samples[2].x, single.x, rtol=1e-9, atol=1e-9)

    def test_value_without_noise_is_optimal_cost(self, scalar_instance, gains):
        value = stochastic_value(scalar_instance["model"], gains, scalar_instance["x0"])
        assert value.total == pytest.approx(optimal_cost(gains, scalar_instance["x0"]), rel=1e-14)

    @pytest.mark.slow
    def test_mean_matches_stochastic_value(self, scalar_instance, noisy_model, gains):
        """10^4 paths: the sample mean lies within three standard errors of the analytic value."""
        inst = scalar_instance
        ens = simulate_stochastic(
            noisy_model,
            inst["M"],
            ClosedLoopLaw(gains=gains),
            inst["x0"],
            T,
            inst["G"],
            inst["H"],
            n_paths=10_000,
            seed=3,
            dt=T / (10 * STEPS),
        )
        value = stochastic_value(noisy_model, gains, inst["x0"])
        value = value.model_copy(update={"mc_mean": ens.mean, "mc_stderr": ens.stderr})
        assert ens.n_paths == 10_000
        assert abs(value.mc_z_score) < 3.0
        assert value.total > optimal_cost(gains, inst["x0"])
        assert value.aux.shape == (4,)
        assert value.eigen.shape == (2, 4)


class TestOptimality:
    @pytest.fixture
    def composite(self, gains):
        return np.stack([gains.composite_gain(float(t)) for t in gains.grid])

    def _cost(self, inst, gains, K):
        model = inst["model"]
        law = CentralizedLaw(gain=K, grid=gains.grid, d_u=model.d_u, n=inst["M"].shape[0])
        traj = simulate_deterministic(model, inst["M"], law, inst["x0"], T, T / (10 * STEPS))
        return evaluate_cost(traj, inst["G"], inst["H"], model.Q, model.R, model.Q_T).total

    def test_composite_law_attains_optimal_cost(self, scalar_instance, gains, composite):
        cost = self._cost(scalar_instance, gains, composite)
        assert cost == pytest.approx(optimal_cost(gains, scalar_instance["x0"]), rel=1e-4)

    def test_perturbed_gains_cost_more(self, scalar_instance, gains, composite):
        """Twenty random constant perturbations of the network gain never lower the cost."""
        rng = np.random.default_rng(2024)
        best = self._cost(scalar_instance, gains, composite)
        scale = float(np.abs(composite).max())
        for _ in range(20):
            delta = 0.1 * scale * rng.standard_normal(composite.shape[1:])
            assert best <= self._cost(scalar_instance, gains, composite + delta) * (1.0 + 1e-8)


def _random_instance(rng, random_coupling, kind):
    M = random_coupling(rng, int(rng.integers(2, 7)), kind)
    d_x, d_u = int(rng.integers(1, 3)), int(rng.integers(1, 3))
    S, W, U = rng.standard_normal((d_x, d_x)), rng.standard_normal((d_x, d_x)), rng.standard_normal((d_u, d_u))
    model = SystemModel.from_values(
        A=rng.standard_normal((d_x, d_x)),
        B=rng.standard_normal((d_x, d_u)),
        D=0.5 * rng.standard_normal((d_x, d_x)),
        E=0.5 * rng.standard_normal((d_x, d_u)),
        Q=S @ S.T + 0.1 * np.eye(d_x),
        Q_T=W @ W.T,
        R=U @ U.T + np.eye(d_u),
    )
    # q(s) = c (s - m)^2 + k and r(s) = 1 + e (1 + s^2) stay positive on the whole spectrum
    c, m, k, e = rng.uniform(0.2, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(0.1, 1.0), rng.uniform(0.0, 0.3)
    coupling = PolynomialCoupling(q=[c * m * m + k, -2.0 * c * m, c], r=[1.0 + e, 0.0, e])
    spec = spectral_decompose(M)
    G, H = weight_matrices(coupling, M)
    return model, M, spec, effective_weights(spec, coupling), G, H, rng.standard_normal((d_x, M.shape[0]))


@pytest.mark.slow
class TestOracleSweep:
    def test_random_instances_match_centralized(self, random_coupling):
        """50 seeded instances alternating horizons: decomposed synthesis equals the centralized solve."""
        rng = np.random.default_rng(31)
        kinds = ("full", "low_rank", "repeated", "kron")
        step = T / 200
        for i in range(50):
            model, M, spec, weights, G, H, x0 = _random_instance(rng, random_coupling, kinds[i % len(kinds)])
            finite = i % 2 == 0
            if finite:
                gains = synthesize_finite(model, spec, weights, T, step=step)
                oracle = centralized_oracle(model, M, G, H, x0, T, dt=step, step=step)
            else:
                gains = synthesize_infinite(model, spec, weights)
                oracle = centralized_oracle(model, M, G, H, x0, T, dt=step, finite=False)
                scale = 1.0 + float(np.abs(oracle.law.gain).max())
                np.testing.assert_allclose(gains.composite_gain(0.0), oracle.law.gain, atol=1e-7 * scale)
            label = (i, kinds[i % len(kinds)], finite)
            assert optimal_cost(gains, x0) == pytest.approx(oracle.optimal_value, rel=1e-7, abs=1e-10), label

            u = control_closed_loop(gains, x0, 0.0)
            np.testing.assert_allclose(u, oracle.law.control(0.0, x0), atol=1e-7 * (1.0 + np.abs(u).max()))

            traj = simulate_deterministic(model, M, ClosedLoopLaw(gains=gains), x0, T, step)
            cost = evaluate_cost(traj, G, H, model.Q, model.R, model.Q_T if finite else None)
            assert cost.total == pytest.approx(oracle.cost.total, rel=1e-7, abs=1e-10), label
