import numpy as np
import pytest
from scipy.linalg import solve_discrete_lyapunov
from scipy.stats import ttest_ind

from outgraph.simulate import (
    ScenarioSpec,
    SimulatedData,
    _haar_orthogonal,
    algorithm1_var,
    gen_setting1,
    gen_setting2,
    gen_setting3,
    gen_sparse_precision,
    oracle_one_step,
    run_benchmark,
    simulate_scenario,
)


class TestSparsePrecision:
    def test_zero_sparsity_limit_is_diagonal(self):
        rng = np.random.default_rng(0)
        omega, adjacency = gen_sparse_precision(12, 0.0, rng, ring_degree=0, rewire=0.0)
        assert not adjacency.any()
        np.testing.assert_array_equal(omega, np.diag(np.diag(omega)))

    def test_achieved_fraction_near_target(self):
        p, target = 60, 0.05
        iu = np.triu_indices(p, 1)
        fracs = [
            gen_sparse_precision(p, target, np.random.default_rng(s))[1][iu].mean()
            for s in range(50)
        ]
        assert abs(np.mean(fracs) - target) <= 0.2 * target

    def test_spd_over_seeds(self):
        for s in range(100):
            omega, _ = gen_sparse_precision(60, 0.05, np.random.default_rng(s))
            eig = np.linalg.eigvalsh(omega)
            assert eig[0] > 0
            assert eig[-1] / eig[0] <= 1e4

    def test_adjacency_matches_support(self):
        omega, adjacency = gen_sparse_precision(20, 0.1, np.random.default_rng(3))
        off = ~np.eye(20, dtype=bool)
        np.testing.assert_array_equal(adjacency, (omega != 0) & off)

    def test_infeasible_sparsity(self):
        with pytest.raises(ValueError):
            gen_sparse_precision(10, 1.5, np.random.default_rng(0))
        with pytest.raises(ValueError):
            # below one representable edge
            gen_sparse_precision(4, 0.05, np.random.default_rng(0))


class TestSetting1:
    def test_latent_variance_near_one(self):
        spec = ScenarioSpec(p=8, T=500, setting=1, sparsity=0.1, seed=1)
        data = simulate_scenario(spec)
        L, d, U = data.truth["L"], data.truth["d"], data.U_true
        Z = U.T @ (d[:, None] * (data.Y - L.T @ data.Y))
        np.testing.assert_allclose(np.var(Z, axis=1), 1.0, atol=0.15 + 0.25)

    def test_lag1_autocorrelation(self):
        spec = ScenarioSpec(p=6, T=500, setting=1, sparsity=0.1, seed=2)
        data = simulate_scenario(spec)
        L, d, U = data.truth["L"], data.truth["d"], data.U_true
        Z = U.T @ (d[:, None] * (data.Y - L.T @ data.Y))
        for j in range(6):
            z = Z[j] - Z[j].mean()
            acf1 = (z[:-1] @ z[1:]) / (z @ z)
            assert abs(acf1 - data.truth["phi"][j]) < 0.12

    def test_marginal_covariance_matches_truth(self):
        spec = ScenarioSpec(p=10, T=2000, setting=1, sparsity=0.1, seed=3)
        data = simulate_scenario(spec)
        target = np.linalg.inv(data.omega_true)
        S = np.cov(data.Y)
        assert np.linalg.norm(S - target) / np.linalg.norm(target) <= 0.3

    def test_acvf_lag_symmetry(self):
        # Gamma(h) and Gamma(-h)^T agree for the mixed series
        spec = ScenarioSpec(p=5, T=4000, setting=1, sparsity=0.1, seed=4)
        data = simulate_scenario(spec)
        Y = data.Y - data.Y.mean(axis=1, keepdims=True)
        h = 2
        g_pos = Y[:, :-h] @ Y[:, h:].T / (Y.shape[1] - h)
        assert np.linalg.norm(g_pos - g_pos.T) / np.linalg.norm(g_pos) < 0.35

    def test_public_signature(self):
        Y, omega, U = gen_setting1(ScenarioSpec(p=5, T=50, setting=1, sparsity=0.2, seed=0))
        assert Y.shape == (5, 50) and omega.shape == (5, 5) and U.shape == (5, 5)
        with pytest.raises(ValueError):
            gen_setting1(ScenarioSpec(p=5, T=50, setting=2, sparsity=0.2, seed=0))


class TestSetting2:
    def test_closed_form_unit_variance(self):
        # gamma(0) = sig2 (1 + 2 th phi + th^2) / (1 - phi^2) = 1 by algebra
        rng = np.random.default_rng(5)
        for _ in range(100):
            phi = rng.uniform(0.9, 1.0) * rng.choice([-1, 1])
            th = rng.uniform(0.9, 1.0) * rng.choice([-1, 1])
            sig2 = (1 - phi**2) / (1 + 2 * th * phi + th**2)
            gamma0 = sig2 * (1 + 2 * th * phi + th**2) / (1 - phi**2)
            assert gamma0 == pytest.approx(1.0, rel=1e-12)

    def test_causal_coefficients(self):
        data = simulate_scenario(ScenarioSpec(p=12, T=50, setting=2, sparsity=0.1, seed=6))
        assert np.all(np.abs(data.truth["phi"]) < 1)
        assert np.all(np.abs(data.truth["phi"]) > 0.9)

    def test_sample_variance_near_one(self):
        spec = ScenarioSpec(p=6, T=2000, setting=2, sparsity=0.1, seed=7)
        data = simulate_scenario(spec)
        L, d, U = data.truth["L"], data.truth["d"], data.U_true
        Z = U.T @ (d[:, None] * (data.Y - L.T @ data.Y))
        np.testing.assert_allclose(np.var(Z, axis=1), 1.0, atol=0.45)

    def test_public_signature(self):
        Y, omega, U = gen_setting2(ScenarioSpec(p=4, T=40, setting=2, sparsity=0.2, seed=0))
        assert Y.shape == (4, 40)


class TestAlgorithm1:
    def test_zero_K_collapses_to_white_noise(self):
        rng = np.random.default_rng(8)
        omega, _ = gen_sparse_precision(5, 0.2, rng)
        system = algorithm1_var(omega, np.zeros((5, 5)), np.eye(5))
        np.testing.assert_allclose(system.Phi, 0.0, atol=1e-12)
        np.testing.assert_allclose(system.Sigma_e, np.linalg.inv(omega), atol=1e-10)

    def test_lyapunov_against_scipy(self):
        rng = np.random.default_rng(9)
        omega, _ = gen_sparse_precision(5, 0.2, rng)
        system = algorithm1_var(omega, rng.standard_normal((5, 5)), _haar_orthogonal(5, rng))
        gamma0 = solve_discrete_lyapunov(system.Phi, system.Sigma_e)
        np.testing.assert_allclose(gamma0, np.linalg.inv(omega), atol=1e-8)

    @pytest.mark.parametrize("p", [5, 10])
    def test_stationarity_over_100_seeds(self, p):
        for s in range(100):
            rng = np.random.default_rng(s)
            omega, _ = gen_sparse_precision(p, 0.1, rng)
            system = algorithm1_var(
                omega, rng.standard_normal((p, p)), _haar_orthogonal(p, rng)
            )
            C0 = np.linalg.inv(omega)
            resid = np.linalg.norm(C0 - system.Phi @ C0 @ system.Phi.T - system.Sigma_e)
            assert system.spectral_radius < 1
            assert resid <= 1e-8 * np.linalg.norm(C0)
            assert np.linalg.eigvalsh(system.Sigma_e)[0] > 0


class TestSetting3:
    def test_long_run_precision(self):
        data = simulate_scenario(ScenarioSpec(p=10, T=5000, setting=3, sparsity=0.1, seed=10))
        prec_hat = np.linalg.inv(np.cov(data.Y))
        err = np.linalg.norm(prec_hat - data.omega_true) / np.linalg.norm(data.omega_true)
        assert err <= 0.3

    def test_burnin_independence_of_start(self):
        # same system, two different seeds: sample means indistinguishable
        a = simulate_scenario(ScenarioSpec(p=5, T=800, setting=3, sparsity=0.1, seed=11))
        b = simulate_scenario(ScenarioSpec(p=5, T=800, setting=3, sparsity=0.1, seed=11))
        np.testing.assert_array_equal(a.Y, b.Y)  # determinism
        c = simulate_scenario(ScenarioSpec(p=5, T=800, setting=3, sparsity=0.1, seed=12))
        # different draw, same stationary law: compare series means
        t = ttest_ind(a.Y.mean(axis=0), c.Y.mean(axis=0))
        assert t.pvalue > 0.01

    def test_public_signature(self):
        Y, omega = gen_setting3(ScenarioSpec(p=4, T=40, setting=3, sparsity=0.2, seed=0))
        assert Y.shape == (4, 40) and omega.shape == (4, 4)


class TestOracleForecast:
    def test_setting3_oracle_is_var_step(self):
        data = simulate_scenario(ScenarioSpec(p=4, T=60, setting=3, sparsity=0.2, seed=13), extra=1)
        expect = data.truth["system"].Phi @ data.Y[:, -2]
        np.testing.assert_allclose(oracle_one_step(data), expect, atol=1e-12)

    def test_oracle_beats_zero_forecast_on_persistent_series(self):
        # strong dependence: the oracle must beat predicting zero
        wins = 0
        for seed in range(8):
            data = simulate_scenario(
                ScenarioSpec(p=6, T=200, setting=2, sparsity=0.1, seed=seed), extra=1
            )
            y_next = data.Y[:, -1]
            mse_oracle = np.mean((oracle_one_step(data) - y_next) ** 2)
            mse_zero = np.mean(y_next**2)
            wins += mse_oracle < mse_zero
        assert wins >= 6


class TestBenchmark:
    def test_zero_cells_empty_rows(self):
        assert run_benchmark([], replicates=3, prior_kw={}, samp_kw={}) == []

    def test_single_cell_aggregates(self):
        samp_kw = dict(
            total=260, burnin=200, thin=2, spectral_only=20, full_at=80,
            shrink_start=40, truncate_at=120,
        )
        rows = run_benchmark(
            [{"setting": 1, "p": 6, "T": 40, "sparsity": 0.1}],
            replicates=2,
            prior_kw={"K": 6, "R": 3},
            samp_kw=samp_kw,
            base_seed=5,
        )
        assert len(rows) == 1
        row = rows[0]
        assert row["n_ok"] == 2
        assert np.isfinite(row["out_mse"]) and np.isfinite(row["baseline_mse"])

    def test_worker_count_does_not_change_results(self):
        samp_kw = dict(
            total=140, burnin=100, thin=2, spectral_only=10, full_at=40,
            shrink_start=20, truncate_at=60,
        )
        cells = [{"setting": 1, "p": 5, "T": 40, "sparsity": 0.1},
                 {"setting": 3, "p": 5, "T": 40, "sparsity": 0.1}]
        kw = dict(replicates=2, prior_kw={"K": 6, "R": 3}, samp_kw=samp_kw, base_seed=1)
        serial = run_benchmark(cells, workers=1, **kw)
        parallel = run_benchmark(cells, workers=2, **kw)
        assert serial == parallel

    def test_failed_cell_is_isolated(self):
        samp_kw = dict(
            total=140, burnin=100, thin=2, spectral_only=10, full_at=40,
            shrink_start=20, truncate_at=60,
        )
        rows = run_benchmark(
            [{"setting": 1, "p": 5, "T": 6, "sparsity": 0.1},   # T too small: fails
             {"setting": 1, "p": 5, "T": 40, "sparsity": 0.1}],
            replicates=1, prior_kw={"K": 6, "R": 3}, samp_kw=samp_kw,
        )
        assert rows[0]["n_ok"] == 0 and rows[0]["failures"]
        assert np.isnan(rows[0]["out_mse"])
        assert rows[1]["n_ok"] == 1
