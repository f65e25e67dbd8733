import math

import numpy as np
import pytest
from scipy import integrate, stats

from outgraph.kernels import hard_threshold, soft_threshold
from outgraph.params import cayley_rotation, skew_from_packed, effective_A
from outgraph.priors import (
    PriorConfig,
    RIDGE,
    logprior_A,
    logprior_d,
    logprior_delta_terms,
    logprior_L,
    logprior_spectral,
    logprior_state,
    sample_d,
    sample_prior,
    second_difference_penalty,
)
from outgraph.spectral import SpectralCoeffs, theta_from_lowrank


class TestInverseGaussian:
    def test_kernel_at_location(self):
        loc = 2.0
        val = logprior_d(np.array([loc]), loc)
        log_c = math.log(loc) - 0.5 * math.log(2 * math.pi)
        assert val == pytest.approx(log_c - 1.5 * math.log(loc))

    def test_normalizer_against_quadrature(self):
        loc = 2.0
        kernel = lambda t: t ** (-1.5) * np.exp(-((t - loc) ** 2) / (2 * t))
        integral, err = integrate.quad(kernel, 0, np.inf)
        # cached constant C = loc / sqrt(2 pi): C * integral must be 1
        c = loc / math.sqrt(2 * math.pi)
        assert c * integral == pytest.approx(1.0, abs=1e-8)

    def test_sampler_mean(self):
        rng = np.random.default_rng(0)
        draws = sample_d(2.0, 100_000, rng)
        assert draws.mean() == pytest.approx(2.0, abs=0.02)
        assert np.all(draws > 0)

    def test_sampler_matches_density(self):
        # exact sampler and the log-density describe the same law; compare
        # bin counts against the bin-integrated density
        rng = np.random.default_rng(1)
        draws = sample_d(1.5, 200_000, rng)
        hist, edges = np.histogram(draws, bins=60, range=(0.01, 6), density=True)
        dens = np.exp([logprior_d(np.array([t]), 1.5) for t in edges])
        bin_avg = 0.5 * (dens[:-1] + dens[1:])  # trapezoid within each bin
        mask = hist > 0.05
        assert np.max(np.abs(hist[mask] - bin_avg[mask]) / bin_avg[mask]) < 0.1

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            logprior_d(np.array([-1.0]), 1.0)
        with pytest.raises(ValueError):
            logprior_d(np.array([1.0]), -1.0)


class TestLatentGaussianPriors:
    def test_all_zero_entries(self):
        p, sigma = 4, 1.3
        L = np.zeros((p, p))
        expect = p * (p - 1) / 2 * (-math.log(math.sqrt(2 * math.pi) * sigma))
        assert logprior_L(L, 0.5, sigma) == pytest.approx(expect)

    def test_single_entry_at_sigma(self):
        sigma = 0.7
        L = np.zeros((2, 2))
        L[1, 0] = sigma
        expect = -0.5 - math.log(math.sqrt(2 * math.pi) * sigma)
        assert logprior_L(L, 0.0, sigma) == pytest.approx(expect)

    def test_hard_threshold_zero_fraction(self):
        # P(effective entry = 0 | lam) = Phi(lam/sigma) - Phi(-lam/sigma)
        rng = np.random.default_rng(2)
        sigma = 0.8
        lam = sigma
        z = rng.normal(0, sigma, 100_000)
        frac = np.mean(hard_threshold(z, lam) == 0.0)
        expect = stats.norm.cdf(1.0) - stats.norm.cdf(-1.0)
        assert frac == pytest.approx(expect, abs=0.01)

    def test_soft_threshold_zero_fraction(self):
        rng = np.random.default_rng(3)
        sigma = 1.1
        lam = sigma
        z = rng.normal(0, sigma, 100_000)
        frac = np.mean(soft_threshold(z, lam) == 0.0)
        expect = stats.norm.cdf(1.0) - stats.norm.cdf(-1.0)
        assert frac == pytest.approx(expect, abs=0.01)

    def test_logprior_A_matches_L_form(self, rng):
        a = rng.standard_normal(6)
        L = np.zeros((4, 4))
        L[np.tril_indices(4, -1)] = a
        assert logprior_A(a, 0.2, 1.0) == pytest.approx(logprior_L(L, 0.2, 1.0))


class TestSecondDifferencePenalty:
    def test_annihilates_affine(self):
        K = 10
        P, _ = second_difference_penalty(K)
        k = np.arange(K)
        for a, b in ((1.0, 0.0), (0.0, 2.0), (-1.5, 0.3)):
            eta = a + b * k
            assert eta @ P @ eta == pytest.approx(0.0, abs=1e-9)

    def test_only_affine_in_null_space(self):
        K = 10
        P, _ = second_difference_penalty(K)
        vals, vecs = np.linalg.eigh(P)
        null = vecs[:, vals < 1e-10]
        assert null.shape[1] == 2
        # null space spanned by (1, k): residual of projection is zero
        k = np.arange(K)
        basis = np.stack([np.ones(K), k], axis=1)
        proj = null @ (null.T @ basis)
        np.testing.assert_allclose(proj, basis, atol=1e-8)

    def test_hand_stencil_case(self):
        P, _ = second_difference_penalty(4)
        eta = np.array([0.0, 1.0, 0.0, 0.0])
        # Q eta = (-2, 1): squared norm 5
        assert eta @ P @ eta == pytest.approx(5.0)

    def test_rank(self):
        K = 10
        P, logpdet = second_difference_penalty(K)
        vals = np.linalg.eigvalsh(P)
        assert np.sum(vals > 1e-10) == K - 2
        assert logpdet == pytest.approx(np.sum(np.log(vals[vals > 1e-10])))

    def test_small_K_rejected(self):
        with pytest.raises(ValueError):
            second_difference_penalty(3)


class TestSpectralPrior:
    def test_zero_xi_part(self):
        p, K, R = 3, 5, 2
        config = PriorConfig(K=K, R=R)
        xi = np.zeros((p, R))
        eta = np.zeros((K, R))
        v = np.ones((p, R))
        delta = np.ones(R)
        total = logprior_spectral(xi, eta, v, delta, 1.0, config)
        # xi-part alone: pR * log(1/sqrt(2 pi)); check it is embedded
        xi_part = -p * R * 0.5 * math.log(2 * math.pi)
        rest = total - xi_part
        assert np.isfinite(rest)
        # with unit latents the xi normal terms have zero quadratic part
        total_shift = logprior_spectral(xi + 1.0, eta, v, delta, 1.0, config)
        assert total - total_shift == pytest.approx(0.5 * p * R, rel=1e-12)

    def test_tau_monotone(self, rng):
        delta = rng.uniform(1.01, 3.0, 6)
        tau = np.cumprod(delta)
        assert np.all(np.diff(tau) > 0)

    def test_expected_tau3(self):
        # E[tau_3] = kappa1 * kappa2^2 = 2.1 * 3.1^2 = 20.181
        rng = np.random.default_rng(4)
        n = 100_000
        d1 = rng.gamma(2.1, 1.0, n)
        d2 = rng.gamma(3.1, 1.0, n)
        d3 = rng.gamma(3.1, 1.0, n)
        assert np.mean(d1 * d2 * d3) == pytest.approx(20.181, abs=0.5)

    def test_positivity_required(self):
        config = PriorConfig(K=5, R=2)
        with pytest.raises(ValueError):
            logprior_spectral(
                np.zeros((2, 2)), np.zeros((5, 2)), -np.ones((2, 2)),
                np.ones(2), 1.0, config,
            )

    def test_delta_terms_match_full_density(self, rng):
        # the cheap delta-only target differs from the full spectral prior
        # by a constant in delta
        config = PriorConfig(K=5, R=3)
        xi = rng.standard_normal((4, 3))
        v = rng.uniform(0.5, 2, (4, 3))
        eta = rng.standard_normal((5, 3))
        d1, d2 = rng.uniform(0.5, 2, 3), rng.uniform(0.5, 2, 3)
        full = lambda d: logprior_spectral(xi, eta, v, d, 1.0, config)
        cheap = lambda d: logprior_delta_terms(d, xi, v, config)
        assert full(d1) - full(d2) == pytest.approx(cheap(d1) - cheap(d2), rel=1e-10)


class TestSamplePrior:
    def test_zero_fraction_of_effective_L(self):
        rng = np.random.default_rng(5)
        config = PriorConfig(K=6, R=3)
        count = zero = 0
        for _ in range(80):
            state = sample_prior(config, 18, rng)
            eff = hard_threshold(state.L_raw, state.thresholds.lam)
            low = np.tril_indices(18, -1)
            expect = stats.norm.cdf(state.thresholds.lam) - stats.norm.cdf(
                -state.thresholds.lam
            )
            zero += np.mean(eff[low] == 0.0)
            count += expect
        assert zero / 80 == pytest.approx(count / 80, abs=0.01)

    def test_rotation_always_orthogonal(self):
        rng = np.random.default_rng(6)
        config = PriorConfig(K=5, R=2)
        for _ in range(20):
            state = sample_prior(config, 6, rng)
            A = skew_from_packed(
                effective_A(state.a_raw, state.thresholds.lam_alt), 6
            )
            U = cayley_rotation(A)
            assert np.linalg.norm(U @ U.T - np.eye(6)) <= 1e-10

    def test_theta_rows_exact(self):
        rng = np.random.default_rng(7)
        config = PriorConfig(K=7, R=4)
        state = sample_prior(config, 5, rng)
        theta = theta_from_lowrank(SpectralCoeffs(xi=state.xi, eta=state.eta))
        np.testing.assert_allclose(theta.sum(axis=1), 0.5, atol=1e-12)

    def test_density_finite_on_draws(self):
        rng = np.random.default_rng(8)
        config = PriorConfig(K=5, R=3)
        penalty = second_difference_penalty(5)[0] + RIDGE * np.eye(5)
        for _ in range(200):
            state = sample_prior(config, 4, rng)
            assert np.isfinite(logprior_state(state, config, penalty))

    def test_thresholds_within_bounds(self):
        rng = np.random.default_rng(9)
        config = PriorConfig(K=5, R=2, lam_lo=0.0, lam_hi=2.0)
        for _ in range(50):
            state = sample_prior(config, 4, rng)
            assert 0.0 <= state.thresholds.lam <= 2.0
            assert 0.0 <= state.thresholds.lam_alt <= 2.0


class TestPriorConfig:
    def test_bad_scales(self):
        with pytest.raises(ValueError):
            PriorConfig(sigma_T=-1.0)
        with pytest.raises(ValueError):
            PriorConfig(lam_lo=2.0, lam_hi=1.0)
        with pytest.raises(ValueError):
            PriorConfig(K=3)
