import numpy as np
import pytest
from scipy.signal import lfilter

import levmap as lm
from levmap.errors import DegenerateError, DomainError
from levmap.simulate import TrajectoryKind, leverage_to_phi_values


class TestReduced:
    def test_noise_disabled_equals_deterministic_orbit(self, chaotic_params):
        traj = lm.simulate_reduced(chaotic_params, 0.4, 50, seed=0, noise=False)
        assert traj.kind is TrajectoryKind.DETERMINISTIC
        x = 0.4
        for t, v in enumerate(traj.values):
            assert v == pytest.approx(x, abs=1e-14)
            x = lm.iterate_T(chaotic_params, x, 1)

    def test_fixed_point_constant_without_noise(self, chaotic_params):
        traj = lm.simulate_reduced(chaotic_params, chaotic_params.phi_star, 20,
                                   seed=0, noise=False)
        assert np.allclose(traj.values, chaotic_params.phi_star, atol=1e-12)

    def test_seed_determinism(self, chaotic_params):
        a = lm.simulate_reduced(chaotic_params, 0.5, 500, seed=42)
        b = lm.simulate_reduced(chaotic_params, 0.5, 500, seed=42)
        assert np.array_equal(a.values, b.values)
        c = lm.simulate_reduced(chaotic_params, 0.5, 500, seed=43)
        assert not np.array_equal(a.values, c.values)

    def test_stride_consistency(self, chaotic_params):
        full = lm.simulate_reduced(chaotic_params, 0.5, 400, stride_k=1, seed=9)
        strided = lm.simulate_reduced(chaotic_params, 0.5, 400, stride_k=2, seed=9)
        assert np.array_equal(strided.values, full.values[::2])

    def test_positivity_confinement(self, chaotic_params):
        kernel = lm.NoiseKernel(chaotic_params)
        traj = lm.simulate_reduced(chaotic_params, 0.5, 20_000, seed=5,
                                   kernel=kernel)
        p = chaotic_params
        s_max_val = kernel.support_radius(np.linspace(0, 1, 2001)).max()
        assert np.all(traj.values > 0.0)
        assert np.all(traj.values < 1.0 - p.gap / 2.0 + s_max_val)

    def test_domain_errors(self, chaotic_params):
        with pytest.raises(DomainError):
            lm.simulate_reduced(chaotic_params, 0.0, 10)
        with pytest.raises(DomainError):
            lm.simulate_reduced(chaotic_params, 0.5, 0)

    def test_csv_and_envelope(self, chaotic_params, tmp_path):
        traj = lm.simulate_reduced(chaotic_params, 0.5, 30, seed=1)
        out = tmp_path / "traj.csv"
        traj.to_csv(out)
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "t,value"
        assert len(lines) == len(traj.values) + 1
        env = traj.envelope()
        assert env["seed"] == 1 and env["params"]["phi_star"] == 0.845


class TestAr1Mle:
    def test_white_noise_phi_near_zero(self):
        rng = np.random.default_rng(2)
        series = rng.standard_normal(10_000)
        phi_hat, sigma_hat = lm.ar1_mle(series)
        assert abs(phi_hat) < 0.05
        assert sigma_hat == pytest.approx(1.0, rel=0.05)

    def test_geometric_series_exact(self):
        phi = 0.73
        series = 2.0 * phi ** np.arange(40)
        phi_hat, sigma_hat = lm.ar1_mle(series)
        assert phi_hat == pytest.approx(phi, abs=1e-14)
        assert sigma_hat == pytest.approx(0.0, abs=1e-14)

    def test_degenerate_inputs(self):
        with pytest.raises(DegenerateError):
            lm.ar1_mle([1.0, 2.0])
        with pytest.raises(DegenerateError):
            lm.ar1_mle(np.zeros(10))

    def test_asymptotic_standard_deviation(self):
        # std of phi_hat across replications ~ sqrt((1 - phi^2)/n)
        phi, n, reps = 0.5, 1000, 1000
        rng = np.random.default_rng(4)
        eps = rng.standard_normal((reps, n))
        r0 = rng.standard_normal(reps) / np.sqrt(1 - phi * phi)
        series = lfilter([1.0], [1.0, -phi], eps, axis=1,
                         zi=(phi * r0)[:, None])[0]
        series = np.concatenate([r0[:, None], series], axis=1)
        estimates = np.array([lm.ar1_mle(row)[0] for row in series])
        expected = np.sqrt((1 - phi * phi) / n)
        assert estimates.std(ddof=1) == pytest.approx(expected, rel=0.15)


class TestAggregatedVariance:
    def test_phi_zero(self):
        assert lm.aggregated_variance(0.0, 1.3, 7) == pytest.approx(7 * 1.3 ** 2)

    def test_against_autocovariance_sum_oracle(self):
        # Var(sum r_k) from the stationary AR(1) autocovariances, O(n^2)
        for phi, sigma, n in [(0.7, 1.3, 17), (-0.4, 0.5, 9), (0.95, 2.0, 64)]:
            gamma0 = sigma ** 2 / (1 - phi ** 2)
            brute = 0.0
            for i in range(n):
                for j in range(n):
                    brute += gamma0 * phi ** abs(i - j)
            assert lm.aggregated_variance(phi, sigma, n) == \
                pytest.approx(brute, rel=1e-10)

    def test_single_step_is_stationary_variance(self):
        phi, sigma = 0.6, 0.8
        assert lm.aggregated_variance(phi, sigma, 1) == \
            pytest.approx(sigma ** 2 / (1 - phi ** 2), rel=1e-12)

    def test_domain_error(self):
        with pytest.raises(DomainError):
            lm.aggregated_variance(1.0, 1.0, 5)


class TestSlowFast:
    def test_omega_one_keeps_leverage_constant(self):
        cfg = lm.SlowFastConfig(alpha_var=1.64, sigma_eps_sq_agg=1e-4,
                                gamma_liq=10.0, omega=1.0, n_rebalance=50,
                                lambda0=3.0)
        traj = lm.simulate_slowfast(cfg, 100, seed=0)
        assert np.allclose(traj.values, 3.0, atol=1e-12)

    def test_fixed_point_tracking(self):
        cfg = lm.slowfast_config_for(0.6, 0.4, n_rebalance=2000, gamma_liq=100.0)
        lam_star = 1.0 + cfg.gamma_liq * cfg.implied_phi_star()
        traj = lm.simulate_slowfast(cfg, 1000, seed=8)
        phis = leverage_to_phi_values(traj.values, cfg.gamma_liq)[1:]
        se = phis.std(ddof=1) / np.sqrt(len(phis))
        assert abs(phis.mean() - cfg.implied_phi_star()) < 3 * se + 5e-4
        assert traj.meta["clamped_updates"] == 0
        assert cfg.lambda0 == pytest.approx(lam_star)

    def test_one_step_matches_reduced_map(self):
        # slow-fast step from a common state vs the reduced map's prediction:
        # mean within sampling error of T(phi0), std close to sigma_n(phi0)
        phi_star, omega, n = 0.7, 0.5, 10_000
        cfg = lm.slowfast_config_for(phi_star, omega, n_rebalance=n,
                                     gamma_liq=100.0)
        phi0 = 0.55
        cfg0 = lm.SlowFastConfig(alpha_var=cfg.alpha_var,
                                 sigma_eps_sq_agg=cfg.sigma_eps_sq_agg,
                                 gamma_liq=cfg.gamma_liq, omega=omega,
                                 n_rebalance=n,
                                 lambda0=1.0 + cfg.gamma_liq * phi0)
        seeds = range(100)
        steps1 = np.array([
            leverage_to_phi_values(lm.simulate_slowfast(cfg0, 1, seed=s).values,
                                   cfg.gamma_liq)[1]
            for s in seeds])
        params = lm.make_params(phi_star, omega, n)
        kernel = lm.NoiseKernel(params)
        t_phi0 = lm.eval_T(params, phi0)
        sig = kernel.sigma_n(phi0)
        # reduction bias is O(1/sqrt(n)); measured ~0.0024 at n = 1e4
        assert abs(steps1.mean() - t_phi0) < 1.0 / np.sqrt(n) \
            + 4 * steps1.std(ddof=1) / np.sqrt(len(steps1))
        assert steps1.std(ddof=1) == pytest.approx(sig, rel=0.35)

    def test_conditional_std_scales_like_inverse_sqrt_n(self):
        phi_star, omega, phi0 = 0.7, 0.5, 0.55
        stds = []
        ns = [100, 1000, 10_000]
        for n in ns:
            cfg = lm.slowfast_config_for(phi_star, omega, n_rebalance=n,
                                         gamma_liq=100.0)
            cfg0 = lm.SlowFastConfig(alpha_var=cfg.alpha_var,
                                     sigma_eps_sq_agg=cfg.sigma_eps_sq_agg,
                                     gamma_liq=cfg.gamma_liq, omega=omega,
                                     n_rebalance=n,
                                     lambda0=1.0 + cfg.gamma_liq * phi0)
            vals = np.array([
                leverage_to_phi_values(
                    lm.simulate_slowfast(cfg0, 1, seed=1000 + s).values,
                    cfg.gamma_liq)[1]
                for s in range(120)])
            stds.append(vals.std(ddof=1))
        slope = np.polyfit(np.log(ns), np.log(stds), 1)[0]
        assert slope == pytest.approx(-0.5, abs=0.1)

    def test_reproducible(self):
        cfg = lm.slowfast_config_for(0.6, 0.4, n_rebalance=100)
        a = lm.simulate_slowfast(cfg, 50, seed=3)
        b = lm.simulate_slowfast(cfg, 50, seed=3)
        assert np.array_equal(a.values, b.values)
