import numpy as np
import pytest
from scipy.optimize import brentq

import levmap as lm
from levmap.errors import DegenerateError
from levmap.measure import Density


class TestDeterministic:
    @pytest.mark.parametrize("phi,om,expected", [
        (0.845, 0.557, 0.340),
        (0.258, 0.837, -0.248),
        (0.904, 0.627, 0.552),
    ])
    def test_benchmark_values(self, phi, om, expected):
        val = lm.lyap_deterministic(lm.make_params(phi, om), steps=300_000)
        assert val == pytest.approx(expected, abs=0.01)

    def test_degenerate_at_critical_start(self, chaotic_params):
        with pytest.raises(DegenerateError):
            lm.lyap_deterministic(chaotic_params, x0=chaotic_params.critical,
                                  steps=1000, transient=0)


class TestFromDensity:
    def test_cross_method_consistency(self):
        params = lm.make_params(0.845, 0.557, 1000.0)
        kernel = lm.NoiseKernel(params)
        dens = lm.stationary_density(lm.ulam_matrix(kernel, 2048),
                                     support=lm.support_interval(kernel))
        quad_val = lm.lyap_average_from_density(params, dens)
        rep = lm.lyap_average(kernel, realizations=64, steps=5000, seed=0)
        assert quad_val == pytest.approx(rep.ale, abs=0.01 + 2 * rep.std_error)

    def test_point_mass_at_fixed_point(self, periodic_params):
        fp = brentq(lambda x: lm.eval_T(periodic_params, x) - x, 0.05, 0.99)
        bins = 2048
        w = np.zeros(bins)
        w[int(fp * bins)] = 1.0
        val = lm.lyap_average_from_density(periodic_params, Density(bins, w))
        expected = np.log(abs(lm.eval_T_prime(periodic_params, fp)))
        assert val < 0.0
        assert val == pytest.approx(expected, abs=0.02)

    def test_point_mass_where_slope_is_unit(self):
        params = lm.make_params(0.845, 0.557)
        x_unit = brentq(lambda x: abs(lm.eval_T_prime(params, x)) - 1.0,
                        1e-6, params.critical)
        bins = 4096
        w = np.zeros(bins)
        w[int(x_unit * bins)] = 1.0
        val = lm.lyap_average_from_density(params, Density(bins, w))
        assert val == pytest.approx(0.0, abs=0.02)


class TestMonteCarlo:
    def test_ale_matches_benchmark(self):
        kernel = lm.NoiseKernel(lm.make_params(0.845, 0.557, 1.0))
        rep = lm.lyap_average(kernel, realizations=64, steps=4000, seed=1)
        assert rep.ale == pytest.approx(0.287, abs=0.02)
        assert rep.std_error > 0.0

    def test_rle_matches_ale_at_moderate_noise(self):
        kernel = lm.NoiseKernel(lm.make_params(0.845, 0.557, 1000.0))
        a = lm.lyap_average(kernel, realizations=48, steps=4000, seed=5)
        r = lm.lyap_random(kernel, realizations=48, steps=4000, seed=6)
        tol = 0.01 + 2 * (a.std_error + r.rle_std_error)
        assert r.rle == pytest.approx(a.ale, abs=tol)

    def test_infinite_n_reproduces_deterministic(self):
        params = lm.make_params(0.845, 0.557, float("inf"))
        kernel = lm.NoiseKernel(params)
        rep = lm.lyap_average(kernel, realizations=8, steps=20_000, seed=2)
        det = lm.lyap_deterministic(params.with_n(1.0), steps=300_000)
        assert rep.ale == pytest.approx(det, abs=0.01)


class TestBifurcationScan:
    def test_fixed_point_window_collapses(self):
        phis, kept, skipped = lm.bifurcation_scan(0.5, (0.70, 0.70), 1,
                                                  iterates_kept=50)
        assert not skipped
        assert np.ptp(kept[0]) < 1e-6

    def test_two_cycle_window(self):
        # benchmark C2 point with an attracting 2-cycle
        cycle = lm.find_attracting_cycle(lm.make_params(0.908, 0.804))
        assert cycle is not None and cycle[0] == 2
        _, kept, _ = lm.bifurcation_scan(0.804, (0.908, 0.908), 1,
                                         iterates_kept=64)
        vals = np.sort(kept[0])
        clusters = np.count_nonzero(np.diff(vals) > 1e-6) + 1
        assert clusters == 2

    def test_core_window_mixes_periodic_and_spread(self):
        phis, kept, skipped = lm.bifurcation_scan(0.5, (0.80, 0.86), 25,
                                                  iterates_kept=80)
        clusters = np.array([
            np.count_nonzero(np.diff(np.sort(row)) > 1e-9) + 1 for row in kept])
        assert clusters.max() == 80        # chaotic columns: all iterates distinct
        assert clusters.min() <= 8         # periodic columns: a short cycle

    def test_inadmissible_points_reported(self):
        phis, kept, skipped = lm.bifurcation_scan(0.01, (0.3, 0.9), 7,
                                                  iterates_kept=10)
        assert skipped                      # small omega has inadmissible cells
        assert np.isnan(kept[[list(phis).index(s) for s in skipped]]).all()


class TestSweep:
    def test_grid_covers_all_cells(self):
        rows = lm.sweep_grid(np.linspace(0.6, 0.95, 4),
                             np.linspace(0.05, 0.6, 4),
                             n_rebalance=1.0, realizations=4, steps=500)
        assert len(rows) == 16
        flagged = [r for r in rows if not r["admissible"]]
        computed = [r for r in rows if r["admissible"]]
        assert all("error" in r for r in flagged)
        assert all(np.isfinite(r["ale"]) for r in computed)

    def test_deterministic_sweep_has_det_column(self):
        rows = lm.sweep_grid([0.845], [0.557], n_rebalance=float("inf"),
                             steps=2000)
        assert rows[0]["det"] == pytest.approx(0.340, abs=0.02)
        assert rows[0]["regime"] == "C3_DynamicalCore"
