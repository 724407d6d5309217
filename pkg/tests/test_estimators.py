import math

import numpy as np
import pytest

from rank1sphere.core import Dimensions, Hyperparams, generate_instance, make_rng
from rank1sphere.gibbs import (GibbsChain, GibbsOverlapOracle, GibbsParams, batch_means,
                               cumulative_trapezoid, estimate_matrix_mmse, estimate_mmse,
                               gauge_fixed_overlap, integrated_autocorr_time, nishimori_check,
                               overlap_variance_diagnostic, run_chain, thermo_integration_mi)
from rank1sphere.gibbs.estimators import _mixing_flags
from rank1sphere.theory import limit_mmse

FAST = GibbsParams(burn_in=100, n_samples=600, thinning=1)


def _ar1(phi, n, seed):
    rng = make_rng(seed)
    x = np.empty(n)
    x[0] = rng.standard_normal() / math.sqrt(1 - phi ** 2)
    e = rng.standard_normal(n)
    for t in range(1, n):
        x[t] = phi * x[t - 1] + e[t]
    return x


class TestTimeSeries:
    def test_autocorr_time_ar1(self):
        x = _ar1(0.9, 200_000, 0)
        assert integrated_autocorr_time(x) == pytest.approx((1 + 0.9) / (1 - 0.9), rel=0.15)

    def test_autocorr_time_iid(self):
        assert integrated_autocorr_time(make_rng(1).standard_normal(20_000)) == pytest.approx(
            1.0, abs=0.15)

    def test_constant_series(self):
        assert integrated_autocorr_time(np.ones(100)) == 1.0

    def test_batch_means_iid(self):
        x = make_rng(2).standard_normal(40_000)
        mean, se = batch_means(x)
        assert se == pytest.approx(1 / math.sqrt(40_000), rel=0.4)
        assert mean == pytest.approx(x.mean())

    def test_batch_means_needs_enough_samples(self):
        with pytest.raises(ValueError):
            batch_means(np.ones(10))

    def test_slow_mixing_flag(self):
        # a random walk never decorrelates
        slow = np.cumsum(make_rng(3).standard_normal(1000))[:, None]
        assert _mixing_flags(slow, 1000) == ("slow_mixing",)
        assert _mixing_flags(make_rng(4).standard_normal((2000, 1)), 2000) == ()


class TestParams:
    def test_defaults(self):
        p = GibbsParams()
        assert (p.burn_in, p.n_samples, p.thinning) == (500, 4000, 2)

    def test_burn_in_doubles_near_threshold(self):
        assert GibbsParams().for_theta(Hyperparams(1.05)).burn_in == 1000
        assert GibbsParams().for_theta(Hyperparams(2.0)).burn_in == 500

    @pytest.mark.parametrize("kw", [{"burn_in": -1}, {"n_samples": 0}, {"thinning": 0},
                                    {"n_samples": 10}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            GibbsParams(**kw)


class TestMatrixMmse:
    def test_below_threshold(self):
        inst = generate_instance(Hyperparams(0.5), Dimensions(200, 200, 200), 0)
        est = estimate_matrix_mmse(inst, 200, 1000, 2)
        assert abs(est.value - 1.0) < 0.05
        assert 0 <= est.value <= 1.0 + 3 * est.std_error

    def test_high_snr(self):
        inst = generate_instance(Hyperparams(20.0), Dimensions(200, 200, 200), 0)
        est = estimate_matrix_mmse(inst, 200, 1000, 2)
        assert abs(est.value - limit_mmse(Hyperparams(20.0))) < 0.03

    def test_requires_positive_counts(self):
        inst = generate_instance(Hyperparams(1.0), Dimensions(10, 10, 10), 0)
        with pytest.raises(ValueError):
            estimate_matrix_mmse(inst, 0, 100)

    def test_reps_average(self):
        est = estimate_mmse(Hyperparams(3.0), Dimensions(80, 80, 80), 1, reps=4, params=FAST)
        assert len(est.per_instance) == 4
        assert est.value == pytest.approx(np.mean(est.per_instance))
        assert abs(est.value - limit_mmse(Hyperparams(3.0))) < 0.1
        single = estimate_mmse(Hyperparams(3.0), Dimensions(80, 80, 80), 1, reps=1, params=FAST)
        assert single.std_error > 0


class TestDiagnostics:
    def test_gauge_fix(self):
        g = gauge_fixed_overlap(np.array([-0.5, 0.5]), np.array([-0.4, 0.4]))
        np.testing.assert_array_equal(g, [0.4, 0.4])

    def test_zero_snr_variance_scale(self):
        n = 100
        (row,) = overlap_variance_diagnostic(Hyperparams(0.0), [n], 4, FAST, seed=0)
        assert row.variance <= 3 / n
        assert row.variance == pytest.approx(1 / n, rel=0.3)

    @pytest.mark.parametrize("kw", [{"reps": 3}, {"n_list": [40]}])
    def test_invalid(self, kw):
        args = dict(theta=Hyperparams(1.0), n_list=[60], reps=4, params=FAST)
        args.update(kw)
        with pytest.raises(ValueError):
            overlap_variance_diagnostic(**args)

    def test_two_chains_agree(self):
        inst = generate_instance(Hyperparams(2.0), Dimensions(100, 100, 100), 3)
        chain = GibbsChain.start(inst, make_rng(4), n_chains=2)
        trace = run_chain(chain, 200, 2000, 1)
        g = gauge_fixed_overlap(trace.q_u, trace.q_v)
        (m1, s1), (m2, s2) = batch_means(g[:, 0]), batch_means(g[:, 1])
        assert abs(m1 - m2) <= 3 * math.hypot(s1, s2)

    def test_nishimori(self):
        check = nishimori_check(Hyperparams(2.0), Dimensions(80, 80, 80), 6, FAST)
        assert abs(check.planted - check.replica) <= 3 * math.hypot(check.planted_se,
                                                                    check.replica_se)


class TestThermo:
    def test_single_point_grid(self):
        (row,) = thermo_integration_mi(Hyperparams(1.0), 50, [0.0], FAST, reps=2)
        assert row.mi == 0.0 and row.mi_se == 0.0

    def test_zero_snr_integrand(self):
        (row,) = thermo_integration_mi(Hyperparams(1.0, 1.0, 0.5, 2.0, 1.0), 60, [0.0], FAST,
                                       reps=4)
        dims = Dimensions.from_ratios(60, 1.0, 0.5)
        expected = dims.n_u * dims.n_v / 60 ** 2 * 2.0 / 2
        assert abs(row.integrand - expected) <= max(3 * row.integrand_se, 0.02 * expected)

    @pytest.mark.parametrize("grid", [[0.1, 0.2], [0.0, 0.2, 0.1], [0.0, 0.0]])
    def test_invalid_grid(self, grid):
        with pytest.raises(ValueError):
            thermo_integration_mi(Hyperparams(1.0), 50, grid, FAST)

    def test_cumulative_trapezoid_linear_exact(self):
        grid = [0.0, 0.5, 1.5, 2.0]
        values = [1 + 2 * x for x in grid]
        mi, se = cumulative_trapezoid(grid, values, [0.0, 0.1, 0.1, 0.1])
        assert mi == pytest.approx([x + x ** 2 for x in grid])
        # interior node weight (0.25 + 0.5) at the third point
        assert se[2] == pytest.approx(math.sqrt((0.75 * 0.1) ** 2 + (0.5 * 0.1) ** 2))


class TestOverlapOracle:
    def test_decoupled_channel(self):
        # at t = 1 only the side channel remains: q_v -> rho^2 s / (1 + rho s) with s = lam R_u
        th = Hyperparams(2.0)
        oracle = GibbsOverlapOracle(th, 200, reps=4, seed=1)
        assert abs(oracle(1.0, (1.0, 1.0)) - 2 / 3) < 0.05
        assert 0.0 <= oracle(0.5, (0.0, 0.0)) <= 1.0
