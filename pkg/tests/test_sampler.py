import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from oracles import angle_bins, torus_marginals, total_variation
from rank1sphere.core import Dimensions, Hyperparams, generate_instance, make_rng
from rank1sphere.gibbs import (GibbsChain, PosteriorModel, batch_means, gibbs_step,
                               interpolated_model, run_chain, stack_models)
from rank1sphere.theory import limit_mmse


def _torus_run(model, n_chains, sweeps, seed, n_bins=24):
    """Histogram counts of u-angle, v-angle and Q_v plus per-chain time averages."""
    chain = GibbsChain.start(model, make_rng(seed), n_chains=n_chains)
    counts = np.zeros((3, n_bins))
    f_sum = np.zeros((3, n_chains))
    rho_v = model.theta.rho_v
    for _ in range(sweeps):
        gibbs_step(chain)
        q_v = chain.v @ model.v_true / 2
        qb = np.clip(((q_v + rho_v) / (2 * rho_v) * n_bins).astype(int), 0, n_bins - 1)
        for row, idx in enumerate((angle_bins(chain.u, n_bins), angle_bins(chain.v, n_bins), qb)):
            counts[row] += np.bincount(idx, minlength=n_bins)
        q_u = chain.u @ model.u_true / 2
        f_sum += np.stack([q_u * q_v, chain.u[:, 0] * chain.v[:, 1], np.cos(q_u + chain.v[:, 0])])
    return counts / counts.sum(axis=1, keepdims=True), f_sum / sweeps


def _torus_expectations(model, ang, p):
    r = math.sqrt(2)
    cu, su = r * np.cos(ang), r * np.sin(ang)
    q_u = (cu * model.u_true[0] + su * model.u_true[1]) / 2
    q_v = (cu * model.v_true[0] + su * model.v_true[1]) / 2
    fs = [q_u[:, None] * q_v[None, :], cu[:, None] * su[None, :],
          np.cos(q_u[:, None] + cu[None, :])]
    return np.array([(f * p).sum() for f in fs])


@pytest.mark.parametrize("lam,seed", [(2.0, 7), (0.3, 8), (6.0, 9)])
def test_two_by_two_matches_torus_quadrature(lam, seed):
    inst = generate_instance(Hyperparams(lam), Dimensions(2, 2, 2), seed)
    model = PosteriorModel.from_instance(inst)
    hist, f_avg = _torus_run(model, 400, 500, seed)
    p_u, p_v, p_q, (ang, p) = torus_marginals(model.w, inst.u_true, inst.v_true)
    for h, ref in zip(hist, (p_u, p_v, p_q)):
        assert total_variation(h, ref) < 0.02
    # bounded functions: chains are independent, so per-chain averages give an honest SE
    exact = _torus_expectations(model, ang, p)
    mean = f_avg.mean(axis=1)
    se = f_avg.std(axis=1, ddof=1) / math.sqrt(f_avg.shape[1])
    assert np.all(np.abs(mean - exact) <= 3 * se + 1e-12)


def test_two_by_two_with_side_fields():
    model = interpolated_model(Hyperparams(2.0), Dimensions(2, 2, 2), 0.4, (0.5, 0.3), 3)
    hist, _ = _torus_run(model, 400, 500, 4)
    p_u, p_v, p_q, _ = torus_marginals(model.w, model.u_true, model.v_true, h_u=model.h_u,
                                       h_v=model.h_v)
    for h, ref in zip(hist, (p_u, p_v, p_q)):
        assert total_variation(h, ref) < 0.02


@given(lam=st.floats(0, 50), au=st.floats(0.3, 3), rho=st.floats(0.1, 10),
       seed=st.integers(0, 2**32))
def test_sphere_and_overlap_invariants(lam, au, rho, seed):
    th = Hyperparams(lam, au, 1.0, rho, 1.0 / rho)
    inst = generate_instance(th, Dimensions.from_ratios(20, au, 1.0), seed)
    chain = GibbsChain.start(inst, make_rng(seed, 1), n_chains=3)
    for _ in range(5):
        gibbs_step(chain)
        ru = np.sum(chain.u ** 2, axis=1) / (th.rho_u * inst.dims.n_u)
        rv = np.sum(chain.v ** 2, axis=1) / (th.rho_v * inst.dims.n_v)
        assert np.all(np.abs(ru - 1) < 1e-8) and np.all(np.abs(rv - 1) < 1e-8)
        q_u, q_v = chain.overlaps()
        assert np.all(np.abs(q_u) <= th.rho_u + 1e-12) and np.all(np.abs(q_v) <= th.rho_v + 1e-12)
    assert chain.step_count == 5


def test_zero_snr_overlaps_are_noise():
    inst = generate_instance(Hyperparams(0.0), Dimensions(200, 200, 200), 1)
    trace = run_chain(GibbsChain.start(inst, make_rng(2)), 10, 2000, 1)
    assert np.mean(np.abs(trace.q_v)) < 3 / math.sqrt(200)
    assert abs(np.corrcoef(trace.q_v[:-1, 0], trace.q_v[1:, 0])[0, 1]) < 0.1


def test_high_snr_collapses_to_truth():
    # the limiting product is m*^2 = (9999 / 10100)^2 ~ 0.980, not rho_u rho_v
    th = Hyperparams(100.0)
    inst = generate_instance(th, Dimensions(200, 200, 200), 2)
    trace = run_chain(GibbsChain.start(inst, make_rng(3)), 100, 200, 1)
    target = th.rho_u * th.rho_v - limit_mmse(th)
    assert abs(np.mean(trace.q_u * trace.q_v) / target - 1.0) < 0.01


def test_flip_leaves_update_law_of_product_unchanged():
    inst = generate_instance(Hyperparams(1.5), Dimensions(30, 30, 30), 5)
    start = GibbsChain.start(inst, make_rng(6), init="planted")
    k = 4000
    a = GibbsChain(start.model, np.repeat(start.u, k, 0), np.repeat(start.v, k, 0), make_rng(7))
    b = a.flipped()
    b.rng = make_rng(8)
    gibbs_step(a)
    gibbs_step(b)
    pa = np.prod(a.overlaps(), axis=0)
    pb = np.prod(b.overlaps(), axis=0)
    assert stats.ks_2samp(pa, pb).pvalue > 0.01
    # the unflipped statistic itself is not symmetric, so the test has power
    assert stats.ks_2samp(a.overlaps()[0], b.overlaps()[0]).pvalue < 1e-6


def test_mmse_estimate_invariant_under_flipped_start():
    inst = generate_instance(Hyperparams(2.0), Dimensions(60, 60, 60), 5)
    a = GibbsChain.start(inst, make_rng(6), init="planted")
    b = GibbsChain.start(inst, make_rng(7), init="planted").flipped()
    ta, tb = run_chain(a, 50, 2000, 1), run_chain(b, 50, 2000, 1)
    ma, sa = batch_means(ta.q_u[:, 0] * ta.q_v[:, 0])
    mb, sb = batch_means(tb.q_u[:, 0] * tb.q_v[:, 0])
    assert abs(ma - mb) <= 3 * math.hypot(sa, sb)


def test_planted_start_and_stacking():
    th, dims = Hyperparams(3.0), Dimensions(30, 30, 30)
    insts = [generate_instance(th, dims, 0, k) for k in range(3)]
    model = stack_models(insts)
    assert model.stacked and model.w.shape == (3, 30, 30)
    chain = GibbsChain.start(model, make_rng(1), n_chains=99, init="planted")
    assert chain.n_chains == 3
    q_u, q_v = chain.overlaps()
    np.testing.assert_allclose(q_u, 1.0) and np.testing.assert_allclose(q_v, 1.0)
    gibbs_step(chain)
    # each chain follows its own posterior: with a planted start they stay near their truth
    assert np.all(chain.overlaps()[0] > 0.3)


def test_stack_requires_matching_theta():
    a = generate_instance(Hyperparams(1.0), Dimensions(5, 5, 5), 0)
    b = generate_instance(Hyperparams(2.0), Dimensions(5, 5, 5), 0)
    with pytest.raises(ValueError):
        stack_models([a, b])


def test_interpolated_model_endpoints():
    th, dims = Hyperparams(2.0), Dimensions(10, 10, 10)
    m0 = interpolated_model(th, dims, 0.0, (0.0, 0.0), 1)
    np.testing.assert_array_equal(m0.h_u, 0.0)
    m1 = interpolated_model(th, dims, 1.0, (0.2, 0.2), 1)
    np.testing.assert_array_equal(m1.w, 0.0)
    with pytest.raises(ValueError):
        interpolated_model(th, dims, 1.5, (0.0, 0.0), 1)


def test_invalid_run_arguments():
    inst = generate_instance(Hyperparams(1.0), Dimensions(5, 5, 5), 0)
    chain = GibbsChain.start(inst, make_rng(0))
    with pytest.raises(ValueError):
        run_chain(chain, -1, 10)
    with pytest.raises(ValueError):
        run_chain(chain, 0, 0)
    with pytest.raises(ValueError):
        GibbsChain.start(inst, make_rng(0), init="warm")
