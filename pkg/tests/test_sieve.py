import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.signal import lfilter, lfiltic

from lmsieve.arfima import ArfimaSpec
from lmsieve.arfit import ArModel, ar_to_irf
from lmsieve.sieve import (BootstrapDistribution, SieveBiasCorrector, SieveConfig, _initial_state,
                           bias_adjust, bootstrap_distributions, draw_resamples, fit_sieve, kilian_adjust,
                           kilian_coefficients, reference_value, sieve_resample)
from lmsieve.simulate import SimConfig, simulate_gaussian


@pytest.fixture(scope="module")
def series():
    return simulate_gaussian(SimConfig(ArfimaSpec(0.4, (0.9,)), 300, 21))


def test_config_validation():
    with pytest.raises(ValueError):
        SieveConfig(method="prefiltered_true_d")
    with pytest.raises(ValueError):
        SieveConfig(method="raw", true_d=0.2)
    with pytest.raises(ValueError):
        SieveConfig(B=1)
    with pytest.raises(ValueError):
        SieveConfig(method="block")


def test_determinism(series):
    cfg = SieveConfig(B=20, seed=3)
    a = sieve_resample(series, cfg)
    b = sieve_resample(series, cfg)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, sieve_resample(series, SieveConfig(B=20, seed=4)))
    # resample b depends only on (seed, b)
    assert_allclose(sieve_resample(series, SieveConfig(B=5, seed=3)), a[:5])


def test_resamples_finite_and_shaped(series):
    for method, extra in [("raw", {}), ("prefiltered_splw", {}), ("prefiltered_true_d", {"true_d": 0.4})]:
        out = sieve_resample(series, SieveConfig(method=method, B=30, seed=1, **extra))
        assert out.shape == (30, series.shape[0])
        assert np.all(np.isfinite(out))


def test_order_zero_draws_from_pool(series):
    fit = fit_sieve(series, SieveConfig(order_rule=0))
    out = draw_resamples(fit, 10, 2)
    pool = np.sqrt(fit.model.sigma2) * fit.std_residuals + fit.model.mean
    assert np.all(np.isin(np.round(out, 10), np.round(pool, 10)))


def test_prefiltered_zero_equals_raw(series):
    raw = sieve_resample(series, SieveConfig(B=15, seed=8))
    zero = sieve_resample(series, SieveConfig(method="prefiltered_true_d", true_d=0.0, B=15, seed=8))
    assert_allclose(raw, zero, rtol=0, atol=0)


def test_standardised_residual_pool_moments(series):
    fit = fit_sieve(series, SieveConfig(order_rule=0))
    B, T = 1000, series.shape[0]
    eps = (draw_resamples(fit, B, 5) - fit.model.mean) / np.sqrt(fit.model.sigma2)
    assert abs(fit.std_residuals.mean()) < 1e-12
    assert fit.std_residuals.std() == pytest.approx(1.0)
    assert abs(eps.mean()) < 4 / np.sqrt(B * T)
    assert abs(eps.var() - 1) < 0.05


def test_initial_state_matches_lfiltic():
    rng = np.random.default_rng(0)
    a = np.r_[1.0, rng.uniform(-0.3, 0.3, 4)]
    past = rng.standard_normal((3, 4))
    zi = _initial_state(a, past)
    x = rng.standard_normal((3, 12))
    for i in range(3):
        ref = lfiltic([1.0], a, past[i])
        assert_allclose(zi[i], ref, atol=1e-14)
        full = lfilter([1.0], a, np.r_[past[i][::-1], x[i]])
        # the recursion restarted from the state continues the longer run exactly when inputs agree
        manual = np.empty(12)
        hist = list(past[i])
        for t in range(12):
            manual[t] = x[i, t] - np.dot(a[1:], hist[:4])
            hist.insert(0, manual[t])
        assert_allclose(lfilter([1.0], a, x[i], zi=zi[i])[0], manual, atol=1e-12)
        assert full.shape[0] == 16


def test_ar_recursion_started_from_block(series):
    fit = fit_sieve(series, SieveConfig(order_rule=2))
    out = draw_resamples(fit, 1, 11)[0]
    from lmsieve.simulate import derive_seed, make_rng

    rng = make_rng(derive_seed(11, 0))
    tau = int(rng.integers(2, series.shape[0] + 1))
    idx = rng.integers(0, series.shape[0], size=series.shape[0])
    e = np.sqrt(fit.model.sigma2) * fit.std_residuals[idx]
    c = fit.w - fit.model.mean
    hist = [c[tau - 1], c[tau - 2]]
    manual = np.empty_like(e)
    for t in range(e.shape[0]):
        manual[t] = e[t] - fit.model.phi[0] * hist[0] - fit.model.phi[1] * hist[1]
        hist = [manual[t], hist[0]]
    assert_allclose(out, manual + fit.model.mean, atol=1e-10)


def test_reference_value_examples():
    m = ArModel(1, [-0.5], 1.0)
    assert reference_value("irf", [2], "raw", m)[0] == pytest.approx(0.25)
    m0 = ArModel(0, [], 1.0)
    assert reference_value("acf", [1], "prefiltered_splw", m0, 0.4)[0] == pytest.approx(2 / 3)
    assert reference_value("irf", [2], "prefiltered_splw", m0, 0.4)[0] == pytest.approx(0.28)
    assert reference_value("acf", [2], "raw", m)[0] == pytest.approx(0.25)


def test_bias_adjust_examples():
    d = BootstrapDistribution("irf", 1, np.array([0.3, 0.5]), 0.4, 0.8)
    assert bias_adjust(d) == pytest.approx(0.8)
    d = BootstrapDistribution("irf", 1, np.array([0.3, 0.5]), 0.6, 0.5)
    assert bias_adjust(d) == pytest.approx(0.7)
    d = BootstrapDistribution("acf", 1, np.array([0.7, 0.7]), 0.8, 0.9)
    assert bias_adjust(d, "fisher_z") == pytest.approx(
        np.tanh(np.arctanh(0.9) - np.arctanh(0.7) + np.arctanh(0.8)), abs=1e-12)
    # the formula evaluates to 0.93585; a quoted 0.9626 does not follow from it
    assert bias_adjust(d, "fisher_z") == pytest.approx(0.93585, abs=5e-5)
    with pytest.raises(ValueError):
        bias_adjust(BootstrapDistribution("acf", 1, np.array([1.0, 0.5]), 0.5, 0.5), "fisher_z")


def test_distribution_sorted_invariant():
    d = BootstrapDistribution("irf", 1, np.array([3.0, 1.0, 2.0]), 0.0, 0.0)
    assert_allclose(d.draws, [1, 2, 3])
    assert d.B == 3


@given(st.lists(st.floats(-0.9999, 0.9999), min_size=2, max_size=30), st.floats(-0.9999, 0.9999),
       st.floats(-0.9999, 0.9999))
def test_fisher_adjustment_inside_unit_interval(draws, s_ref, s_obs):
    out = bias_adjust(BootstrapDistribution("acf", 1, np.asarray(draws), s_ref, s_obs), "fisher_z")
    assert -1 < out < 1


def test_bootstrap_distributions_consistent(series):
    cfg = SieveConfig(B=25, seed=2)
    res, fit, resamples = bootstrap_distributions(series, cfg, {"irf": [1, 6], "acf": [1, 6]})
    assert resamples.shape == (25, series.shape[0])
    irf = res["irf"]
    assert_allclose(irf.adjusted, irf.s_obs - (irf.draws.mean(axis=0) - irf.s_ref))
    dist = res["acf"].distribution(6)
    assert dist.B == 25 and np.all(np.diff(dist.draws) >= 0)
    assert res["acf"].adjusted[1] == pytest.approx(bias_adjust(dist, "fisher_z"))
    again, _, _ = bootstrap_distributions(series, cfg, {"irf": [1, 6]}, resamples=resamples)
    assert_allclose(again["irf"].adjusted, irf.adjusted)


def test_kilian_examples():
    same = kilian_coefficients([-0.6, 0.1], np.array([[-0.6, 0.1], [-0.6, 0.1]]))
    assert_allclose(same, [-0.6, 0.1])
    corrected = kilian_coefficients([-0.6], np.array([[-0.5], [-0.5]]))
    assert_allclose(corrected, [-0.7])
    assert ar_to_irf(corrected, 2)[2] == pytest.approx(0.49)
    # an explosive correction is reflected back
    assert abs(kilian_coefficients([-0.98], np.array([[-0.9]]))[0]) < 1


def test_kilian_adjust_runs(series):
    out = kilian_adjust(series, SieveConfig(B=20, seed=4), [1, 3, 12])
    assert out.shape == (3,) and np.all(np.isfinite(out))


def test_estimator_api(series):
    est = SieveBiasCorrector(statistic="acf", lags=[1, 2], n_resamples=20, random_state=1).fit(series)
    assert est.corrected_.shape == (2,)
    assert_allclose(est.bias_, est.statistic_ - est.corrected_)
    assert np.all(np.abs(est.predict()) < 1)
    k = SieveBiasCorrector(method="kilian", lags=[1, 2], n_resamples=20).fit(series)
    assert k.draws_ is None and k.order_ == 32
    with pytest.raises(ValueError):
        SieveBiasCorrector(statistic="acf", method="kilian").fit(series)
    panel = SieveBiasCorrector(lags=[1], n_resamples=10).correct_panel(np.vstack([series, series[::-1]]))
    assert panel.shape == (2, 1)
    params = SieveBiasCorrector().get_params()
    assert params["method"] == "raw" and params["n_resamples"] == 299
