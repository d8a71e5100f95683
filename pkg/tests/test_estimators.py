import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose

import lmsieve.estimators as est_mod
from lmsieve.arfima import ArfimaSpec, acvf
from lmsieve.estimators import (LocalWhittle, default_bandwidth, periodogram, sample_acf, sample_acf_lk,
                                sample_irf, splw, whittle_objective)
from lmsieve.simulate import derive_seed, simulate_from_acvf, standard_normals

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def draws(spec, T, R, seed):
    gamma = acvf(spec, T - 1)
    Z = np.vstack([standard_normals(derive_seed(seed, r), T) for r in range(R)])
    return simulate_from_acvf(gamma, Z)


def test_sample_acf_examples():
    assert sample_acf([1, 2, 3, 4], [1])[0] == pytest.approx(0.25)
    assert sample_acf([1, -1, 1, -1], [1])[0] == pytest.approx(-0.75)
    y = np.random.default_rng(0).standard_normal(30)
    assert sample_acf(y, [0])[0] == pytest.approx(1.0)


def test_sample_acf_fft_branch_matches_direct():
    y = np.random.default_rng(1).standard_normal(300)
    lags = np.arange(1, 80)
    d = y - y.mean()
    direct = np.array([d[: 300 - k] @ d[k:] for k in lags]) / (d @ d)
    assert_allclose(sample_acf(y, lags), direct, atol=1e-12)
    assert_allclose(sample_acf(np.vstack([y, 2 * y]), [1, 5])[1], sample_acf(y, [1, 5]), atol=1e-14)


def test_constant_series_rejected():
    with pytest.raises(ValueError):
        sample_acf([2, 2, 2], [1])
    with pytest.raises(ValueError):
        sample_acf_lk([3, 3, 3, 3], [1])
    with pytest.raises(ValueError):
        sample_acf([1, 2, 3], [3])


@given(arrays(float, st.integers(5, 60), elements=finite), st.floats(0.1, 10), st.floats(-50, 50))
def test_acf_invariance_and_bound(y, a, b):
    if np.ptp(y) < 1e-3:
        return
    lags = np.arange(1, min(len(y), 8))
    r = sample_acf(y, lags)
    assert np.all(np.abs(r) <= 1 + 1e-12)
    assert_allclose(sample_acf(a * y + b, lags), r, atol=1e-9)
    assert_allclose(sample_acf(-a * y + b, lags), r, atol=1e-9)


def test_sample_acf_lk_example():
    assert sample_acf_lk([1, 2, 3, 4], [1])[0] == pytest.approx(8 / 15)


def test_lk_close_to_pearson():
    T = 1000
    for r in range(100):
        y = np.random.default_rng(derive_seed(2, r)).standard_normal(T)
        assert abs(sample_acf_lk(y, [1])[0] - sample_acf(y, [1])[0]) < 10 / T


def test_sample_irf_ar1_inversion():
    y = np.random.default_rng(3).standard_normal(200)
    psi = sample_irf(y, 1, lags=[1, 2])
    assert psi[1] == pytest.approx(psi[0] ** 2)


def test_sample_irf_determinism_and_order_independence():
    y = draws(ArfimaSpec(0.3, (0.5,)), 300, 1, 4)[0]
    a = sample_irf(y, "fixed_log_sq", [1, 6, 12])
    b = sample_irf(y, "fixed_log_sq", [12, 1, 6])
    assert_allclose(a, b[[1, 2, 0]])
    assert_allclose(a, sample_irf(y, "fixed_log_sq", [1, 6, 12]))


def test_white_noise_irf_small():
    hits = 0
    for r in range(100):
        y = np.random.default_rng(derive_seed(5, r)).standard_normal(500)
        hits += abs(sample_irf(y, "fixed_log_sq", [1])[0]) < 0.15
    assert hits >= 95


def test_periodogram_definition():
    y = np.random.default_rng(6).standard_normal(64)
    lam, I = periodogram(y, 5)
    t = np.arange(64)
    direct = [abs(np.sum((y - y.mean()) * np.exp(-1j * l * t))) ** 2 / (2 * np.pi * 64) for l in lam]
    assert_allclose(I, direct, rtol=1e-12)
    assert_allclose(lam, 2 * np.pi * np.arange(1, 6) / 64)


def test_splw_is_constrained_minimiser():
    y = draws(ArfimaSpec(0.3), 1000, 1, 7)[0]
    est = splw(y)
    assert est.bandwidth == default_bandwidth(1000) == int(1000 ** 0.65)
    lam, I = periodogram(y, est.bandwidth)
    fine = np.linspace(-0.499, 0.499, 20001)
    vals = whittle_objective(fine, lam, I)
    assert est.objective_value <= vals.min() + 1e-12
    assert abs(est.d_hat - fine[np.argmin(vals)]) < 1e-4


def test_splw_grid_resolution_contract(monkeypatch):
    y = draws(ArfimaSpec(0.2, (0.5,)), 500, 1, 8)[0]
    coarse = splw(y).d_hat
    monkeypatch.setattr(est_mod, "GRID_POINTS", 401)
    assert abs(splw(y).d_hat - coarse) < 1e-4


def test_splw_bounds_and_errors():
    y = np.cumsum(np.random.default_rng(9).standard_normal(400))
    d = splw(y).d_hat
    assert -0.499 <= d <= 0.499
    assert d == pytest.approx(0.499, abs=1e-6)
    with pytest.raises(ValueError):
        splw(y, bandwidth=200)
    with pytest.raises(ValueError):
        splw(np.ones(100))


@pytest.mark.slow
@pytest.mark.parametrize("d", [0.0, 0.4])
def test_splw_mc_consistency(d):
    Y = draws(ArfimaSpec(d), 2000, 200, 10 + int(10 * d))
    mean = np.mean([splw(y).d_hat for y in Y])
    assert abs(mean - d) < 0.05


def test_local_whittle_estimator():
    y = draws(ArfimaSpec(0.3), 800, 1, 11)[0]
    lw = LocalWhittle().fit(y)
    assert lw.predict() == lw.d_ == splw(y).d_hat
    assert LocalWhittle(bandwidth=30).fit(y).bandwidth_ == 30
    assert set(LocalWhittle().get_params()) == {"bandwidth", "exponent"}
