import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.special import gamma as G

from lmsieve.analytic_bias import (HoskingBiasInputs, hosking_bias, hosking_bias_for, lee_ko_bias_plugin,
                                   lk_forms, marriott_pope_expectation, quadratic_form_moments)
from lmsieve.arfima import ArfimaSpec, acvf
from lmsieve.arfit import ar_to_acvf
from lmsieve.estimators import sample_acf_lk
from lmsieve.simulate import levinson_factor

CHUNK = 100_000


def gaussian_draws(Gamma, n, seed):
    L = np.linalg.cholesky(Gamma)
    rng = np.random.default_rng(seed)
    for _ in range(n // CHUNK):
        yield rng.standard_normal((CHUNK, Gamma.shape[0])) @ L.T


def brute_force_rk(gamma, T, k, n=1_000_000, seed=0):
    L = levinson_factor(np.asarray(gamma)[:T])
    rng = np.random.default_rng(seed)
    vals = []
    for _ in range(n // CHUNK):
        Y = rng.standard_normal((CHUNK, T)) @ L.T
        a, b = Y[:, : T - k], Y[:, k:]
        ck = np.mean((a - a.mean(1, keepdims=True)) * (b - b.mean(1, keepdims=True)), axis=1)
        c0 = np.mean((Y - Y.mean(1, keepdims=True)) ** 2, axis=1)
        vals.append(ck / c0)
    v = np.concatenate(vals)
    return v.mean(), v.std(ddof=1) / np.sqrt(v.size)


def test_hosking_fractional_noise_example():
    g0 = G(0.2) / G(0.6) ** 2
    b = hosking_bias(HoskingBiasInputs(0.4, 1.0, 1.0, 2 / 3, g0, 500), 1)
    lam = G(0.2) / (G(0.4) * G(0.6))
    assert b == pytest.approx(-lam / (0.4 * 1.8) * (1 / 3) / g0 * 500 ** (-0.2), rel=1e-12)
    assert b == pytest.approx(-0.0897, abs=5e-5)
    assert_allclose(hosking_bias_for(ArfimaSpec(0.4), 500, [1]), [b], rtol=1e-12)


def test_hosking_zero_at_unit_rho_and_negative():
    assert hosking_bias(HoskingBiasInputs(0.3, 2.0, 1.0, 1.0, 3.0, 100)) == 0.0
    for d in np.linspace(0.02, 0.48, 12):
        for rho in (-0.5, 0.0, 0.9):
            assert hosking_bias(HoskingBiasInputs(d, 2.5, 1.3, rho, 4.0, 500)) < 0


def test_hosking_scaling_and_domain():
    inp = HoskingBiasInputs(0.3, 2.0, 1.0, 0.5, 3.0, 250)
    b1 = hosking_bias(inp)
    b2 = hosking_bias(HoskingBiasInputs(0.3, 2.0, 1.0, 0.5, 3.0, 500))
    assert b2 == pytest.approx(b1 * 2 ** (2 * 0.3 - 1), rel=1e-12)
    with pytest.raises(ValueError):
        HoskingBiasInputs(0.0, 1.0, 1.0, 0.5, 1.0, 100)
    with pytest.raises(ValueError):
        HoskingBiasInputs(0.2, 1.0, 1.0, 0.5, 0.0, 100)


def test_lk_forms_reproduce_estimator():
    y = np.random.default_rng(0).standard_normal(15)
    for k in (0, 1, 4):
        A_k, A_0 = lk_forms(15, k)
        assert_allclose(A_k, A_k.T)
        c0 = y @ A_0 @ y
        assert c0 == pytest.approx(np.mean((y - y.mean()) ** 2))
        if k:
            assert (y @ A_k @ y) / c0 == pytest.approx(sample_acf_lk(y, [k])[0], rel=1e-12)
    with pytest.raises(ValueError):
        lk_forms(5, 5)


@pytest.mark.parametrize("size", [3, 6, 8])
def test_quadratic_form_moments_brute_force(size):
    rng = np.random.default_rng(size)
    A = rng.standard_normal((size, size))
    A = A + A.T
    B = rng.standard_normal((size, size))
    B = B + B.T
    M = rng.standard_normal((size, size))
    Gamma = M @ M.T + size * np.eye(size)
    ea, eb, cov, varb = quadratic_form_moments(A, B, Gamma)
    qa, qb = [], []
    for Y in gaussian_draws(Gamma, 1_000_000, size + 100):
        qa.append(np.einsum("ij,jk,ik->i", Y, A, Y))
        qb.append(np.einsum("ij,jk,ik->i", Y, B, Y))
    qa, qb = np.concatenate(qa), np.concatenate(qb)
    n = qa.size
    assert abs(qa.mean() - ea) < 4 * qa.std() / np.sqrt(n)
    assert abs(qb.mean() - eb) < 4 * qb.std() / np.sqrt(n)
    prod = (qa - qa.mean()) * (qb - qb.mean())
    assert abs(prod.mean() - cov) < 4 * prod.std() / np.sqrt(n)
    sq = (qb - qb.mean()) ** 2
    assert abs(sq.mean() - varb) < 4 * sq.std() / np.sqrt(n)


def test_marriott_pope_white_noise_brute_force():
    gamma = np.r_[1.0, np.zeros(19)]
    mean, se = brute_force_rk(gamma, 20, 1, seed=1)
    assert abs(marriott_pope_expectation(gamma, 20, 1) - mean) < 3 * se


def test_marriott_pope_ar1_second_order_remainder():
    """For AR(1) phi=0.5 the expansion misses E[r(1)] by an O(1/T**2) term.

    At T=20 that remainder (about 0.006) is many Monte Carlo standard errors
    of a 10**6-draw oracle, so we check its rate instead: doubling T divides
    the gap by about four.
    """
    gaps = []
    for T in (20, 40):
        gamma = ar_to_acvf([-0.5], 1.0, T - 1)
        mean, se = brute_force_rk(gamma, T, 1, seed=T)
        gaps.append(marriott_pope_expectation(gamma, T, 1) - mean)
    assert 3.0 < gaps[0] / gaps[1] < 5.5
    assert abs(gaps[0]) < 0.01


def test_marriott_pope_first_order_rate():
    gap = []
    for T in (100, 400):
        gamma = ar_to_acvf([-0.5], 1.0, T - 1)
        gap.append(abs(marriott_pope_expectation(gamma, T, 1) - 0.5))
    assert gap[0] / gap[1] == pytest.approx(4.0, rel=0.3)


def test_marriott_pope_mean_invariance():
    gamma = acvf(ArfimaSpec(0.3, (0.5,)), 29)
    base = marriott_pope_expectation(gamma, 30, 2)
    assert marriott_pope_expectation(gamma + 5.0, 30, 2) == pytest.approx(base, rel=1e-9)


def test_marriott_pope_errors():
    with pytest.raises(ValueError):
        marriott_pope_expectation([1.0, 0.0], 5, 1)
    with pytest.raises(ValueError):
        marriott_pope_expectation(np.r_[1.0, np.zeros(9)], 10, 10)


def test_lee_ko_white_noise():
    vals = np.array([lee_ko_bias_plugin(np.random.default_rng(s).standard_normal(100)) for s in range(60)])
    assert abs(vals.mean() + 1 / 99) < 3 * vals.std(ddof=1)
    with pytest.raises(ValueError):
        lee_ko_bias_plugin(np.ones(50))
