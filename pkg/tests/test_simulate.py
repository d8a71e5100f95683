import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.linalg import toeplitz

from lmsieve.arfima import ArfimaSpec, acvf
from lmsieve.simulate import (RNG_ALGORITHM, SimConfig, derive_seed, durbin_levinson, levinson_factor,
                              make_rng, simulate_from_acvf, simulate_gaussian, standard_normals, uniforms)


def test_white_noise_equals_drawn_normals():
    y = simulate_gaussian(SimConfig(ArfimaSpec(0.0), 3, seed=77))
    assert_allclose(y, standard_normals(77, 3), rtol=0, atol=0)


@pytest.mark.parametrize("T", [2, 4, 8])
@pytest.mark.parametrize("spec", [ArfimaSpec(0.4, (0.9,)), ArfimaSpec(-0.3, (0.5,)), ArfimaSpec(0.2)])
def test_factor_reproduces_toeplitz(T, spec):
    gamma = acvf(spec, T - 1)
    L = levinson_factor(gamma)
    assert np.allclose(np.triu(L, 1), 0.0)
    assert np.max(np.abs(L @ L.T - toeplitz(gamma))) < 1e-8


def test_durbin_levinson_matches_direct_solve():
    gamma = acvf(ArfimaSpec(0.3, (0.6,)), 9)
    phi, v = durbin_levinson(gamma)
    for n in range(1, 10):
        direct = np.linalg.solve(toeplitz(gamma[:n]), gamma[1 : n + 1])
        assert_allclose(phi[n, :n], direct, rtol=1e-9, atol=1e-12)
        assert v[n] == pytest.approx(gamma[0] - direct @ gamma[1 : n + 1], rel=1e-9)


def test_non_positive_definite_input_rejected():
    with pytest.raises(ValueError):
        durbin_levinson([1.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        durbin_levinson([1.0, 0.9, -0.9])
    with pytest.raises(ValueError):
        durbin_levinson([0.0, 0.0])


def test_determinism_and_distinct_seeds():
    spec = ArfimaSpec(0.4, (0.9,))
    a = simulate_gaussian(SimConfig(spec, 100, 5))
    b = simulate_gaussian(SimConfig(spec, 100, 5))
    assert a.tobytes() == b.tobytes()
    outs = {simulate_gaussian(SimConfig(spec, 50, s)).tobytes() for s in range(20)}
    assert len(outs) == 20


def test_rng_contract():
    assert "philox" in RNG_ALGORITHM
    u = uniforms(make_rng(3), 100_000)
    assert np.all((u > 0) & (u < 1))
    assert u.mean() == pytest.approx(0.5, abs=0.005)
    z = standard_normals(make_rng(3), 10)
    assert_allclose(z, standard_normals(3, 10))
    assert derive_seed(1, 2) == derive_seed(1, 2)
    assert derive_seed(1, 2) != derive_seed(1, 3) != derive_seed(2, 2)
    assert derive_seed(1, 2, 3) != derive_seed(1, 2)
    with pytest.raises(ValueError):
        make_rng(-1)
    with pytest.raises(ValueError):
        SimConfig(ArfimaSpec(0.1), 1)


def test_batched_mapping():
    gamma = acvf(ArfimaSpec(0.2, (0.5,)), 19)
    Z = standard_normals(9, (4, 20))
    Y = simulate_from_acvf(gamma, Z)
    for i in range(4):
        assert_allclose(Y[i], simulate_from_acvf(gamma, Z[i]), atol=1e-14)


@pytest.mark.slow
def test_sample_variance_mc():
    spec = ArfimaSpec(0.4, (0.9,))
    T, R = 500, 500
    gamma = acvf(spec, T - 1)
    Z = np.vstack([standard_normals(derive_seed(11, r), T) for r in range(R)])
    Y = simulate_from_acvf(gamma, Z)
    # unbiased moment: E[mean(y**2)] = gamma(0) for a zero-mean process
    m = np.mean(Y * Y, axis=1)
    se = m.std(ddof=1) / np.sqrt(R)
    assert abs(m.mean() - gamma[0]) < 3 * se
