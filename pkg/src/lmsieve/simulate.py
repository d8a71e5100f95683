"""Exact Gaussian simulation from an autocovariance sequence.

Random numbers come from numpy's Philox4x64-10 counter-based generator. Each
stream is keyed by ``SeedSequence(seed)``; uniforms are built from 53 random
bits as ``(k + 0.5) / 2**53`` so they lie strictly inside (0, 1), and normals
are obtained by the inverse normal CDF, one uniform per deviate.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import ndtri

from .arfima import ArfimaSpec, acvf

__all__ = [
    "RNG_ALGORITHM",
    "SimConfig",
    "make_rng",
    "derive_seed",
    "uniforms",
    "standard_normals",
    "durbin_levinson",
    "levinson_factor",
    "simulate_from_acvf",
    "simulate_gaussian",
]

RNG_ALGORITHM = "philox4x64-10/seedsequence/inverse-cdf-normal"

_U64 = 2**64 - 1


def make_rng(seed: int) -> np.random.Generator:
    """Philox generator keyed by a 64-bit seed."""
    seed = int(seed)
    if not 0 <= seed <= _U64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def derive_seed(base_seed: int, *index: int) -> int:
    """Child seed for a replication (or resample) index.

    Defined as the first 64-bit word of ``SeedSequence([base_seed, *index])``,
    so children do not depend on the order in which they are requested.
    """
    ss = np.random.SeedSequence([int(base_seed), *[int(i) for i in index]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def uniforms(rng: np.random.Generator, size) -> np.ndarray:
    bits = rng.integers(0, 2**53, size=size, dtype=np.uint64)
    return (bits.astype(float) + 0.5) / 2.0**53


def standard_normals(rng_or_seed, size) -> np.ndarray:
    """Standard normal deviates by inverse CDF."""
    rng = make_rng(rng_or_seed) if isinstance(rng_or_seed, (int, np.integer)) else rng_or_seed
    return ndtri(uniforms(rng, size))


def durbin_levinson(gamma):
    """One-step prediction coefficients and error variances.

    Returns ``(phi, v)`` where row ``n`` of ``phi`` holds
    ``phi_{n,1..n}`` for predicting ``y(n+1)`` from ``y(n), ..., y(1)`` and
    ``v[n]`` is the corresponding mean squared error.
    """
    g = np.asarray(gamma, dtype=float)
    T = g.shape[0]
    phi = np.zeros((T, T))
    v = np.empty(T)
    v[0] = g[0]
    if v[0] <= 0:
        raise ValueError("autocovariance at lag 0 must be positive")
    for n in range(1, T):
        prev = phi[n - 1, : n - 1]
        k = (g[n] - np.dot(prev, g[n - 1 : 0 : -1])) / v[n - 1]
        phi[n, : n - 1] = prev - k * prev[::-1]
        phi[n, n - 1] = k
        v[n] = v[n - 1] * (1.0 - k * k)
        if not v[n] > 0:
            raise ValueError(f"innovation variance non-positive at step {n}: autocovariances not positive definite")
    return phi, v


def levinson_factor(gamma) -> np.ndarray:
    """Lower-triangular ``L`` with ``y = L z`` exact for ``Toeplitz(gamma)``.

    Built from the Durbin-Levinson recursion:
    ``y(t) = sum_j phi_{t-1,j} y(t-j) + sqrt(v[t-1]) z(t)``.
    """
    phi, v = durbin_levinson(gamma)
    T = v.shape[0]
    A = np.eye(T)
    for t in range(1, T):
        A[t, :t] = -phi[t, :t][::-1]
    return solve_triangular(A, np.diag(np.sqrt(v)), lower=True, unit_diagonal=True)


@lru_cache(maxsize=32)
def _cached_factor(gamma_key: tuple) -> np.ndarray:
    return levinson_factor(np.asarray(gamma_key))


def simulate_from_acvf(gamma, z) -> np.ndarray:
    """Map standard normals ``z`` (length T, or rows of length T) to the process."""
    L = _cached_factor(tuple(np.asarray(gamma, dtype=float)))
    z = np.asarray(z, dtype=float)
    return z @ L.T


@dataclass(frozen=True)
class SimConfig:
    spec: ArfimaSpec
    T: int
    seed: int = 0

    def __post_init__(self):
        if int(self.T) < 2:
            raise ValueError("T must be at least 2")
        if not 0 <= int(self.seed) <= _U64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def simulate_gaussian(config: SimConfig) -> np.ndarray:
    """Draw one length-T path of the zero-mean Gaussian ARFIMA process."""
    gamma = acvf(config.spec, config.T - 1)
    z = standard_normals(int(config.seed), config.T)
    return simulate_from_acvf(gamma, z)
