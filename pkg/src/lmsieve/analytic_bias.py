"""Analytic bias comparators for the sample autocorrelation function."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz
from scipy.special import gammaln, gammasgn

from ._validation import check_series
from .arfima import ArfimaSpec, acvf
from .arfit import ar_to_acvf, fit_ar, max_order

__all__ = [
    "HoskingBiasInputs",
    "hosking_bias",
    "hosking_bias_for",
    "lk_forms",
    "quadratic_form_moments",
    "marriott_pope_expectation",
    "lee_ko_bias_plugin",
]


@dataclass(frozen=True)
class HoskingBiasInputs:
    d: float
    kappa_at_1: float
    sigma2: float
    rho_k: float
    gamma0: float
    T: int

    def __post_init__(self):
        if not 0 < abs(self.d) < 0.5:
            raise ValueError("hosking bias needs 0 < |d| < 0.5")
        if not self.gamma0 > 0:
            raise ValueError("gamma0 must be positive")


def hosking_bias(inputs: HoskingBiasInputs, k: int | None = None) -> float:
    """Large-sample bias of the sample autocorrelation under long memory.

    ``-lambda / (d (1 + 2d)) * (1 - rho(k)) / gamma(0) * T**(2d - 1)`` with
    ``lambda = (sigma kappa(1))**2 Gamma(1-2d) / (Gamma(d) Gamma(1-d))``.
    ``k`` only labels the call; the lag enters through ``rho_k``.
    """
    d = inputs.d
    log_ratio = gammaln(1.0 - 2.0 * d) - gammaln(d) - gammaln(1.0 - d)
    sign = gammasgn(1.0 - 2.0 * d) * gammasgn(d) * gammasgn(1.0 - d)
    lam = inputs.sigma2 * inputs.kappa_at_1 ** 2 * sign * np.exp(log_ratio)
    return float(-lam / (d * (1.0 + 2.0 * d)) * (1.0 - inputs.rho_k) / inputs.gamma0
                 * float(inputs.T) ** (2.0 * d - 1.0))


def hosking_bias_for(spec: ArfimaSpec, T: int, lags) -> np.ndarray:
    """:func:`hosking_bias` at each lag using the true parameters of ``spec``."""
    lags = np.atleast_1d(lags)
    g = acvf(spec, int(lags.max()))
    rho = g / g[0]
    return np.array([
        hosking_bias(HoskingBiasInputs(spec.d, spec.kappa_at_1, spec.sigma2, rho[k], g[0], T), k)
        for k in lags
    ])


def lk_forms(T: int, k: int):
    """Symmetric matrices with ``C(k) = y' A_k y`` and ``C(0) = y' A_0 y``."""
    T, k = int(T), int(k)
    if not 0 <= k <= T - 1:
        raise ValueError("k must lie in 0..T-1")
    n = T - k
    centre = np.eye(n) - 1.0 / n
    B = np.zeros((T, T))
    B[:n, k:] = centre / n
    A_k = 0.5 * (B + B.T)
    A_0 = (np.eye(T) - 1.0 / T) / T
    return A_k, A_0


def quadratic_form_moments(A, B, Gamma):
    """Gaussian moments of ``y'Ay`` and ``y'By`` for ``y ~ N(0, Gamma)``.

    Returns ``(E[y'Ay], E[y'By], cov(y'Ay, y'By), var(y'By))`` using
    ``E = tr(A Gamma)`` and ``cov = 2 tr(A Gamma B Gamma)``; ``A`` and ``B``
    must be symmetric.
    """
    AG = A @ Gamma
    BG = B @ Gamma
    return (float(np.trace(AG)), float(np.trace(BG)),
            2.0 * float(np.sum(AG * BG.T)), 2.0 * float(np.sum(BG * BG.T)))


def marriott_pope_expectation(gamma, T: int, k: int) -> float:
    """``E[r(k)]`` to ``O(1/T)`` for a Gaussian series with autocovariances ``gamma``.

    ``E[C(k)]/E[C(0)] * (1 - cov[C(k),C(0)]/(E[C(k)] E[C(0)]) + var[C(0)]/E[C(0)]**2)``
    with the moments of the quadratic forms computed exactly.
    """
    gamma = np.asarray(gamma, dtype=float)
    T = int(T)
    if gamma.shape[0] < T:
        raise ValueError("need autocovariances up to lag T - 1")
    Gamma = toeplitz(gamma[:T])
    A_k, A_0 = lk_forms(T, k)
    e_k, e_0, cov_k0, var_0 = quadratic_form_moments(A_k, A_0, Gamma)
    if e_k == 0.0:
        raise ZeroDivisionError("E[C(k)] is zero")
    return e_k / e_0 * (1.0 - cov_k0 / (e_k * e_0) + var_0 / e_0 ** 2)


def lee_ko_bias_plugin(y, k: int = 1, method: str = "burg"):
    """Estimated ``O(1/T)`` bias of the lag-``k`` sample autocorrelation.

    The reference autocovariances come from an AR(floor((ln T)**2)) fitted to
    ``y``; the result is ``E[r(k)] - rho_ref(k)`` under that model.
    """
    y = check_series(y, min_length=3)
    T = y.shape[0]
    model = fit_ar(y, min(max_order(T), T - 1), method)
    gamma = ar_to_acvf(model.phi, model.sigma2, T - 1)
    rho_ref = gamma[k] / gamma[0]
    return marriott_pope_expectation(gamma, T, k) - rho_ref
