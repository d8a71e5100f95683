"""Theoretical autocovariances, autocorrelations and impulse responses of ARFIMA(p, d, 0).

The model is ``(1 - L)**d Phi(L) y(t) = e(t)`` with
``Phi(z) = 1 - ar[0] z - ... - ar[p-1] z**p`` (note: the usual ARMA sign
convention, *not* the prediction-error convention of :mod:`lmsieve.arfit`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter
from scipy.special import gammaln, gammasgn

from .arfit import ar_to_acvf, schur_cohn_stable
from .fracdiff import frac_coeffs

__all__ = [
    "ArfimaSpec",
    "ConvergenceError",
    "fn_acvf",
    "acvf",
    "acf",
    "irf",
    "acvf_by_ma",
]

TOL = 1e-12


class ConvergenceError(RuntimeError):
    """Raised when a series evaluation exhausts its iteration budget."""


@dataclass(frozen=True)
class ArfimaSpec:
    """ARFIMA(p, d, 0) parameters.

    Parameters
    ----------
    d : float
        Fractional index, ``|d| < 0.5``.
    ar : sequence of float
        ``phi_1..phi_p`` of ``Phi(z) = 1 - phi_1 z - ... - phi_p z**p``.
    sigma2 : float
        Innovation variance.
    """

    d: float
    ar: tuple = ()
    sigma2: float = 1.0

    def __post_init__(self):
        ar = tuple(float(a) for a in np.atleast_1d(np.asarray(self.ar, dtype=float)))
        object.__setattr__(self, "ar", ar)
        object.__setattr__(self, "d", float(self.d))
        object.__setattr__(self, "sigma2", float(self.sigma2))
        if not abs(self.d) < 0.5:
            raise ValueError(f"|d| must be below 0.5, got {self.d}")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        if ar and not schur_cohn_stable(-np.asarray(ar)):
            raise ValueError(f"AR operator with coefficients {ar} is not stationary")

    @property
    def p(self) -> int:
        return len(self.ar)

    @property
    def kappa_at_1(self) -> float:
        """``1 / Phi(1)``."""
        return 1.0 / (1.0 - sum(self.ar))

    @classmethod
    def from_prediction_form(cls, d: float, phi, sigma2: float = 1.0) -> "ArfimaSpec":
        """Build from coefficients in the ``1 + phi(1) z + ...`` convention."""
        return cls(d=d, ar=tuple(-np.asarray(phi, dtype=float)), sigma2=sigma2)


def fn_acvf(d: float, sigma2: float, max_lag: int) -> np.ndarray:
    """Fractional-noise autocovariances.

    ``gamma(k) = sigma2 Gamma(1-2d) Gamma(k+d) / (Gamma(d) Gamma(1-d) Gamma(k+1-d))``,
    evaluated as ``gamma(0)`` in log-gamma form followed by the ratio
    ``gamma(k) / gamma(k-1) = (k - 1 + d) / (k - d)``.
    """
    max_lag = int(max_lag)
    if max_lag < 0:
        raise ValueError("max_lag must be nonnegative")
    if not abs(d) < 0.5:
        raise ValueError(f"|d| must be below 0.5, got {d}")
    lg = gammaln(1.0 - 2.0 * d) - 2.0 * gammaln(1.0 - d)
    sign = gammasgn(1.0 - 2.0 * d)
    g0 = sigma2 * sign * math.exp(lg)
    k = np.arange(1, max_lag + 1, dtype=float)
    ratios = (k - 1.0 + d) / (k - d)
    return g0 * np.concatenate(([1.0], np.cumprod(ratios)))


def _hyp_top(a: float, c: float, x: float, budget: int) -> float:
    """``2F1(a, 1; c; x)`` by direct summation."""
    term = 1.0
    total = 1.0
    for i in range(budget):
        term *= (a + i) / (c + i) * x
        total += term
        if abs(term) <= TOL * abs(total):
            return total
    raise ConvergenceError(f"2F1({a}, 1; {c}; {x}) did not converge in {budget} terms")


def _arfima1_acvf(d: float, phi: float, sigma2: float, max_lag: int, budget: int | None) -> np.ndarray:
    """ARFIMA(1, d, 0) autocovariances through the hypergeometric representation.

    With ``K(s)`` the unit-variance fractional-noise autocovariance,

        gamma(s) = sigma2 K(s) [F(s) + G(s) - 1] / (1 - phi**2),
        F(s) = 2F1(d + s, 1; 1 - d + s; phi),
        G(s) = 2F1(d - s, 1; 1 - d - s; phi).

    F is filled in by the backward recursion
    ``F(s) = 1 + phi (d + s) / (1 - d + s) F(s + 1)`` from a directly summed
    top value, and G forward from ``G(0) = F(0)`` by
    ``G(s) = 1 + phi (d - s) / (1 - d - s) G(s - 1)``. Both recursions
    contract by ``|phi|`` per step.
    """
    K = fn_acvf(d, 1.0, max_lag)
    if budget is None:
        budget = 10 * max_lag + 1000
        if phi != 0.0:
            # terms decay like |phi|**i; make sure the budget can reach TOL
            budget = max(budget, int(math.log(TOL) / math.log(abs(phi))) + 100)
    top = max_lag + 1
    F = np.empty(top + 1)
    F[top] = _hyp_top(d + top, 1.0 - d + top, phi, budget)
    for s in range(top - 1, -1, -1):
        F[s] = 1.0 + phi * (d + s) / (1.0 - d + s) * F[s + 1]
    G = np.empty(max_lag + 1)
    G[0] = F[0]
    for s in range(1, max_lag + 1):
        G[s] = 1.0 + phi * (d - s) / (1.0 - d - s) * G[s - 1]
    return sigma2 * K * (F[: max_lag + 1] + G - 1.0) / (1.0 - phi * phi)


def _split_acvf(spec: ArfimaSpec, max_lag: int, max_terms: int) -> np.ndarray:
    """Convolve the pure-AR autocovariances with the fractional-noise ones.

    ``gamma(s) = sum_m gamma_AR(m) gamma_FN(s - m)`` where the AR part has unit
    innovation variance. The AR autocovariances decay geometrically at the
    spectral radius of the operator, which fixes the truncation point.
    """
    phi_pred = -np.asarray(spec.ar)
    roots = np.roots(np.concatenate((phi_pred[::-1], [1.0])))
    radius = float(np.max(1.0 / np.abs(roots))) if roots.size else 0.0
    if radius <= 0.0:
        M = spec.p
    else:
        M = int(math.ceil(math.log(1e-17) / math.log(radius))) + spec.p + 1
    if M > max_terms:
        raise ConvergenceError(f"AR spectral radius {radius:.6f} needs {M} terms, budget {max_terms}")
    g_ar = ar_to_acvf(phi_pred, 1.0, M)
    g_fn = fn_acvf(spec.d, spec.sigma2, max_lag + M)
    # two-sided AR sequence gamma_AR(-M..M)
    two_sided = np.concatenate((g_ar[:0:-1], g_ar))
    out = np.empty(max_lag + 1)
    for s in range(max_lag + 1):
        # lags s - m for m = -M..M, folded with |.|
        idx = np.abs(s - np.arange(-M, M + 1))
        out[s] = np.dot(two_sided, g_fn[idx])
    return out


def acvf(spec: ArfimaSpec, max_lag: int, *, budget: int | None = None, max_terms: int = 1_000_000) -> np.ndarray:
    """Exact autocovariances ``gamma(0..max_lag)`` of an ARFIMA(p, d, 0) process.

    Fractional noise uses its closed form; p = 1 uses the hypergeometric
    recursions; p > 1 convolves the AR and fractional-noise autocovariances.
    """
    max_lag = int(max_lag)
    if max_lag < 0:
        raise ValueError("max_lag must be nonnegative")
    if spec.p == 0:
        return fn_acvf(spec.d, spec.sigma2, max_lag)
    if spec.d == 0.0:
        return ar_to_acvf(-np.asarray(spec.ar), spec.sigma2, max_lag)
    if spec.p == 1:
        return _arfima1_acvf(spec.d, spec.ar[0], spec.sigma2, max_lag, budget)
    return _split_acvf(spec, max_lag, max_terms)


def acf(spec: ArfimaSpec, max_lag: int, **kwargs) -> np.ndarray:
    """Autocorrelations ``rho(0..max_lag)``."""
    g = acvf(spec, max_lag, **kwargs)
    out = g / g[0]
    out[0] = 1.0
    return out


def irf(spec: ArfimaSpec, max_lag: int) -> np.ndarray:
    """Impulse responses ``psi(0..max_lag)`` of ``Phi(z)**-1 (1 - z)**-d``."""
    n = int(max_lag) + 1
    weights = frac_coeffs(-spec.d, n)
    return lfilter([1.0], np.concatenate(([1.0], -np.asarray(spec.ar))), weights)


def acvf_by_ma(spec: ArfimaSpec, max_lag: int, n_terms: int = 100_000) -> np.ndarray:
    """Autocovariances from truncated moving-average weights.

    ``sigma2 * sum_{j < J} psi(j) psi(j + k)`` with ``J = n_terms``. Slow to
    converge for ``d`` near 0.5; used as an independent check.
    """
    psi = irf(spec, n_terms + max_lag)
    out = np.empty(max_lag + 1)
    head = psi[:n_terms]
    for k in range(max_lag + 1):
        out[k] = np.dot(head, psi[k : k + n_terms])
    return spec.sigma2 * out
