"""Sample persistence statistics and the local Whittle estimator of d."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_lags, check_series
from .arfit import aic_order, ar_to_irf, burg_path, fit_path, max_order

__all__ = [
    "ORDER_RULES",
    "sample_acf",
    "sample_acf_lk",
    "sample_irf",
    "resolve_order",
    "periodogram",
    "whittle_objective",
    "SplwEstimate",
    "splw",
    "default_bandwidth",
    "LocalWhittle",
]

ORDER_RULES = ("aic", "fixed_log_sq")
D_BOUNDS = (-0.499, 0.499)
GRID_POINTS = 201


def _rows(y):
    y = np.asarray(y, dtype=float)
    return (y[None, :], True) if y.ndim == 1 else (y, False)


def sample_acf(y, lags) -> np.ndarray:
    """Sample autocorrelations with the full-sample mean.

    ``sum_{t<=T-k} (y(t)-ybar)(y(t+k)-ybar) / sum_t (y(t)-ybar)**2``.
    A 2-d ``y`` is handled row-wise and gives one row of autocorrelations per
    series.
    """
    Y, single = _rows(y)
    T = Y.shape[1]
    lags = check_lags(lags, T)
    D = Y - Y.mean(axis=1, keepdims=True)
    denom = np.einsum("ij,ij->i", D, D)
    if np.any(denom <= 0):
        raise ValueError("sample variance is zero")
    kmax = int(lags.max())
    if kmax > 30:
        nfft = 1 << int(math.ceil(math.log2(2 * T)))
        spec = np.fft.rfft(D, nfft, axis=1)
        num = np.fft.irfft(spec * np.conj(spec), nfft, axis=1)[:, lags]
    else:
        num = np.stack([np.einsum("ij,ij->i", D[:, : T - k], D[:, k:]) for k in lags], axis=1)
    out = num / denom[:, None]
    return out[0] if single else out


def sample_acf_lk(y, lags) -> np.ndarray:
    """Segment-mean autocorrelation ``r(k) = C(k) / C(0)``.

    ``C(k)`` averages ``(y(t) - mean(y[1:T-k])) (y(t+k) - mean(y[k+1:T]))``
    over ``T - k`` terms, ``C(0)`` is the variance with divisor ``T``.
    """
    y = check_series(y, min_length=2)
    T = y.shape[0]
    lags = check_lags(lags, T)
    c0 = np.mean((y - y.mean()) ** 2)
    if c0 <= 0:
        raise ValueError("sample variance is zero")
    out = np.empty(lags.shape[0])
    for i, k in enumerate(lags):
        a = y[: T - k]
        b = y[k:]
        out[i] = np.mean((a - a.mean()) * (b - b.mean())) / c0
    return out


def resolve_order(T: int, order_rule: str | int) -> int | None:
    """Fixed order for ``order_rule``; ``None`` means select by AIC."""
    if order_rule == "aic":
        return None
    if order_rule in ("fixed_log_sq", "logsq"):
        return min(max_order(T), T - 1)
    h = int(order_rule)
    if h < 0 or h >= T:
        raise ValueError(f"order must lie in 0..{T - 1}")
    return h


def fit_coefficients(Y, order_rule, method: str = "burg"):
    """Fitted coefficient vectors, one per row, padded with zeros.

    Returns ``(phi, orders)`` where ``phi`` has shape ``(n, M)`` and row ``i``
    holds the order-``orders[i]`` fit followed by zeros.
    """
    Y, _ = _rows(Y)
    T = Y.shape[1]
    h = resolve_order(T, order_rule)
    M = min(max_order(T), T - 1) if h is None else h
    if np.any(np.ptp(Y, axis=1) == 0):
        raise ValueError("cannot fit an autoregression to a constant series")
    if method == "burg":
        coefs, sigma2 = burg_path(Y, M)
    else:
        coefs, sigma2 = fit_path(Y, M, method)
        if coefs.ndim == 2:
            coefs, sigma2 = coefs[None], sigma2[None]
    if h is None:
        orders = np.array([aic_order(s, T) for s in sigma2])
    else:
        orders = np.full(Y.shape[0], M)
    phi = coefs[np.arange(Y.shape[0]), orders, :]
    return phi, orders


def sample_irf(y, order_rule="fixed_log_sq", lags=(1,), method: str = "burg") -> np.ndarray:
    """Semi-parametric impulse responses from an inverted AR(h) fit.

    ``h`` is chosen by AIC over ``0..floor((ln T)**2)`` or fixed at
    ``floor((ln T)**2)``. Row-wise for 2-d input.
    """
    Y, single = _rows(y)
    lags = check_lags(lags, Y.shape[1])
    phi, _ = fit_coefficients(Y, order_rule, method)
    psi = ar_to_irf(phi, int(lags.max()))[:, lags]
    return psi[0] if single else psi


def periodogram(y, n_freq: int):
    """Mean-corrected periodogram at ``lambda_j = 2 pi j / T``, ``j = 1..n_freq``."""
    y = np.asarray(y, dtype=float)
    T = y.shape[0]
    dft = np.fft.fft(y - y.mean())[1 : n_freq + 1]
    lam = 2.0 * np.pi * np.arange(1, n_freq + 1) / T
    return lam, np.abs(dft) ** 2 / (2.0 * np.pi * T)


def whittle_objective(d, lam, I):
    """Local Whittle objective ``ln(mean(lam**(2d) I)) - 2 d mean(ln lam)``."""
    d = np.atleast_1d(np.asarray(d, dtype=float))
    loglam = np.log(lam)
    vals = np.log(np.mean(np.exp(2.0 * d[:, None] * loglam[None, :]) * I[None, :], axis=1))
    out = vals - 2.0 * d * loglam.mean()
    return out if out.shape[0] > 1 else float(out[0])


@dataclass(frozen=True)
class SplwEstimate:
    d_hat: float
    bandwidth: int
    objective_value: float


def default_bandwidth(T: int, exponent: float = 0.65) -> int:
    """``floor(T**exponent)``, capped below ``T / 2``."""
    return max(1, min(int(math.floor(T ** exponent)), (T - 1) // 2))


def splw(y, bandwidth: int | None = None, bounds=D_BOUNDS) -> SplwEstimate:
    """Local Whittle (Gaussian semiparametric) estimate of d on the stationary region.

    The objective is scanned on a 201-point grid over ``bounds`` and the best
    grid cell refined by golden-section search.
    """
    y = check_series(y, min_length=4)
    T = y.shape[0]
    N = default_bandwidth(T) if bandwidth is None else int(bandwidth)
    if not 1 <= N < T / 2:
        raise ValueError(f"bandwidth must satisfy 1 <= N < T/2, got {N} for T={T}")
    lam, I = periodogram(y, N)
    scale = max(float(np.mean((y - y.mean()) ** 2)), np.finfo(float).tiny)
    if np.any(I <= 1e-28 * scale):
        raise ValueError("zero periodogram ordinate in the estimation band")
    lo, hi = bounds
    grid = np.linspace(lo, hi, GRID_POINTS)
    vals = whittle_objective(grid, lam, I)
    i = int(np.argmin(vals))

    def f(d):
        return whittle_objective(d, lam, I)

    if 0 < i < GRID_POINTS - 1:
        res = minimize_scalar(f, bracket=(grid[i - 1], grid[i], grid[i + 1]), method="golden", tol=1e-10)
        d_hat = float(np.clip(res.x, lo, hi))
    else:
        j = 1 if i == 0 else GRID_POINTS - 2
        res = minimize_scalar(f, bounds=tuple(sorted((grid[i], grid[j]))), method="bounded",
                              options={"xatol": 1e-10})
        d_hat = float(res.x) if res.fun < vals[i] else float(grid[i])
    return SplwEstimate(d_hat=d_hat, bandwidth=N, objective_value=float(f(d_hat)))


class LocalWhittle(BaseEstimator):
    """Semiparametric local Whittle estimator of the memory parameter.

    Parameters
    ----------
    bandwidth : int or None, default=None
        Number of Fourier frequencies; ``None`` uses ``floor(T**exponent)``.
    exponent : float, default=0.65
        Bandwidth exponent used when ``bandwidth`` is None.

    Attributes
    ----------
    d_ : float
    bandwidth_ : int
    objective_ : float
    """

    def __init__(self, bandwidth: int | None = None, exponent: float = 0.65):
        self.bandwidth = bandwidth
        self.exponent = exponent

    def fit(self, y, X=None):
        y = check_series(y, min_length=4)
        N = self.bandwidth if self.bandwidth is not None else default_bandwidth(y.shape[0], self.exponent)
        est = splw(y, N)
        self.d_ = est.d_hat
        self.bandwidth_ = est.bandwidth
        self.objective_ = est.objective_value
        return self

    def predict(self, X=None):
        check_is_fitted(self, "d_")
        return self.d_
