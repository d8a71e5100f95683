"""Fractional differencing filters and the Fisher-z transform pair."""
from __future__ import annotations

import numpy as np
from scipy.signal import lfilter
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_memory, check_panel

__all__ = [
    "frac_coeffs",
    "frac_filter",
    "frac_unfilter",
    "fisher_z",
    "fisher_z_inv",
    "FractionalDifferencer",
]


def frac_coeffs(d: float, n: int) -> np.ndarray:
    """Coefficients of the binomial expansion of ``(1 - z)**d``.

    Parameters
    ----------
    d : float
        Fractional index, ``d > -1``.
    n : int
        Number of coefficients.

    Returns
    -------
    ndarray, shape (n,)
        ``alpha_0, ..., alpha_{n-1}`` with ``alpha_0 = 1``.

    Examples
    --------
    >>> frac_coeffs(0.5, 3)
    array([ 1.   , -0.5  , -0.125])
    """
    return _coeffs(check_memory(d), n)


def _coeffs(d: float, n: int) -> np.ndarray:
    n = int(n)
    if n < 1:
        raise ValueError("n must be at least 1")
    j = np.arange(1, n, dtype=float)
    # product form; gamma ratios overflow for j beyond ~170
    out = np.empty(n)
    out[0] = 1.0
    out[1:] = np.cumprod((j - 1.0 - d) / j)
    return out


def _truncated_filter(x: np.ndarray, d: float, demean: bool) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim not in (1, 2) or x.shape[-1] < 1:
        raise ValueError("series must be 1-d (or 2-d with one series per row) and nonempty")
    if demean:
        x = x - x.mean(axis=-1, keepdims=True)
    coeffs = _coeffs(d, x.shape[-1])
    return lfilter(coeffs, [1.0], x, axis=-1)


def frac_filter(y, d: float, demean: bool = False) -> np.ndarray:
    """Apply ``(1 - z)**d`` using in-sample values only.

    Element ``t`` is ``sum_{j=0}^{t-1} alpha_j y(t - j)``; nothing before the
    first observation enters. A 2-d input is filtered row by row.
    """
    return _truncated_filter(y, check_memory(d), demean)


def frac_unfilter(w, d: float) -> np.ndarray:
    """Apply the truncated inverse filter ``(1 - z)**(-d)``.

    The domain is that of :func:`frac_filter` (``d > -1``); the expansion of
    ``(1 - z)**(-d)`` is formal, so ``d = 1`` gives a cumulative sum.
    """
    d = check_memory(d)
    return _truncated_filter(w, -d, False)


def fisher_z(r):
    """``artanh(r)``; raises for any ``|r| >= 1``."""
    r = np.asarray(r, dtype=float)
    if np.any(~np.isfinite(r)) or np.any(np.abs(r) >= 1.0):
        raise ValueError("fisher_z requires every value strictly inside (-1, 1)")
    out = np.arctanh(r)
    return out if out.ndim else float(out)


def fisher_z_inv(z):
    """``tanh(z)``, clipped so the result stays strictly inside (-1, 1)."""
    z = np.asarray(z, dtype=float)
    out = np.tanh(z)
    # tanh rounds to +-1 in double precision once |z| > ~19
    lim = np.nextafter(1.0, 0.0)
    out = np.clip(out, -lim, lim)
    return out if out.ndim else float(out)


class FractionalDifferencer(TransformerMixin, BaseEstimator):
    """Transformer applying the truncated fractional difference ``(1 - z)**d``.

    Each row of ``X`` is treated as one time series. ``inverse_transform``
    applies ``(1 - z)**(-d)`` so the pair round-trips exactly when
    ``demean=False``.

    Parameters
    ----------
    d : float, default=0.4
        Fractional index.
    demean : bool, default=False
        Subtract each series' sample mean before filtering.
    """

    def __init__(self, d: float = 0.4, demean: bool = False):
        self.d = d
        self.demean = demean

    def fit(self, X, y=None):
        self.d_ = check_memory(self.d)
        check_panel(X)
        return self

    def transform(self, X):
        check_is_fitted(self, "d_")
        return frac_filter(check_panel(X), self.d_, demean=self.demean)

    def inverse_transform(self, X):
        check_is_fitted(self, "d_")
        return frac_unfilter(check_panel(X), self.d_)
