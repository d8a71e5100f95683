"""Autoregressive approximation: fitting, order selection, inversion, stability.

Coefficients follow the prediction-error convention
``Phi_h(z) = 1 + phi(1) z + ... + phi(h) z**h``, so an AR(1) with positive
dependence 0.6 is stored as ``phi = [-0.6]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_series

__all__ = [
    "ArModel",
    "ArApproximation",
    "burg_path",
    "levinson_path",
    "sample_autocovariance",
    "fit_ar",
    "fit_path",
    "aic_order",
    "select_order_aic",
    "max_order",
    "ar_to_irf",
    "ar_to_acvf",
    "ar_to_acf",
    "ar_residuals",
    "schur_cohn_stable",
    "reflection_coefficients",
    "reflect_to_stationary",
]

FIT_METHODS = ("burg", "yule_walker")

# roots within this distance of the unit circle count as unstable
ROOT_EPS = 1e-10
# reflected roots are pushed at least this far outside the unit circle
REFLECT_MARGIN = 1e-6


@dataclass(frozen=True)
class ArModel:
    """A fitted AR(h) approximation."""

    h: int
    phi: np.ndarray
    sigma2: float
    method: str = "burg"
    mean: float = 0.0
    sigma2_path: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float).reshape(-1)
        object.__setattr__(self, "phi", phi)
        if phi.shape[0] != self.h:
            raise ValueError(f"phi has {phi.shape[0]} coefficients for order {self.h}")
        if not self.sigma2 > 0:
            raise ValueError("innovation variance must be positive")

    @property
    def polynomial(self) -> np.ndarray:
        """``[1, phi(1), ..., phi(h)]``."""
        return np.concatenate(([1.0], self.phi))


def _as_rows(x):
    x = np.asarray(x, dtype=float)
    return (x[None, :], True) if x.ndim == 1 else (x, False)


def burg_path(x, max_order: int, demean: bool = True):
    """Burg lattice recursion for every order ``0..max_order``.

    Parameters
    ----------
    x : array_like, shape (T,) or (n, T)
        Series, one per row for 2-d input. Rows are fitted independently.
    max_order : int
        Highest order.
    demean : bool, default=True
        Subtract each row's sample mean first.

    Returns
    -------
    coefs : ndarray, shape (n, max_order + 1, max_order)
        ``coefs[:, m, :m]`` holds the order-``m`` coefficients.
    sigma2 : ndarray, shape (n, max_order + 1)
        Prediction error variance at each order, starting from the sample
        variance with divisor ``T``.
    """
    X, single = _as_rows(x)
    n, T = X.shape
    M = int(max_order)
    if M < 0 or M >= T:
        raise ValueError(f"order must lie in 0..T-1 = {T - 1}, got {M}")
    if demean:
        X = X - X.mean(axis=1, keepdims=True)
    ef = X.copy()
    eb = X.copy()
    coefs = np.zeros((n, M + 1, max(M, 1)))
    sigma2 = np.empty((n, M + 1))
    sigma2[:, 0] = np.mean(X * X, axis=1)
    a = np.zeros((n, M + 1))
    a[:, 0] = 1.0
    for m in range(1, M + 1):
        f = ef[:, m:]
        b = eb[:, m - 1 : -1]
        num = -2.0 * np.einsum("ij,ij->i", f, b)
        den = np.einsum("ij,ij->i", f, f) + np.einsum("ij,ij->i", b, b)
        with np.errstate(invalid="ignore", divide="ignore"):
            k = np.where(den > 0, num / den, 0.0)
        # a_m(j) = a_{m-1}(j) + k a_{m-1}(m - j)
        prev = a.copy()
        a[:, 1 : m + 1] = prev[:, 1 : m + 1] + k[:, None] * prev[:, m - 1 :: -1][:, :m]
        f_new = f + k[:, None] * b
        eb[:, m:] = b + k[:, None] * f
        ef[:, m:] = f_new
        sigma2[:, m] = sigma2[:, m - 1] * (1.0 - k * k)
        coefs[:, m, :m] = a[:, 1 : m + 1]
    if single:
        return coefs[0], sigma2[0]
    return coefs, sigma2


def sample_autocovariance(x, max_lag: int, demean: bool = True) -> np.ndarray:
    """Biased (divisor ``T``) sample autocovariances ``c(0..max_lag)``, row-wise."""
    X, single = _as_rows(x)
    T = X.shape[1]
    if demean:
        X = X - X.mean(axis=1, keepdims=True)
    nfft = 1 << int(math.ceil(math.log2(2 * T)))
    spec = np.fft.rfft(X, nfft, axis=1)
    c = np.fft.irfft(spec * np.conj(spec), nfft, axis=1)[:, : max_lag + 1] / T
    return c[0] if single else c


def levinson_path(acov, max_order: int):
    """Durbin-Levinson solution of the Yule-Walker system for every order.

    ``acov`` holds ``gamma(0..max_order)``, one sequence per row for 2-d input.
    Returns ``(coefs, sigma2)`` shaped as in :func:`burg_path`.
    """
    G, single = _as_rows(acov)
    n = G.shape[0]
    M = int(max_order)
    if G.shape[1] < M + 1:
        raise ValueError("need autocovariances up to lag max_order")
    coefs = np.zeros((n, M + 1, max(M, 1)))
    sigma2 = np.empty((n, M + 1))
    sigma2[:, 0] = G[:, 0]
    a = np.zeros((n, M + 1))
    a[:, 0] = 1.0
    for m in range(1, M + 1):
        acc = np.einsum("ij,ij->i", a[:, :m], G[:, m:0:-1])
        with np.errstate(invalid="ignore", divide="ignore"):
            k = -acc / sigma2[:, m - 1]
        prev = a.copy()
        a[:, 1 : m + 1] = prev[:, 1 : m + 1] + k[:, None] * prev[:, m - 1 :: -1][:, :m]
        sigma2[:, m] = sigma2[:, m - 1] * (1.0 - k * k)
        coefs[:, m, :m] = a[:, 1 : m + 1]
    if single:
        return coefs[0], sigma2[0]
    return coefs, sigma2


def _check_fit_input(y, h: int):
    y = check_series(y, min_length=2)
    h = int(h)
    if h < 0:
        raise ValueError("order must be nonnegative")
    if h >= y.shape[0]:
        raise ValueError(f"order {h} must be smaller than the sample size {y.shape[0]}")
    if np.ptp(y) == 0.0:
        raise ValueError("cannot fit an autoregression to a constant series")
    return y, h


def fit_path(y, max_order: int, method: str = "burg"):
    """Coefficients and innovation variances of AR(0..max_order) fits to ``y``."""
    if method not in FIT_METHODS:
        raise ValueError(f"method must be one of {FIT_METHODS}, got {method!r}")
    if method == "burg":
        return burg_path(y, max_order)
    return levinson_path(sample_autocovariance(y, max_order), max_order)


def fit_ar(y, h: int, method: str = "burg") -> ArModel:
    """Fit an AR(h) approximation by Burg or Yule-Walker.

    Both routes work on the mean-corrected series. The innovation variance is
    the final prediction error variance of the recursion.
    """
    y, h = _check_fit_input(y, h)
    coefs, sigma2 = fit_path(y, h, method)
    return ArModel(h=h, phi=coefs[h, :h], sigma2=float(sigma2[h]), method=method,
                   mean=float(y.mean()), sigma2_path=sigma2)


def aic_order(sigma2_path, T: int) -> int:
    """Minimiser of ``ln(sigma2_h) + 2 h / T``; ties go to the smallest order."""
    s = np.asarray(sigma2_path, dtype=float)
    if np.any(s <= 0):
        raise ValueError("prediction error variances must be positive")
    crit = np.log(s) + 2.0 * np.arange(s.shape[-1]) / T
    # criteria equal up to rounding count as ties
    best = crit.min()
    return int(np.argmax(crit <= best + 1e-12 * max(1.0, abs(best))))


def select_order_aic(y, max_lag_order: int, method: str = "burg") -> int:
    """AIC order over ``0..max_lag_order``."""
    y, M = _check_fit_input(y, max_lag_order)
    _, sigma2 = fit_path(y, M, method)
    return aic_order(sigma2, y.shape[0])


def max_order(T: int) -> int:
    """``floor((ln T)**2)``, the long-autoregression order for sample size ``T``."""
    T = int(T)
    if T < 1:
        raise ValueError("T must be positive")
    return int(math.floor(math.log(T) ** 2))


def _phi_of(model_or_phi) -> np.ndarray:
    if isinstance(model_or_phi, ArModel):
        return model_or_phi.phi
    return np.asarray(model_or_phi, dtype=float)


def ar_to_irf(model_or_phi, max_lag: int) -> np.ndarray:
    """Power-series inverse of ``Phi_h(z)``: ``psi(0..max_lag)``.

    Accepts an :class:`ArModel`, a coefficient vector, or a 2-d array with one
    coefficient vector per row.
    """
    phi = _phi_of(model_or_phi)
    impulse = np.zeros(int(max_lag) + 1)
    impulse[0] = 1.0
    if phi.ndim == 1:
        return lfilter([1.0], np.concatenate(([1.0], phi)), impulse)
    out = np.empty((phi.shape[0], impulse.shape[0]))
    for i, row in enumerate(phi):
        out[i] = lfilter([1.0], np.concatenate(([1.0], row)), impulse)
    return out


def ar_to_acvf(phi, sigma2: float, max_lag: int) -> np.ndarray:
    """Autocovariances of the AR process ``Phi_h(L) y = e`` with ``var(e) = sigma2``.

    Solves the Yule-Walker system for ``gamma(0..h)`` then extends it with the
    autoregressive recursion.
    """
    phi = _phi_of(phi)
    h = phi.shape[0]
    max_lag = int(max_lag)
    if h == 0:
        out = np.zeros(max_lag + 1)
        out[0] = sigma2
        return out
    a = np.concatenate(([1.0], phi))
    # sum_j a_j gamma(|k - j|) = sigma2 * delta_k,  k = 0..h
    A = np.zeros((h + 1, h + 1))
    for k in range(h + 1):
        for j in range(h + 1):
            A[k, abs(k - j)] += a[j]
    rhs = np.zeros(h + 1)
    rhs[0] = sigma2
    gam = np.linalg.solve(A, rhs)
    n = max(max_lag, h) + 1
    out = np.empty(n)
    out[: h + 1] = gam
    for k in range(h + 1, n):
        out[k] = -np.dot(phi, out[k - 1 :: -1][:h])
    return out[: max_lag + 1]


def ar_to_acf(model_or_phi, max_lag: int) -> np.ndarray:
    """Autocorrelations ``rho(0..max_lag)`` implied by the AR model."""
    phi = _phi_of(model_or_phi)
    g = ar_to_acvf(phi, 1.0, max_lag)
    return g / g[0]


def ar_residuals(x, phi, circular: bool = True) -> np.ndarray:
    """Prediction errors ``sum_{j=0}^h phi(j) x(t - j)`` for ``t = 1..T``.

    With ``circular=True`` the values before the sample are taken from its
    end, ``x(1 - j) = x(T - j + 1)``; otherwise they are zero.
    """
    x = np.asarray(x, dtype=float)
    phi = _phi_of(phi)
    h = phi.shape[0]
    T = x.shape[-1]
    if h >= T:
        raise ValueError("order must be smaller than the series length")
    a = np.concatenate(([1.0], phi))
    if not circular:
        return lfilter(a, [1.0], x, axis=-1)
    padded = np.concatenate((x[..., T - h :], x), axis=-1) if h else x
    return lfilter(a, [1.0], padded, axis=-1)[..., h:]


def reflection_coefficients(phi) -> np.ndarray:
    """Step-down (Schur-Cohn) recursion: reflection coefficients of ``Phi(z)``.

    Returns them from order ``h`` down to 1. A coefficient of magnitude one
    stops the recursion and is returned as the last entry.
    """
    a = np.array(_phi_of(phi), dtype=float)
    ks = []
    while a.shape[0]:
        m = a.shape[0]
        k = a[-1]
        ks.append(k)
        if abs(k) >= 1.0 - ROOT_EPS:
            break
        a = (a[:-1] - k * a[-2::-1]) / (1.0 - k * k) if m > 1 else a[:0]
    return np.asarray(ks)


def schur_cohn_stable(phi) -> bool:
    """True when every zero of ``Phi(z)`` lies strictly outside the unit circle."""
    ks = reflection_coefficients(phi)
    if not np.all(np.isfinite(ks)):
        return False
    return bool(np.all(np.abs(ks) < 1.0 - ROOT_EPS))


def reflect_to_stationary(phi) -> np.ndarray:
    """Mirror zeros of ``Phi(z)`` on or inside the unit circle to ``1 / conj(r)``.

    Stable inputs are returned unchanged. The repaired polynomial is rebuilt
    from its zeros with constant term one.
    """
    phi = np.array(_phi_of(phi), dtype=float)
    h = phi.shape[0]
    if h == 0 or schur_cohn_stable(phi):
        return phi
    # negligible top coefficients only contribute enormous (stable) roots that
    # np.roots cannot resolve; treat them as zero
    scale = max(1.0, float(np.max(np.abs(phi))))
    keep = np.nonzero(np.abs(phi) > 1e-14 * scale)[0]
    phi = phi[: keep[-1] + 1] if keep.size else phi[:0]
    # np.roots wants the highest power first
    roots = np.roots(np.concatenate((phi[::-1], [1.0])))
    if not np.all(np.isfinite(roots)):
        raise np.linalg.LinAlgError("root finding did not converge")
    mod = np.abs(roots)
    inside = mod <= 1.0 + ROOT_EPS
    roots = roots.astype(complex)
    roots[inside] = 1.0 / np.conj(roots[inside])
    mod = np.abs(roots)
    near = mod < 1.0 + REFLECT_MARGIN
    roots[near] = roots[near] / mod[near] * (1.0 + REFLECT_MARGIN)
    # Phi(z) = prod(1 - z / r); np.poly gives prod(x - r) in the reciprocal variable
    inv = 1.0 / roots
    poly = np.poly(inv)  # coefficients of prod(w - 1/r), w = 1/z  ->  reversed Phi
    out = np.real(poly[1:])
    dropped = h - out.shape[0]
    if dropped > 0:
        out = np.concatenate((out, np.zeros(dropped)))
    return out


class ArApproximation(BaseEstimator):
    """Autoregressive approximation of a univariate series.

    Parameters
    ----------
    order : {"aic", "logsq"} or int, default="logsq"
        ``"aic"`` selects the order by AIC over ``0..floor((ln T)**2)``,
        ``"logsq"`` fixes it at ``floor((ln T)**2)``, an integer fixes it.
    method : {"burg", "yule_walker"}, default="burg"
        Estimation method. Burg always yields a stable fit.

    Attributes
    ----------
    order_ : int
    coef_ : ndarray of shape (order_,)
        ``phi(1..h)`` in the ``1 + phi(1) z + ...`` convention.
    sigma2_ : float
    model_ : ArModel
    """

    def __init__(self, order="logsq", method: str = "burg"):
        self.order = order
        self.method = method

    def fit(self, y, X=None):
        y = check_series(y, min_length=2)
        T = y.shape[0]
        if self.order == "aic":
            h = select_order_aic(y, min(max_order(T), T - 1), self.method)
        elif self.order in ("logsq", "fixed_log_sq"):
            h = min(max_order(T), T - 1)
        else:
            h = int(self.order)
        self.model_ = fit_ar(y, h, self.method)
        self.order_ = self.model_.h
        self.coef_ = self.model_.phi
        self.sigma2_ = self.model_.sigma2
        self.mean_ = self.model_.mean
        return self

    def impulse_response(self, max_lag: int) -> np.ndarray:
        check_is_fitted(self, "model_")
        return ar_to_irf(self.model_, max_lag)

    def autocorrelation(self, max_lag: int) -> np.ndarray:
        check_is_fitted(self, "model_")
        return ar_to_acf(self.model_, max_lag)

    def residuals(self, y, circular: bool = True) -> np.ndarray:
        check_is_fitted(self, "model_")
        y = check_series(y)
        return ar_residuals(y - self.mean_, self.coef_, circular=circular)
