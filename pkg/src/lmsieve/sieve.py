"""Raw and pre-filtered sieve bootstrap, reference values and bias adjustment.

The pre-filtered sieve whitens the long-memory component with
``(1 - z)**d_hat`` before fitting the autoregression, resamples the filtered
series, and restores the memory with ``(1 - z)**(-d_hat)``. The raw sieve skips
both filtering steps.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_lags, check_panel, check_series
from .arfima import ArfimaSpec, acf as arfima_acf, irf as arfima_irf
from .arfit import (
    ArModel,
    aic_order,
    ar_residuals,
    ar_to_acf,
    ar_to_irf,
    burg_path,
    fit_ar,
    fit_path,
    max_order,
    reflect_to_stationary,
    schur_cohn_stable,
)
from .estimators import resolve_order, sample_acf, sample_irf, splw
from .fracdiff import fisher_z, fisher_z_inv, frac_filter, frac_unfilter
from .simulate import derive_seed, make_rng

__all__ = [
    "SIEVE_METHODS",
    "SieveConfig",
    "SieveFit",
    "BootstrapDistribution",
    "fit_sieve",
    "draw_resamples",
    "sieve_resample",
    "reference_value",
    "statistic",
    "bias_adjust",
    "bootstrap_distributions",
    "kilian_coefficients",
    "kilian_adjust",
    "SieveBiasCorrector",
]

SIEVE_METHODS = ("raw", "prefiltered_splw", "prefiltered_true_d")
STAT_KINDS = ("acf", "irf")


@dataclass(frozen=True)
class SieveConfig:
    """Settings for one sieve bootstrap run.

    ``true_d`` is required for (and only for) ``method="prefiltered_true_d"``.
    ``bandwidth`` is the local Whittle bandwidth for ``prefiltered_splw``;
    ``None`` means ``floor(T**0.65)``.
    """

    method: str = "raw"
    B: int = 299
    order_rule: str = "fixed_log_sq"
    fit_method: str = "burg"
    true_d: float | None = None
    seed: int = 0
    bandwidth: int | None = None

    def __post_init__(self):
        if self.method not in SIEVE_METHODS:
            raise ValueError(f"method must be one of {SIEVE_METHODS}, got {self.method!r}")
        if int(self.B) < 2:
            raise ValueError("B must be at least 2")
        if (self.method == "prefiltered_true_d") != (self.true_d is not None):
            raise ValueError("true_d must be given exactly when method='prefiltered_true_d'")
        if self.fit_method not in ("burg", "yule_walker"):
            raise ValueError(f"unknown fit_method {self.fit_method!r}")

    @property
    def prefiltered(self) -> bool:
        return self.method != "raw"


@dataclass(frozen=True)
class SieveFit:
    """The bootstrap generating mechanism estimated from one series."""

    y: np.ndarray
    d_hat: float | None
    w: np.ndarray
    model: ArModel
    std_residuals: np.ndarray = field(repr=False)

    @property
    def h(self) -> int:
        return self.model.h


@dataclass(frozen=True)
class BootstrapDistribution:
    stat_kind: str
    lag: int
    draws: np.ndarray
    s_ref: float
    s_obs: float

    def __post_init__(self):
        object.__setattr__(self, "draws", np.sort(np.asarray(self.draws, dtype=float)))

    @property
    def B(self) -> int:
        return self.draws.shape[0]


def _estimate_d(y, config: SieveConfig, d_hat):
    if not config.prefiltered:
        return None
    if d_hat is not None:
        return float(d_hat)
    if config.method == "prefiltered_true_d":
        return float(config.true_d)
    return splw(y, config.bandwidth).d_hat


def _sieve_order(w, config: SieveConfig) -> int:
    T = w.shape[0]
    h = resolve_order(T, config.order_rule)
    if h is None:
        M = min(max_order(T), T - 1)
        _, sigma2 = fit_path(w, M, config.fit_method)
        h = aic_order(sigma2, T)
    return h


def fit_sieve(y, config: SieveConfig, d_hat: float | None = None) -> SieveFit:
    """Filter (if pre-filtering), fit the AR(h) sieve and standardise its residuals.

    Residuals use the circular start-up ``w(1 - j) = w(T - j + 1)`` and all
    ``T`` of them enter the resampling pool.
    """
    y = check_series(y, min_length=3)
    d = _estimate_d(y, config, d_hat)
    w = frac_filter(y, d) if d is not None else y.copy()
    h = _sieve_order(w, config)
    model = fit_ar(w, h, config.fit_method)
    if not schur_cohn_stable(model.phi):
        raise ValueError("fitted autoregression is not stationary; use fit_method='burg'")
    resid = ar_residuals(w - model.mean, model.phi, circular=True)
    s = resid.std()
    if not s > 0:
        raise ValueError("residuals have zero variance")
    std = (resid - resid.mean()) / s
    return SieveFit(y=y, d_hat=d, w=w, model=model, std_residuals=std)


def _initial_state(a: np.ndarray, past: np.ndarray) -> np.ndarray:
    """lfilter state for ``a(L) x = e`` given past outputs, most recent first."""
    h = a.shape[0] - 1
    zi = np.empty((past.shape[0], h))
    for m in range(h):
        zi[:, m] = -past[:, : h - m] @ a[m + 1 :]
    return zi


def draw_resamples(fit: SieveFit, B: int, seed: int) -> np.ndarray:
    """Generate ``B`` bootstrap series from a fitted sieve, one per row.

    Resample ``b`` uses its own stream ``derive_seed(seed, b)``: first the
    start-up index ``tau`` uniform on ``{h, ..., T}``, then ``T`` residual
    indices. The AR recursion runs on the mean-corrected filtered series and
    is started from the block ending at ``tau``.
    """
    w = fit.w
    T = w.shape[0]
    h = fit.h
    a = fit.model.polynomial
    centred = w - fit.model.mean
    taus = np.empty(B, dtype=np.int64)
    idx = np.empty((B, T), dtype=np.int64)
    for b in range(B):
        rng = make_rng(derive_seed(seed, b))
        taus[b] = rng.integers(h, T + 1)
        idx[b] = rng.integers(0, T, size=T)
    eps = np.sqrt(fit.model.sigma2) * fit.std_residuals[idx]
    if h:
        # w*(1 - j) = w(tau - j + 1), j = 1..h; tau is 1-based
        offsets = taus[:, None] - 1 - np.arange(h)[None, :]
        past = centred[offsets]
        zi = _initial_state(a, past)
        wstar = lfilter([1.0], a, eps, axis=1, zi=zi)[0]
    else:
        wstar = eps
    # the recursion has no intercept, so w* is mean zero; shifting the output by
    # the sample mean of y leaves every (mean-corrected) statistic unchanged
    ystar = wstar if fit.d_hat is None else frac_unfilter(wstar, fit.d_hat)
    return ystar + fit.y.mean()


def sieve_resample(y, config: SieveConfig, d_hat: float | None = None) -> np.ndarray:
    """``config.B`` raw or pre-filtered sieve bootstrap series of ``y``."""
    fit = fit_sieve(y, config, d_hat)
    return draw_resamples(fit, int(config.B), int(config.seed))


def reference_value(stat_kind: str, lags, method: str, fitted: ArModel, d_hat: float | None = None) -> np.ndarray:
    """Value of the statistic implied by the bootstrap generating model.

    Raw sieve: the fitted AR(h). Pre-filtered: the ARFIMA(h, d_hat, 0) built
    from ``d_hat`` and the AR fitted to the filtered series.
    """
    lags = check_lags(lags)
    kmax = int(lags.max())
    if stat_kind not in STAT_KINDS:
        raise ValueError(f"stat_kind must be one of {STAT_KINDS}")
    if method == "raw" or d_hat is None:
        full = ar_to_irf(fitted, kmax) if stat_kind == "irf" else ar_to_acf(fitted, kmax)
    else:
        spec = ArfimaSpec.from_prediction_form(d_hat, fitted.phi, fitted.sigma2)
        full = arfima_irf(spec, kmax) if stat_kind == "irf" else arfima_acf(spec, kmax)
    return full[lags]


def statistic(y, stat_kind: str, lags, order_rule="fixed_log_sq", fit_method: str = "burg") -> np.ndarray:
    """Sample ACF or semi-parametric IRF at ``lags``; row-wise for 2-d input."""
    if stat_kind == "acf":
        return sample_acf(y, lags)
    if stat_kind == "irf":
        return sample_irf(y, order_rule, lags, fit_method)
    raise ValueError(f"stat_kind must be one of {STAT_KINDS}")


def bias_adjust(dist: BootstrapDistribution, transform: str = "identity") -> float:
    """``s_obs - (mean(draws) - s_ref)``, optionally on the Fisher-z scale."""
    if transform == "identity":
        return float(dist.s_obs - (dist.draws.mean() - dist.s_ref))
    if transform == "fisher_z":
        z_draws = fisher_z(dist.draws)
        return float(fisher_z_inv(fisher_z(dist.s_obs) - (np.mean(z_draws) - fisher_z(dist.s_ref))))
    raise ValueError(f"unknown transform {transform!r}")


def _adjust_many(s_obs, draws, s_ref, transform):
    """Vectorised :func:`bias_adjust` over lags; ``draws`` is ``(B, n_lags)``."""
    if transform == "identity":
        return s_obs - (draws.mean(axis=0) - s_ref)
    return np.asarray(fisher_z_inv(fisher_z(s_obs) - (fisher_z(draws).mean(axis=0) - fisher_z(s_ref))))


def default_transform(stat_kind: str) -> str:
    return "fisher_z" if stat_kind == "acf" else "identity"


@dataclass
class SieveResult:
    """Bootstrap output for one series and one statistic."""

    stat_kind: str
    lags: np.ndarray
    s_obs: np.ndarray
    s_ref: np.ndarray
    draws: np.ndarray
    adjusted: np.ndarray
    transform: str
    d_hat: float | None
    h: int

    def distribution(self, lag: int) -> BootstrapDistribution:
        i = int(np.flatnonzero(self.lags == lag)[0])
        return BootstrapDistribution(self.stat_kind, int(lag), self.draws[:, i], float(self.s_ref[i]), float(self.s_obs[i]))


def bootstrap_distributions(y, config: SieveConfig, requests: dict, d_hat: float | None = None,
                            transforms: dict | None = None, resamples: np.ndarray | None = None):
    """Run one sieve bootstrap and bias-adjust every requested statistic.

    Parameters
    ----------
    y : array_like of shape (T,)
    config : SieveConfig
    requests : dict
        Maps ``"acf"`` and/or ``"irf"`` to the lags wanted.
    d_hat : float, optional
        Pre-filtering value; overrides the estimate implied by ``config``.
    transforms : dict, optional
        Per-statistic transform; defaults to Fisher-z for the ACF.
    resamples : ndarray, optional
        Previously drawn bootstrap series, reused instead of drawing anew.

    Returns
    -------
    results : dict of SieveResult
    fit : SieveFit
    resamples : ndarray of shape (B, T)
    """
    y = check_series(y, min_length=3)
    fit = fit_sieve(y, config, d_hat)
    if resamples is None:
        resamples = draw_resamples(fit, int(config.B), int(config.seed))
    transforms = transforms or {}
    out = {}
    for kind, lags in requests.items():
        lags = check_lags(lags, y.shape[0])
        s_obs = statistic(y, kind, lags, config.order_rule, config.fit_method)
        draws = statistic(resamples, kind, lags, config.order_rule, config.fit_method)
        s_ref = reference_value(kind, lags, config.method, fit.model, fit.d_hat)
        tr = transforms.get(kind, default_transform(kind))
        adjusted = _adjust_many(s_obs, draws, s_ref, tr)
        out[kind] = SieveResult(kind, lags, s_obs, s_ref, draws, adjusted, tr, fit.d_hat, fit.h)
    return out, fit, resamples


def kilian_coefficients(phi_bar, phi_star) -> np.ndarray:
    """``2 phi_bar - mean(phi_star)`` made stationary by root reflection."""
    phi_bar = np.asarray(phi_bar, dtype=float)
    phi_star = np.atleast_2d(np.asarray(phi_star, dtype=float))
    corrected = 2.0 * phi_bar - phi_star.mean(axis=0)
    return reflect_to_stationary(corrected)


def kilian_adjust(y, config: SieveConfig, lags, resamples: np.ndarray | None = None) -> np.ndarray:
    """Impulse responses from bootstrap bias-corrected AR coefficients.

    The AR(h) is fitted by Burg, ``B`` raw sieve resamples are refitted at the
    same order, the coefficient bias is removed and stationarity restored
    before inversion.
    """
    y = check_series(y, min_length=3)
    lags = check_lags(lags, y.shape[0])
    raw = SieveConfig(method="raw", B=config.B, order_rule=config.order_rule, fit_method="burg", seed=config.seed)
    fit = fit_sieve(y, raw)
    h = fit.h
    if h == 0:
        return ar_to_irf(np.zeros(0), int(lags.max()))[lags]
    if resamples is None:
        resamples = draw_resamples(fit, int(raw.B), int(raw.seed))
    coefs, _ = burg_path(resamples, h)
    phi_star = coefs[:, h, :h]
    phi_bc = kilian_coefficients(fit.model.phi, phi_star)
    return ar_to_irf(phi_bc, int(lags.max()))[lags]


class SieveBiasCorrector(BaseEstimator):
    """Bootstrap bias correction of the sample ACF or semi-parametric IRF.

    Parameters
    ----------
    statistic : {"irf", "acf"}, default="irf"
    lags : sequence of int, default=(1, 3, 6, 9, 12)
    method : {"raw", "prefiltered_splw", "prefiltered_true_d", "kilian"}, default="raw"
        ``"kilian"`` corrects the AR coefficients instead of the statistic and
        is only defined for the IRF.
    n_resamples : int, default=299
    order_rule : {"fixed_log_sq", "aic"} or int, default="fixed_log_sq"
    fit_method : {"burg", "yule_walker"}, default="burg"
    true_d : float, optional
        Pre-filtering value for ``method="prefiltered_true_d"``.
    transform : {"identity", "fisher_z"}, optional
        Scale of the additive correction; Fisher-z for the ACF by default.
    bandwidth : int, optional
        Local Whittle bandwidth for ``prefiltered_splw``.
    random_state : int, default=0
        Unsigned 64-bit seed.

    Attributes
    ----------
    statistic_ : ndarray
        Unadjusted statistic at ``lags``.
    corrected_ : ndarray
        Bias-adjusted statistic.
    bias_ : ndarray
        Estimated bias (on the original scale: ``statistic_ - corrected_``).
    reference_ : ndarray
        Reference values of the bootstrap model (not set for Kilian).
    draws_ : ndarray of shape (n_resamples, n_lags)
    d_hat_ : float or None
    order_ : int
    """

    def __init__(self, statistic: str = "irf", lags=(1, 3, 6, 9, 12), method: str = "raw",
                 n_resamples: int = 299, order_rule="fixed_log_sq", fit_method: str = "burg",
                 true_d: float | None = None, transform: str | None = None,
                 bandwidth: int | None = None, random_state: int = 0):
        self.statistic = statistic
        self.lags = lags
        self.method = method
        self.n_resamples = n_resamples
        self.order_rule = order_rule
        self.fit_method = fit_method
        self.true_d = true_d
        self.transform = transform
        self.bandwidth = bandwidth
        self.random_state = random_state

    def _config(self):
        method = "raw" if self.method == "kilian" else self.method
        return SieveConfig(method=method, B=int(self.n_resamples), order_rule=self.order_rule,
                           fit_method=self.fit_method,
                           true_d=self.true_d if method == "prefiltered_true_d" else None,
                           seed=int(self.random_state), bandwidth=self.bandwidth)

    def fit(self, y, X=None):
        y = check_series(y, min_length=3)
        lags = check_lags(self.lags, y.shape[0])
        config = self._config()
        if self.method == "kilian":
            if self.statistic != "irf":
                raise ValueError("the Kilian correction is defined for the IRF only")
            fit = fit_sieve(y, config)
            self.statistic_ = statistic(y, "irf", lags, self.order_rule, "burg")
            self.corrected_ = kilian_adjust(y, config, lags)
            self.bias_ = self.statistic_ - self.corrected_
            self.reference_ = None
            self.draws_ = None
            self.d_hat_ = None
            self.order_ = fit.h
            return self
        transforms = {self.statistic: self.transform} if self.transform else None
        results, fit, _ = bootstrap_distributions(y, config, {self.statistic: lags}, transforms=transforms)
        res = results[self.statistic]
        self.statistic_ = res.s_obs
        self.corrected_ = res.adjusted
        self.bias_ = res.s_obs - res.adjusted
        self.reference_ = res.s_ref
        self.draws_ = res.draws
        self.d_hat_ = res.d_hat
        self.order_ = res.h
        return self

    def predict(self, X=None):
        """The bias-corrected statistic of the fitted series."""
        check_is_fitted(self, "corrected_")
        return self.corrected_

    def correct_panel(self, X):
        """Bias-correct each row of ``X`` independently; returns ``(n_series, n_lags)``."""
        X = check_panel(X)
        params = self.get_params()
        return np.vstack([SieveBiasCorrector(**params).fit(row).corrected_ for row in X])
