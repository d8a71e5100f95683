"""Input validation helpers shared by the estimators and functional API."""
from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils.validation import check_array


def check_series(y, *, min_length: int = 1, name: str = "y") -> np.ndarray:
    """Return ``y`` as a finite 1-d float array of at least ``min_length``.

    A column vector of shape ``(T, 1)`` is accepted and flattened, so a
    single-feature ``X`` from a pipeline works as well.
    """
    arr = np.asarray(y, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    arr = check_array(arr, ensure_2d=False, dtype=float, input_name=name)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.shape[0] < min_length:
        raise ValueError(f"{name} needs at least {min_length} observations, got {arr.shape[0]}")
    return arr


def check_panel(X, *, name: str = "X") -> np.ndarray:
    """Return ``X`` as a finite 2-d float array, one series per row."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    return check_array(arr, dtype=float, input_name=name)


def check_lags(lags, T: int | None = None) -> np.ndarray:
    """Validate a lag request: nonempty positive integers, each at most ``T - 1``."""
    if isinstance(lags, numbers.Integral):
        lags = [lags]
    out = np.asarray(lags)
    if out.size == 0:
        raise ValueError("lags must be nonempty")
    if not np.issubdtype(out.dtype, np.integer):
        if not np.all(np.equal(np.mod(out, 1), 0)):
            raise ValueError("lags must be integers")
        out = out.astype(int)
    out = out.ravel()
    if np.any(out < 0):
        raise ValueError("lags must be nonnegative")
    if T is not None and np.any(out > T - 1):
        raise ValueError(f"lags must not exceed T - 1 = {T - 1}")
    return out


def check_memory(d: float, *, lower: float = -1.0, upper: float | None = None, strict_upper: bool = True) -> float:
    d = float(d)
    if not np.isfinite(d) or d <= lower:
        raise ValueError(f"fractional index must exceed {lower}, got {d}")
    if upper is not None and (d >= upper if strict_upper else d > upper):
        raise ValueError(f"fractional index must be below {upper}, got {d}")
    return d
