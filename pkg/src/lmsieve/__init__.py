"""Sieve bootstrap estimates of small-sample bias in the ACF and IRF of long-memory series."""

__version__ = "0.1.0"

from .arfima import ArfimaSpec, acf, acvf, irf
from .arfit import ArApproximation, ArModel, fit_ar
from .estimators import LocalWhittle, sample_acf, sample_irf, splw
from .fracdiff import FractionalDifferencer, frac_filter, frac_unfilter
from .sieve import SieveBiasCorrector, SieveConfig, bootstrap_distributions
from .simulate import SimConfig, simulate_gaussian

__all__ = [
    "__version__",
    "ArfimaSpec",
    "acf",
    "acvf",
    "irf",
    "ArApproximation",
    "ArModel",
    "fit_ar",
    "LocalWhittle",
    "sample_acf",
    "sample_irf",
    "splw",
    "FractionalDifferencer",
    "frac_filter",
    "frac_unfilter",
    "SieveBiasCorrector",
    "SieveConfig",
    "bootstrap_distributions",
    "SimConfig",
    "simulate_gaussian",
]
