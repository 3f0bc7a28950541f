"""The Marshall-Olkin extended generalized Gompertz (MOEGG) lifetime distribution.

Submodules: ``specialfn`` (incomplete gamma, integro-exponential, K-S
p-values), ``distribution`` (pdf, cdf, quantile, sampling, mixture form),
``properties`` (moments, deviations, residual life, entropy, order
statistics, orderings), ``inference`` (likelihood, score, information,
fitting), ``gof`` (fit statistics and model comparison) and ``cli``.
"""

from .distribution import MoeggParams, cdf, hazard, log_pdf, pdf, quantile, sample, sf
from .exceptions import DataError, DomainError
from .inference import Dataset, FitConfig, FitResult, confidence_intervals, fit_mle

__version__ = "0.1.0"

__all__ = [
    "MoeggParams",
    "pdf",
    "log_pdf",
    "cdf",
    "sf",
    "hazard",
    "quantile",
    "sample",
    "Dataset",
    "FitConfig",
    "FitResult",
    "fit_mle",
    "confidence_intervals",
    "DomainError",
    "DataError",
]
