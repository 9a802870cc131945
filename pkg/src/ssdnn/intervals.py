"""Confidence intervals for f(x) and residual-quantile prediction intervals.

Quantiles throughout are order statistics: the ``p``-quantile of ``m`` sorted
values is the ``ceil(p*m)``-th smallest (1-based, clamped to ``[1, m]``).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import ConfigError, DataError


class Method(str, enum.Enum):
    QCI1 = "QCI1"
    QCI2 = "QCI2"
    PCI1 = "PCI1"
    PCI2 = "PCI2"
    PCI3 = "PCI3"
    PI = "PI"


@dataclass(frozen=True)
class IntervalResult:
    lower: float
    upper: float
    method: Method
    nominal_delta: float

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise ValueError(f"lower bound {self.lower} exceeds upper bound {self.upper}")

    @property
    def length(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float) -> bool:
        """Closed-interval membership."""
        return self.lower <= value <= self.upper


@dataclass(frozen=True)
class KappaPair:
    """Normalising rates for the iterated-subsampling interval."""

    kappa_n: float
    kappa_b: float
    beta: float

    def __post_init__(self):
        if self.kappa_n <= 0 or self.kappa_b <= 0:
            raise ValueError("rates must be positive")

    @classmethod
    def bounds(cls, n: int, beta: float) -> "KappaPair":
        """Conservative pair when the variance order is unknown: the largest
        block rate (alpha = 1/2) and the smallest full-sample rate (alpha = 1/4)."""
        return cls(n ** ((1.0 - beta / 2.0) / 2.0), n ** (beta / 2.0), beta)

    @classmethod
    def from_alpha(cls, n: int, beta: float, alpha: float) -> "KappaPair":
        e = (1.0 - beta + 2.0 * alpha * beta) / 2.0
        return cls(n ** e, n ** (beta * e), beta)


@dataclass(frozen=True)
class ResidualDistribution:
    sorted_residuals: np.ndarray
    mean: float

    def quantile(self, p: float) -> float:
        return empirical_quantile(self.sorted_residuals, p)

    def __len__(self):
        return self.sorted_residuals.shape[0]


def normal_quantile(p: float) -> float:
    return float(ndtri(p))


def _check_delta(delta):
    if not 0.0 < delta < 1.0:
        raise ConfigError(f"delta must lie in (0, 1), got {delta}")


def empirical_quantile(sorted_values, p: float) -> float:
    v = np.asarray(sorted_values, dtype=np.float64).reshape(-1)
    m = v.shape[0]
    if m == 0:
        raise DataError("quantile of an empty sample")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    # round() absorbs products like 0.975*40 = 39.00000000000001
    k = math.ceil(round(p * m, 9))
    return float(v[min(max(k, 1), m) - 1])


def _equal_tail(values, delta):
    s = np.sort(np.asarray(values, dtype=np.float64).reshape(-1))
    return empirical_quantile(s, delta / 2.0), empirical_quantile(s, 1.0 - delta / 2.0)


def qci1(member_preds, delta: float) -> IntervalResult:
    """Equal-tail quantiles of the member predictions themselves."""
    _check_delta(delta)
    if np.size(member_preds) < 2:
        raise ConfigError("QCI1 needs at least 2 members")
    lo, hi = _equal_tail(member_preds, delta)
    return IntervalResult(lo, hi, Method.QCI1, delta)


def _member_spread(mean, member_preds):
    preds = np.asarray(member_preds, dtype=np.float64).reshape(-1)
    if preds.size < 2:
        raise ConfigError("pivot intervals need at least 2 members")
    return float(np.mean((preds - mean) ** 2))


def pci1(mean: float, member_preds, n: int, beta: float, delta: float) -> IntervalResult:
    """``mean +- z * sqrt(mean squared member deviation) / n**((1-beta)/2)``."""
    _check_delta(delta)
    margin = math.sqrt(_member_spread(mean, member_preds) / n ** (1.0 - beta))
    z = normal_quantile(1.0 - delta / 2.0)
    return IntervalResult(mean - z * margin, mean + z * margin, Method.PCI1, delta)


def pci_enlarged(mean: float, member_preds, y_at_x: float, n: int, beta: float,
                 delta: float, variant: Method | str) -> IntervalResult:
    """PCI1 with the squared gap ``(mean - y)^2`` added to the margin.

    The gap is divided by ``n**(1-beta)`` for PCI2 and by ``n`` for PCI3.
    """
    _check_delta(delta)
    variant = Method(variant)
    if variant is Method.PCI2:
        gap_exp = 1.0 - beta
    elif variant is Method.PCI3:
        gap_exp = 1.0
    else:
        raise ConfigError(f"variant must be PCI2 or PCI3, got {variant.value}")
    spread = _member_spread(mean, member_preds) / n ** (1.0 - beta)
    margin = math.sqrt(spread + (mean - y_at_x) ** 2 / n ** gap_exp)
    z = normal_quantile(1.0 - delta / 2.0)
    return IntervalResult(mean - z * margin, mean + z * margin, variant, delta)


def qci2_iterated(mean: float, iterated_means, kappas: KappaPair, delta: float) -> IntervalResult:
    """Interval from the subsampling distribution of ``kappa_b*(fbar_i - mean)``.

    With ``lo, hi`` its equal-tail quantiles the interval is
    ``[mean - hi/kappa_n, mean - lo/kappa_n]``.
    """
    _check_delta(delta)
    if np.size(iterated_means) < 2:
        raise ConfigError("QCI2 needs at least 2 first-stage blocks")
    roots = kappas.kappa_b * (np.asarray(iterated_means, dtype=np.float64) - mean)
    lo, hi = _equal_tail(roots, delta)
    return IntervalResult(mean - hi / kappas.kappa_n, mean - lo / kappas.kappa_n, Method.QCI2, delta)


def residual_distribution(residuals) -> ResidualDistribution:
    r = np.sort(np.asarray(residuals, dtype=np.float64).reshape(-1))
    if r.size == 0:
        raise DataError("no residuals")
    return ResidualDistribution(r, float(r.mean()))


def fit_residuals(ensemble, X, y) -> ResidualDistribution:
    """Sorted ``y_i - fbar(x_i)`` over the training data (not centred)."""
    from .subagging import predict_mean

    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.size == 0:
        raise DataError("no data")
    return residual_distribution(y - predict_mean(ensemble, np.atleast_2d(X)))


def prediction_interval(mean_at_x0: float, residuals: ResidualDistribution,
                        delta: float) -> IntervalResult:
    _check_delta(delta)
    lo = residuals.quantile(delta / 2.0)
    hi = residuals.quantile(1.0 - delta / 2.0)
    return IntervalResult(mean_at_x0 + lo, mean_at_x0 + hi, Method.PI, delta)
