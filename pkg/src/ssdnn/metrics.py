"""Error and coverage criteria."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import DataError
from .intervals import Method


@dataclass(frozen=True)
class ErrorReport:
    mse1: float
    mse2: float
    mspe1: float
    mspe2: float
    sigma2_hat: float
    sigma2_hat_test: float

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not (np.isfinite(v) and v >= 0):
                raise ValueError(f"{k} must be finite and non-negative, got {v}")

    @property
    def mse1_gap(self) -> float:
        """Distance of MSE-1 from the noise variance; 0 is optimal."""
        return abs(self.mse1 - self.sigma2_hat)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class CoverageReport:
    ecr: float
    el: float
    method: str
    delta: float

    def __post_init__(self):
        if not (0.0 <= self.ecr <= 1.0 or np.isnan(self.ecr)):
            raise ValueError(f"ecr {self.ecr} outside [0, 1]")

    def to_dict(self):
        return asdict(self)


def _vectors(*arrays):
    out = [np.asarray(a, dtype=np.float64).reshape(-1) for a in arrays]
    if len({a.shape[0] for a in out}) != 1:
        raise DataError(f"length mismatch: {[a.shape[0] for a in out]}")
    if out[0].shape[0] == 0:
        raise DataError("empty input")
    return out


def mse_pair(preds, ys, true_fs) -> tuple[float, float]:
    """``(mean (pred-y)^2, mean (pred-f)^2)``."""
    p, y, f = _vectors(preds, ys, true_fs)
    return float(np.mean((p - y) ** 2)), float(np.mean((p - f) ** 2))


def sample_variance(eps) -> float:
    """Mean of squared noise draws around their mean (divisor n)."""
    (e,) = _vectors(eps)
    return float(np.var(e))


def error_report(train_preds, y, f, test_preds, y_test, f_test, eps, eps_test) -> ErrorReport:
    mse1, mse2 = mse_pair(train_preds, y, f)
    mspe1, mspe2 = mse_pair(test_preds, y_test, f_test)
    return ErrorReport(mse1, mse2, mspe1, mspe2, sample_variance(eps), sample_variance(eps_test))


def coverage(intervals, targets, method: str | None = None, delta: float | None = None) -> CoverageReport:
    """Fraction of targets inside their closed interval, and mean length."""
    intervals = list(intervals)
    targets = list(targets)
    if len(intervals) != len(targets):
        raise DataError(f"{len(intervals)} intervals but {len(targets)} targets")
    if not intervals:
        raise DataError("empty input")
    hits = sum(iv.lower <= t <= iv.upper for iv, t in zip(intervals, targets))
    el = float(np.mean([iv.upper - iv.lower for iv in intervals]))
    first = intervals[0]
    if method is None:
        method = Method(first.method).value
    if delta is None:
        delta = first.nominal_delta
    return CoverageReport(hits / len(intervals), el, method, delta)


def conditional_pi_coverage(pi, model, x_t, mc_draws: int = 3000, seed: int = 0) -> float:
    """Share of ``mc_draws`` fresh responses at ``x_t`` that land in ``pi``."""
    from .simgen import true_f

    if mc_draws < 1:
        raise ValueError(f"need mc_draws >= 1, got {mc_draws}")
    rng = np.random.default_rng(seed)
    ys = true_f(model, x_t) + model.noise_sigma * rng.standard_normal(mc_draws)
    return float(np.mean((ys >= pi.lower) & (ys <= pi.upper)))
