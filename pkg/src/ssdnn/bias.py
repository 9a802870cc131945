"""Scaling-down estimate of the bias order of the subagging estimator.

The bias of a network trained on ``b`` points is modelled as
``c_b * b**(-lam/2)``.  Networks trained on two smaller sizes ``b1 > b2`` give
raw bias averages ``B1, B2`` relative to the full subagging mean; the power
law through those two points is then scaled down from ``b1`` to ``b``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError, NoPowerLawFit
from .nn_core import NetworkSpec, TrainConfig, auto_spec
from .subagging import fit_subagging, predict_members
from .subsampling import BlockPlan

# (X, y, plan, spec, cfg, x) -> member predictions at x, one per block of plan
MemberPredictor = Callable[..., np.ndarray]


@dataclass(frozen=True)
class BiasEstimate:
    lambda_hat: float
    c_b_hat: float
    b1_hat: float
    b2_hat: float
    bias_at_b: float

    def to_dict(self):
        return asdict(self)


def bias_average(predictions, reference_mean: float) -> float:
    """Mean deviation of small-sample predictions from the reference mean."""
    preds = np.asarray(predictions, dtype=np.float64).reshape(-1)
    if preds.size < 2:
        raise ConfigError(f"need at least 2 small-sample models, got {preds.size}")
    return float(np.mean(preds - reference_mean))


def solve_power_law(b1_size: float, B1: float, b2_size: float, B2: float) -> tuple[float, float]:
    """Solve ``B_i = c * b_i**(-lam/2)`` for ``(lam, c)``.

    Raises :class:`NoPowerLawFit` when the two averages are zero or differ
    in sign, since no such power law passes through them.
    """
    if b1_size == b2_size:
        raise ConfigError("b1_size and b2_size must differ")
    if B1 == 0 or B2 == 0 or (B1 > 0) != (B2 > 0):
        raise NoPowerLawFit(B1, B2)
    lam = 2.0 * math.log(B1 / B2) / math.log(b2_size / b1_size)
    c = B1 * b1_size ** (lam / 2.0)
    return lam, c


def scale_down(b: float, b1_size: float, B1: float, lam: float) -> float:
    return B1 * (b / b1_size) ** (-lam / 2.0)


def estimate_from_averages(b: int, b1_size: int, B1: float, b2_size: int, B2: float) -> BiasEstimate:
    lam, c = solve_power_law(b1_size, B1, b2_size, B2)
    return BiasEstimate(lam, c, B1, B2, scale_down(b, b1_size, B1, lam))


def train_member_predictions(X, y, plan, spec, cfg, x, jobs=1):
    """Default predictor: train a subagging ensemble on ``plan`` and read
    every member at ``x``."""
    return predict_members(fit_subagging(X, y, plan, spec, cfg, jobs=jobs), x)


def raw_bias_average(X, y, plan_i: BlockPlan, spec_i: NetworkSpec, cfg: TrainConfig,
                     reference_mean: float, x, predictor: MemberPredictor | None = None) -> float:
    """Train the ``q_i`` small-sample networks of ``plan_i`` and average their
    deviation from ``reference_mean`` at ``x``."""
    if plan_i.q < 2:
        raise ConfigError(f"plan with b={plan_i.b} yields q={plan_i.q} < 2 blocks")
    predictor = predictor or train_member_predictions
    return bias_average(predictor(X, y, plan_i, spec_i, cfg, x), reference_mean)


def estimate_bias(X, y, plan: BlockPlan, spec: NetworkSpec, cfg: TrainConfig, x,
                  b1_size: int | None = None, b2_size: int | None = None,
                  predictor: MemberPredictor | None = None,
                  reference_mean: float | None = None) -> BiasEstimate:
    """Scaling-down bias estimate of the subagging mean at ``x``.

    Defaults: ``b1 = b // 2`` and ``b2 = b // 4``.  Small-sample networks
    keep the depth of ``spec``, with width sized so the parameter count is
    the largest not exceeding their block length.  ``reference_mean`` skips the
    step that refits the full ensemble when the caller already has it.
    """
    b = plan.b
    b1_size = b // 2 if b1_size is None else int(b1_size)
    b2_size = b // 4 if b2_size is None else int(b2_size)
    if not 1 <= b2_size < b1_size <= b / 2:
        raise ConfigError(f"need 1 <= b2 < b1 <= b/2; got b={b}, b1={b1_size}, b2={b2_size}")
    predictor = predictor or train_member_predictions
    n = np.asarray(X).shape[0]
    if reference_mean is None:
        reference_mean = float(np.mean(predictor(X, y, plan, spec, cfg, x)))
    averages = []
    for size in (b1_size, b2_size):
        plan_i = BlockPlan.make(n, size)
        spec_i = auto_spec(spec.input_dim, spec.depth, size)
        averages.append(raw_bias_average(X, y, plan_i, spec_i, cfg, reference_mean, x, predictor))
    return estimate_from_averages(b, b1_size, averages[0], b2_size, averages[1])


def power_law_stub(c_b: float, lam: float, reference: float = 0.0, full_b: int | None = None):
    """Predictor whose small-sample members sit exactly ``c_b * b_i**(-lam/2)``
    above ``reference``; members on a plan with ``b == full_b`` return
    ``reference`` itself.  Used to check the estimator end to end."""

    def predictor(X, y, plan, spec, cfg, x):
        if full_b is not None and plan.b == full_b:
            return np.full(plan.q, reference)
        return np.full(plan.q, reference + c_b * plan.b ** (-lam / 2.0))

    return predictor
