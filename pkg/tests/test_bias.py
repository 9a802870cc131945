import math

import numpy as np
import pytest

from ssdnn.bias import (bias_average, estimate_bias, estimate_from_averages, power_law_stub,
                        raw_bias_average, scale_down, solve_power_law)
from ssdnn.errors import ConfigError, NoPowerLawFit
from ssdnn.nn_core import NetworkSpec, TrainConfig
from ssdnn.subsampling import BlockPlan, plan_from_beta


@pytest.mark.parametrize("c", [0.5, 2.0])
@pytest.mark.parametrize("lam", [0.5, 1.0, 1.5])
def test_solve_power_law_inverts(c, lam):
    b1, b2 = 315, 157
    B1, B2 = c * b1 ** (-lam / 2), c * b2 ** (-lam / 2)
    lam_hat, c_hat = solve_power_law(b1, B1, b2, B2)
    assert abs(lam_hat - lam) < 1e-10
    assert abs(c_hat - c) < 1e-10


def test_negative_bias_fits():
    lam, c = solve_power_law(100, -0.1, 25, -0.2)
    assert lam == pytest.approx(1.0)
    assert c == pytest.approx(-1.0)


@pytest.mark.parametrize("B1,B2", [(0.1, -0.2), (0.0, 0.3), (-0.1, 0.0)])
def test_no_power_law(B1, B2):
    with pytest.raises(NoPowerLawFit) as exc:
        solve_power_law(100, B1, 50, B2)
    assert repr(B1) in str(exc.value) or str(B1) in str(exc.value)
    assert str(B2) in str(exc.value)


def test_equal_sizes_rejected():
    with pytest.raises(ConfigError):
        solve_power_law(10, 0.1, 10, 0.2)


def test_scale_down_hand_value():
    # halving the size with lam=2 doubles the bias
    assert scale_down(50, 100, 0.3, 2.0) == pytest.approx(0.6)
    est = estimate_from_averages(400, 200, 0.1, 100, 0.1 * math.sqrt(2))
    assert est.lambda_hat == pytest.approx(1.0)
    assert est.bias_at_b == pytest.approx(0.1 / math.sqrt(2))


def test_bias_average_needs_two():
    assert bias_average([1.0, 3.0], 1.0) == 1.0
    with pytest.raises(ConfigError):
        bias_average([1.0], 0.0)


@pytest.mark.parametrize("c", [0.5, 2.0])
@pytest.mark.parametrize("lam", [0.5, 1.0, 1.5])
def test_estimate_bias_on_stub_members(c, lam):
    plan = plan_from_beta(10000, 0.7)
    X, y = np.zeros((10000, 3)), np.zeros(10000)
    stub = power_law_stub(c, lam, reference=0.25, full_b=plan.b)
    est = estimate_bias(X, y, plan, NetworkSpec(3, (5,)), TrainConfig(), np.zeros(3),
                        predictor=stub)
    assert est.b1_hat == pytest.approx(c * (plan.b // 2) ** (-lam / 2), abs=1e-12)
    assert abs(est.bias_at_b - c * plan.b ** (-lam / 2)) < 1e-10
    assert abs(est.lambda_hat - lam) < 1e-10
    assert set(est.to_dict()) == {"lambda_hat", "c_b_hat", "b1_hat", "b2_hat", "bias_at_b"}


def test_estimate_bias_size_checks():
    plan = plan_from_beta(1000, 0.7)
    X, y = np.zeros((1000, 1)), np.zeros(1000)
    stub = power_law_stub(1.0, 1.0, full_b=plan.b)
    for b1, b2 in [(plan.b, 10), (20, 20), (20, 0)]:
        with pytest.raises(ConfigError):
            estimate_bias(X, y, plan, NetworkSpec(1, (2,)), TrainConfig(), np.zeros(1), b1, b2,
                          predictor=stub)


def test_raw_bias_average_trains_real_networks():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(120, 1))
    y = X[:, 0]
    plan = BlockPlan.make(120, 30)
    B = raw_bias_average(X, y, plan, NetworkSpec(1, (3,)), TrainConfig(epochs=3), 0.0,
                         np.zeros(1))
    assert np.isfinite(B)
    with pytest.raises(ConfigError):
        raw_bias_average(X, y, BlockPlan.make(120, 100), NetworkSpec(1, (3,)), TrainConfig(),
                         0.0, np.zeros(1))
