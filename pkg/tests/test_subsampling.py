import pytest
from hypothesis import given, strategies as st

from ssdnn.errors import ConfigError
from ssdnn.subsampling import (BlockPlan, block_count, block_indices, guarded_floor,
                               iterated_plan, plan_from_beta)


def test_large_sample_plan():
    plan = plan_from_beta(200000, 0.7, 1)
    assert (plan.b, plan.h, plan.q) == (5137, 5137, 38)
    inner = iterated_plan(plan, 0.7)
    assert inner.q == 12
    assert inner.b == 395


@pytest.mark.parametrize("n,b,q,b2,q2", [(20000, 1024, 19, 128, 8), (10000, 630, 15, 91, 6),
                                         (4000, 332, 12, 58, 5)])
def test_desk_scale_plans(n, b, q, b2, q2):
    plan = plan_from_beta(n, 0.7)
    assert (plan.b, plan.q) == (b, q)
    inner = iterated_plan(plan, 0.7)
    assert (inner.b, inner.q) == (b2, q2)


def test_guarded_floor_absorbs_pow_rounding():
    assert 1024 ** 0.7 < 128
    assert guarded_floor(1024 ** 0.7) == 128
    assert guarded_floor(2.5) == 2
    assert guarded_floor(-0.5) == -1


def test_block_indices_one_based():
    plan = BlockPlan.make(10, 3)
    assert plan.q == 3
    assert [block_indices(plan, j) for j in (1, 2, 3)] == [(1, 3), (4, 6), (7, 9)]
    assert plan.covered == 9
    with pytest.raises(IndexError):
        block_indices(plan, 4)
    with pytest.raises(IndexError):
        block_indices(plan, 0)


def test_overlapping_plan():
    plan = plan_from_beta(100, 0.5, a=0.5)
    assert (plan.b, plan.h, plan.q) == (10, 5, 19)


def test_b_equals_n_single_block():
    assert BlockPlan.make(7, 7).q == 1


@pytest.mark.parametrize("args", [(1, 0.5), (100, 0.0), (100, 1.0), (100, 0.5, 0.0)])
def test_plan_from_beta_rejects(args):
    with pytest.raises(ConfigError):
        plan_from_beta(*args)


def test_inconsistent_q_rejected():
    with pytest.raises(ConfigError):
        BlockPlan(10, 3, 3, 4)


@given(st.integers(2, 10**6), st.floats(0.3, 0.9), st.floats(0.2, 2.0))
def test_blocks_stay_inside_sample(n, beta, a):
    plan = plan_from_beta(n, beta, a)
    first, last = block_indices(plan, plan.q)
    assert last <= n
    assert last + plan.h > n  # no further block fits
    assert plan.q == block_count(n, plan.b, plan.h)


@given(st.integers(4, 10**6), st.floats(0.4, 0.9))
def test_iterated_plan_respects_cap(n, beta):
    plan = plan_from_beta(n, beta)
    if plan.b < 2:
        return
    inner = iterated_plan(plan, beta)
    assert inner.q <= max(1, guarded_floor(plan.b ** (1 - beta)))
    assert inner.h >= inner.b  # second-stage blocks never overlap
    assert inner.covered <= plan.b
