"""Scalable subsampling block plans.

Block ``j`` (1-based) covers observations ``(j-1)*h + 1 .. (j-1)*h + b``;
there are ``q = floor((n - b) / h) + 1`` of them.  Points past the last
block are left out of every block but still count in ``n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError

# pow() can land a hair below an exact integer (1024**0.7 -> 127.99999999999996)
_FLOOR_RTOL = 1e-9


def guarded_floor(x: float) -> int:
    return math.floor(x + _FLOOR_RTOL * max(1.0, abs(x)))


def block_count(n: int, b: int, h: int) -> int:
    return (n - b) // h + 1


@dataclass(frozen=True)
class BlockPlan:
    n: int
    b: int
    h: int
    q: int

    def __post_init__(self):
        if not 1 <= self.b <= self.n:
            raise ConfigError(f"block length b={self.b} must lie in [1, n={self.n}]")
        if self.h < 1:
            raise ConfigError(f"stride h={self.h} must be >= 1")
        if self.q != block_count(self.n, self.b, self.h):
            raise ConfigError(f"q={self.q} inconsistent with n={self.n}, b={self.b}, h={self.h}")

    @classmethod
    def make(cls, n: int, b: int, h: int | None = None) -> "BlockPlan":
        """Plan with explicit block length and stride (stride defaults to ``b``)."""
        h = b if h is None else h
        if not 1 <= b <= n or h < 1:
            raise ConfigError(f"invalid block plan n={n}, b={b}, h={h}")
        return cls(n, b, h, block_count(n, b, h))

    @property
    def covered(self) -> int:
        """Number of leading observations that fall in at least one block."""
        return (self.q - 1) * self.h + self.b

    def block_slice(self, j: int) -> slice:
        """0-based slice of block ``j`` (``j`` is 1-based)."""
        first, last = block_indices(self, j)
        return slice(first - 1, last)

    def slices(self) -> list[slice]:
        return [self.block_slice(j) for j in range(1, self.q + 1)]


def plan_from_beta(n: int, beta: float, a: float = 1.0) -> BlockPlan:
    """``b = floor(n**beta)``, ``h = max(1, floor(a*b))``.

    ``a = 1`` gives adjacent, non-overlapping blocks.
    """
    if n < 2:
        raise ConfigError(f"need n >= 2, got {n}")
    if not 0.0 < beta < 1.0:
        raise ConfigError(f"beta must lie in (0, 1), got {beta}")
    if a <= 0:
        raise ConfigError(f"overlap factor a must be positive, got {a}")
    b = guarded_floor(n ** beta)
    if b < 1:
        raise ConfigError(f"n**beta = {n ** beta:.3g} gives an empty block")
    h = max(1, guarded_floor(a * b))
    return BlockPlan(n, b, h, block_count(n, b, h))


def block_indices(plan: BlockPlan, j: int) -> tuple[int, int]:
    """1-based inclusive index range ``(first, last)`` of block ``j``."""
    if not 1 <= j <= plan.q:
        raise IndexError(f"block {j} outside 1..{plan.q}")
    first = (j - 1) * plan.h + 1
    return first, first + plan.b - 1


def iterated_plan(plan: BlockPlan, beta: float) -> BlockPlan:
    """Second-stage plan inside one first-stage block of length ``plan.b``.

    ``b' = floor(b**beta)`` with disjoint blocks.  The number of second-stage
    blocks is capped at ``floor(b**(1 - beta))`` (about ``n**(beta(1-beta))``
    when ``b = n**beta``); when more ``b'``-blocks would fit, the stride is
    widened to the smallest value that respects the cap.
    """
    if plan.b < 2:
        raise ConfigError("iterated subsampling needs a first-stage block of length >= 2")
    if not 0.0 < beta < 1.0:
        raise ConfigError(f"beta must lie in (0, 1), got {beta}")
    n2 = plan.b
    b2 = guarded_floor(n2 ** beta)
    if b2 < 1:
        raise ConfigError(f"b**beta = {n2 ** beta:.3g} gives an empty second-stage block")
    target = max(1, guarded_floor(n2 ** (1.0 - beta)))
    h2 = b2
    if block_count(n2, b2, h2) > target:
        h2 = (n2 - b2) // target + 1
    return BlockPlan(n2, b2, h2, block_count(n2, b2, h2))
