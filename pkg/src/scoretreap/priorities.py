"""Priority assignment rules mapping per-item scores to treap priorities.

The doubly-logarithmic rules bucket an item of score ``w`` into tier
``floor(log_outer(log_inner(1/w)))`` clamped at 0, then add a fresh uniform
offset in (0, 1).  Tier arithmetic uses integer power walks so scores that
are exact powers of the inner base land in the mathematically exact tier
instead of flickering across a floating-point floor boundary.
"""

from __future__ import annotations

import math
import random
from typing import Iterable, Mapping, Sequence

from .errors import ConfigError
from .treap import Priority

__all__ = [
    "RandomStream",
    "WeightVector",
    "tier_value",
    "composite_priority",
    "btree_composite_priority",
    "single_log_priority",
    "raw_score_priority",
    "static_opt_weights",
]

_MASK64 = (1 << 64) - 1


def _mix64(z: int) -> int:
    # splitmix64 finalizer; used only to derive child seeds deterministically
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class RandomStream:
    """Seeded stream of uniform offsets in the open interval (0, 1).

    Draw ``k`` of a stream is a deterministic function of the seed, and the
    ``counter`` attribute records how many draws were taken, so two streams
    with equal seeds produce identical offsets at identical counters.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self.counter = 0
        self._rng = random.Random(self.seed)

    def next_offset(self) -> float:
        self.counter += 1
        u = self._rng.random()
        while u <= 0.0:  # random() yields [0, 1); keep the interval open
            u = self._rng.random()
        return u

    def spawn(self, tag: int) -> "RandomStream":
        """Independent child stream, deterministic in (seed, tag)."""
        return RandomStream(_mix64(self.seed ^ _mix64(tag)))


# ----------------------------------------------------------------------
# tier arithmetic


def _exact_inverse_power(w: float, base: int) -> int | None:
    """If ``1/w`` equals ``base**k`` exactly for an integer k >= 0, return k."""
    if base == 2:
        m, e = math.frexp(w)
        if m == 0.5 and e <= 1:
            return 1 - e
        return None
    inv = 1.0 / w
    if math.isinf(inv) or inv != int(inv):
        return None
    target = int(inv)
    k = 0
    p = 1
    while p < target:
        p *= base
        k += 1
    return k if p == target else None


def _floor_log(value: float, base: int) -> int:
    """floor(log_base(value)) for value >= 1, exact given the float value."""
    if base == 2 and isinstance(value, float):
        m, e = math.frexp(value)
        return e - 1  # m in [0.5, 1)
    k = 0
    p = base
    while p <= value:
        k += 1
        p *= base
    return k


def tier_value(w: float, inner_base: int, outer_base: int) -> int:
    """``max(0, floor(log_outer(log_inner(1/w))))`` for a positive score."""
    if not w > 0.0 or math.isinf(w) or math.isnan(w):
        raise ValueError(f"score must be a positive finite number, got {w!r}")
    if w >= 1.0:
        return 0
    k = _exact_inverse_power(w, inner_base)
    if k is not None:
        inner: float | int = k
    elif inner_base == 2:
        inner = -math.log2(w)
    else:
        inner = -math.log(w) / math.log(inner_base)
    if inner < 1:
        return 0
    return _floor_log(inner, outer_base)


def single_log_tier(w: float) -> int:
    """``max(0, floor(log2(1/w)))`` -- the single-log bucketing rule."""
    if not w > 0.0 or math.isinf(w) or math.isnan(w):
        raise ValueError(f"score must be a positive finite number, got {w!r}")
    if w >= 1.0:
        return 0
    k = _exact_inverse_power(w, 2)
    if k is not None:
        return k
    return max(0, math.floor(-math.log2(w)))


# ----------------------------------------------------------------------
# priority rules


def composite_priority(w: float, rng: RandomStream) -> Priority:
    """Doubly-logarithmic rule for binary trees: tier floor(lg lg (1/w))."""
    return Priority(tier_value(w, 2, 2), rng.next_offset())


def btree_composite_priority(w: float, B: int, rng: RandomStream) -> Priority:
    """Doubly-logarithmic rule for block trees: tier floor(log4 log_B (1/w))."""
    if B < 4:
        raise ConfigError(f"block fanout must be >= 4, got {B}")
    return Priority(tier_value(w, B, 4), rng.next_offset())


def single_log_priority(w: float, rng: RandomStream) -> Priority:
    """Singly-logarithmic bucketing; kept as a deliberately weak baseline."""
    return Priority(single_log_tier(w), rng.next_offset())


def raw_score_priority(w: float) -> Priority:
    """Deterministic priority whose order equals the score order.

    Scores are squashed through ``w / (1 + w)`` so they fit the (0, 1) offset
    slot; the map is strictly increasing, so relative order is preserved and
    remaining ties resolve by key inside the tree.
    """
    if not w > 0.0 or math.isinf(w) or math.isnan(w):
        raise ValueError(f"score must be a positive finite number, got {w!r}")
    return Priority(0, w / (1.0 + w))


# ----------------------------------------------------------------------
# weights


class WeightVector:
    """Positive per-item scores for the key universe ``1..n``."""

    def __init__(self, values: Sequence[float]):
        vals = [float(v) for v in values]
        if not vals:
            raise ValueError("weight vector must be non-empty")
        for i, v in enumerate(vals):
            if not v > 0.0 or math.isinf(v) or math.isnan(v):
                raise ValueError(f"weight for key {i + 1} must be positive and finite, got {v!r}")
        self._w = vals
        self.n = len(vals)

    def __getitem__(self, key: int) -> float:
        if not 1 <= key <= self.n:
            raise KeyError(key)
        return self._w[key - 1]

    def __len__(self) -> int:
        return self.n

    def __iter__(self) -> Iterable[float]:
        return iter(self._w)

    def values(self) -> list[float]:
        return list(self._w)

    def l1(self) -> float:
        return sum(self._w)

    def normalized(self) -> "WeightVector":
        s = self.l1()
        return WeightVector([v / s for v in self._w])

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, float], n: int) -> "WeightVector":
        vals = [0.0] * n
        for k, v in mapping.items():
            if not 1 <= k <= n:
                raise KeyError(k)
            vals[k - 1] = v
        return cls(vals)


def static_opt_weights(frequencies: Sequence[int], m: int) -> WeightVector:
    """Empirical-frequency scores ``f_x / m`` with a ``1/(n*m)`` zero floor."""
    if m <= 0:
        raise ConfigError(f"total access count must be positive, got {m}")
    n = len(frequencies)
    if n == 0:
        raise ConfigError("frequency table must be non-empty")
    total = 0
    for f in frequencies:
        if f < 0:
            raise ConfigError(f"negative frequency {f}")
        total += f
    if total != m:
        raise ConfigError(f"frequencies sum to {total}, expected m={m}")
    floor = 1.0 / (n * m)
    return WeightVector([f / m if f > 0 else floor for f in frequencies])
