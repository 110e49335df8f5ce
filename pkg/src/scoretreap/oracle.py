"""Brute-force references used to pin down expected values in tests.

Everything in this module is written independently of the production
structures: the treap reference rebuilds trees by repeated argmax, the
optimal-tree reference is an interval DP, and the sequence reference rescans
windows literally.  Keep it that way -- the tests rely on the redundancy.
"""

from __future__ import annotations

from typing import Mapping, Sequence

from .errors import ConfigError
from .treap import Priority

__all__ = [
    "naive_depths",
    "optimal_static_bst_cost",
    "analytic_expected_depth",
    "ExhaustiveStats",
    "exhaustive_stats",
]


def naive_depths(priorities: Mapping[int, "Priority"]) -> dict[int, int]:
    """Depths of the unique treap, built by recursive argmax over intervals."""
    if not priorities:
        return {}
    keys = sorted(priorities)

    def rank(k: int) -> tuple[int, float, int]:
        p = priorities[k]
        # larger tuple = higher priority; smaller key wins ties
        return (-p.tier, p.offset, -k)

    out: dict[int, int] = {}

    def place(ks: list[int], depth: int) -> None:
        if not ks:
            return
        r = max(ks, key=rank)
        out[r] = depth
        i = ks.index(r)
        place(ks[:i], depth + 1)
        place(ks[i + 1 :], depth + 1)

    place(keys, 1)
    return out


def optimal_static_bst_cost(frequencies: Sequence[int]) -> int:
    """Minimum total access cost of any static BST (root counts as depth 1).

    Quadratic interval DP with the classic root-monotonicity pruning; sized
    for n up to 2000.
    """
    n = len(frequencies)
    if n == 0:
        return 0
    if n > 2000:
        raise ConfigError(f"DP reference is limited to n <= 2000, got {n}")
    f = [int(x) for x in frequencies]
    for x in f:
        if x < 0:
            raise ConfigError("frequencies must be non-negative")
    W = [0] * (n + 1)
    for i in range(n):
        W[i + 1] = W[i] + f[i]
    # cost[i][j] / root[i][j] for the key interval i..j (1-based); the extra
    # row keeps cost[j+1][j] == 0 reachable without branching
    cost = [[0] * (n + 1) for _ in range(n + 2)]
    root = [[0] * (n + 1) for _ in range(n + 2)]
    for i in range(1, n + 1):
        cost[i][i] = f[i - 1]
        root[i][i] = i
    for length in range(2, n + 1):
        for i in range(1, n - length + 2):
            j = i + length - 1
            lo = root[i][j - 1]
            hi = root[i + 1][j]
            ci = cost[i]
            best = None
            best_r = lo
            for r in range(lo, hi + 1):
                c = ci[r - 1] + cost[r + 1][j]
                if best is None or c < best:
                    best = c
                    best_r = r
            cost[i][j] = best + (W[j] - W[i - 1])
            root[i][j] = best_r
    return cost[1][n]


def analytic_expected_depth(x: int, n: int) -> float:
    """Closed-form expected depth of key x in a uniformly random treap."""
    if not 1 <= x <= n:
        raise ValueError(f"key {x} outside universe 1..{n}")
    return sum(1.0 / (abs(x - y) + 1) for y in range(1, n + 1))


class ExhaustiveStats:
    """Sequence statistics computed by literal window rescans.

    Access times are 1-based.  ``n`` sentinels mark missing previous or next
    occurrences, mirroring the production conventions.
    """

    def __init__(self, items: Sequence[int], n: int):
        self.items = list(items)
        self.n = n
        self.m = len(self.items)

    def _at(self, i: int) -> int:
        return self.items[i - 1]

    def prev(self, i: int, key: int) -> int:
        """Latest access time of ``key`` at or before i, or 0."""
        for j in range(i, 0, -1):
            if self._at(j) == key:
                return j
        return 0

    def prev_strict(self, i: int, key: int) -> int:
        """Latest access time of ``key`` strictly before i, or 0."""
        return self.prev(i - 1, key) if i > 1 else 0

    def next(self, i: int, key: int) -> int:
        """Earliest access time of ``key`` strictly after i, or 0."""
        for j in range(i + 1, self.m + 1):
            if self._at(j) == key:
                return j
        return 0

    def work_past(self, i: int, key: int) -> int:
        """Distinct items strictly between key's previous access and time i."""
        j = self.prev_strict(i, key)
        if not j:
            return self.n
        return len({self._at(t) for t in range(j + 1, i)})

    def work_next(self, i: int, key: int) -> int:
        """Distinct items in the window from i+1 through key's next access."""
        nx = self.next(i, key)
        if not nx:
            return self.n
        return len({self._at(t) for t in range(i + 1, nx + 1)})

    def interval(self, i: int, key: int) -> int:
        """Distinct items strictly after prev(i, key) through next(i, key)."""
        nx = self.next(i, key)
        pv = self.prev(i, key)
        if not nx or not pv:
            return self.n
        return len({self._at(t) for t in range(pv + 1, nx + 1)})

    def future(self, i: int, key: int) -> int:
        """work_past evaluated at key's next access, or the n sentinel."""
        nx = self.next(i, key)
        if not nx:
            return self.n
        return self.work_past(nx, key)


def exhaustive_stats(items: Sequence[int], n: int) -> ExhaustiveStats:
    return ExhaustiveStats(items, n)
