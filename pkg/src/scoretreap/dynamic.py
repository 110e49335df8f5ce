"""Time-varying scores over an access sequence.

``compute_stats`` extracts, in two BIT-backed sweeps, the per-step
backward working-set size, the forward (next-access) counterpart, and the
between-occurrences interval size.  On top of those:

* ``IntervalSetPriorityState`` -- stored weight 1/(1+interval)^2 per item,
  at most one change per step, running norm certificate.
* ``CrudeOracle`` -- exact recency ranks, scores rounded to the next power
  of two, lazily refreshed only when a rank crosses a power-of-two boundary.
* ``run_dynamic`` -- drives a scheme x structure pair over a trace and
  tallies access/update/rebuild costs plus the weight trajectory sums that
  the cost-decomposition check consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .em import DetScoreForest, EMConfig, RankForest, TierForestBTreap
from .errors import ConfigError
from .priorities import RandomStream, composite_priority
from .sequences import AccessSequence
from .treap import Treap

__all__ = [
    "SequenceStats",
    "compute_stats",
    "IntervalSetPriorityState",
    "isp_step",
    "CrudeOracle",
    "crude_step",
    "CostBreakdown",
    "run_dynamic",
    "cost_decomposition_check",
    "SCHEMES",
    "STRUCTURES",
]

SCHEMES = ("interval-set", "future-ws-exact", "future-ws-noisy", "past-ws-crude", "static")
STRUCTURES = ("treap", "tier-forest", "det-forest", "rank-forest")

NORM_CEILING = math.pi * math.pi / 6.0
NORM_STEADY = 0.645


class _Bit:
    def __init__(self, size: int):
        self.size = size
        self.a = [0] * (size + 1)

    def add(self, i: int, delta: int) -> None:
        while i <= self.size:
            self.a[i] += delta
            i += i & (-i)

    def prefix(self, i: int) -> int:
        s = 0
        while i > 0:
            s += self.a[i]
            i -= i & (-i)
        return s

    def range(self, lo: int, hi: int) -> int:
        if lo > hi:
            return 0
        return self.prefix(hi) - self.prefix(lo - 1)

    def kth(self, k: int) -> int:
        """Smallest index with prefix >= k (k >= 1)."""
        pos = 0
        rem = k
        step = 1 << (self.size.bit_length())
        while step:
            nxt = pos + step
            if nxt <= self.size and self.a[nxt] < rem:
                pos = nxt
                rem -= self.a[nxt]
            step >>= 1
        return pos + 1


@dataclass
class SequenceStats:
    """Per-step statistics of one access sequence (arrays are 1-based).

    ``work[i]`` is the backward working-set size of the served item
    (distinct items since its previous access; n on a first access).
    ``future[i]`` counts distinct items strictly between i and the served
    item's next access (n when it never reappears); by construction
    ``future`` at one occurrence equals ``work`` at the next.
    ``interval[i]`` is the served item's between-occurrences interval size,
    window closed at the next access (n when it never reappears).
    """

    n: int
    m: int
    items: list[int]
    prev: list[int]
    next: list[int]
    work: list[int]
    future: list[int]
    interval: list[int]

    def isp_after(self, i: int) -> float:
        """Stored interval-set weight of x(i) right after step i."""
        return 1.0 / (1.0 + self.interval[i]) ** 2


def compute_stats(seq: AccessSequence) -> SequenceStats:
    n, m, items = seq.n, seq.m, seq.items
    prev = [0] * (m + 1)
    nxt = [m + 1] * (m + 1)
    last: dict[int, int] = {}
    for i in range(1, m + 1):
        x = items[i - 1]
        if x in last:
            prev[i] = last[x]
            nxt[last[x]] = i
        last[x] = i
    # distinct-count queries (lo, hi, slot) answered in one sweep over hi
    work = [0] * (m + 1)
    future = [0] * (m + 1)
    by_hi: list[list[tuple[int, int, list[int]]]] = [[] for _ in range(m + 1)]
    for i in range(1, m + 1):
        if prev[i]:
            by_hi[i - 1].append((prev[i] + 1, i, work))
        else:
            work[i] = n
        if nxt[i] <= m:
            by_hi[nxt[i] - 1].append((i + 1, i, future))
        else:
            future[i] = n
    bit = _Bit(m)
    last.clear()
    for r in range(1, m + 1):
        x = items[r - 1]
        if x in last:
            bit.add(last[x], -1)
        bit.add(r, 1)
        last[x] = r
        for lo, slot, arr in by_hi[r]:
            arr[slot] = bit.range(lo, r)
    for lo, slot, arr in by_hi[0]:
        arr[slot] = 0
    interval = [0] * (m + 1)
    for i in range(1, m + 1):
        interval[i] = future[i] + 1 if nxt[i] <= m else n
    return SequenceStats(n=n, m=m, items=list(items), prev=prev, next=nxt,
                         work=work, future=future, interval=interval)


class IntervalSetPriorityState:
    """Stored weights 1/(1+interval)^2 with the running norm certificate."""

    def __init__(self, n: int):
        self.n = n
        init = 1.0 / (1.0 + n) ** 2
        self.isp = [init] * (n + 1)
        self.norm = n * init
        self._seen: set[int] = set()

    @property
    def all_seen(self) -> bool:
        return len(self._seen) == self.n

    def step(self, i: int, stats: SequenceStats) -> set[int]:
        """Advance past step i; only the served item's weight may change."""
        x = stats.items[i - 1]
        self._seen.add(x)
        new = stats.isp_after(i)
        old = self.isp[x]
        if new == old:
            self._check()
            return set()
        self.isp[x] = new
        self.norm += new - old
        self._check()
        return {x}

    def _check(self) -> None:
        if self.norm > NORM_CEILING + 1e-9:
            raise AssertionError(f"norm {self.norm} exceeds pi^2/6")
        if self.all_seen and self.norm > NORM_STEADY + 1e-9:
            raise AssertionError(f"norm {self.norm} exceeds steady bound {NORM_STEADY}")


def isp_step(state: IntervalSetPriorityState, i: int, stats: SequenceStats) -> set[int]:
    return state.step(i, stats)


def _round_score(work: int) -> int:
    """Next-power-of-two rounding: 2^ceil(log2(work+1)) - 1, output 0 at 0."""
    if work <= 0:
        return 0
    return (1 << work.bit_length()) - 1


class CrudeOracle:
    """Exact recency ranks with lazily rounded scores.

    Ranks are kept with per-item timestamps and an order-statistic BIT, so a
    front-move costs O(log).  The rounded score of an item changes only when
    its exact rank crosses a power of two, hence at most floor(log2 n) + 1
    items (the accessed one plus one per boundary) refresh per step.
    Unseen items carry the sentinel working-set size n.
    """

    def __init__(self, n: int, expected_steps: int = 0):
        self.n = n
        cap = n + max(expected_steps, 4 * n) + 1
        self._cap = cap
        self._bit = _Bit(cap)
        self._stamp = [0] * (n + 1)
        self._key_at: dict[int, int] = {}
        self._clock = 0
        self._seen = 0
        self.s_init = _round_score(n)
        self.score = [self.s_init] * (n + 1)

    def seen(self, key: int) -> bool:
        return self._stamp[key] != 0

    def rank(self, key: int) -> int:
        """1-based recency rank among seen items (1 = most recent)."""
        if not self.seen(key):
            raise KeyError(f"key {key} not yet accessed")
        return self._seen - self._bit.prefix(self._stamp[key]) + 1

    def work_of(self, key: int) -> int:
        """Exact backward working-set size implied by the rank order."""
        return self.rank(key) - 1 if self.seen(key) else self.n

    def _key_at_rank(self, r: int) -> int:
        return self._key_at[self._bit.kth(self._seen - r + 1)]

    def _tick(self) -> int:
        self._clock += 1
        if self._clock > self._cap:
            order = sorted((self._stamp[k], k) for k in range(1, self.n + 1) if self._stamp[k])
            self._bit = _Bit(self._cap)
            self._key_at.clear()
            for pos, (_, k) in enumerate(order, start=1):
                self._stamp[k] = pos
                self._bit.add(pos, 1)
                self._key_at[pos] = k
            self._clock = len(order)
            self._clock += 1
        return self._clock

    def step(self, key: int) -> list[tuple[int, int, int]]:
        """Serve ``key``; returns U_i as (item, new score, exact work) rows.

        The served item always appears first; the rest are the items whose
        rank stepped over a power of two (one per boundary at most).
        """
        if not 1 <= key <= self.n:
            raise KeyError(key)
        # collect boundary crossers against the pre-move ranks
        limit = self.rank(key) - 1 if self.seen(key) else self._seen
        crossers: list[int] = []
        boundary = 1
        while boundary <= limit:
            crossers.append(self._key_at_rank(boundary))
            boundary <<= 1
        if self.seen(key):
            self._bit.add(self._stamp[key], -1)
            del self._key_at[self._stamp[key]]
            self._stamp[key] = 0  # or compaction would resurrect the old slot
        else:
            self._seen += 1
        stamp = self._tick()
        self._stamp[key] = stamp
        self._bit.add(stamp, 1)
        self._key_at[stamp] = key
        out = [(key, 0, 0)]
        self.score[key] = 0
        for item in crossers:
            w = self.work_of(item)
            s = _round_score(w)
            self.score[item] = s
            out.append((item, s, w))
        return out


def crude_step(oracle: CrudeOracle, key: int) -> list[tuple[int, int, int]]:
    return oracle.step(key)


@dataclass
class CostBreakdown:
    """Measured costs of one driver run plus the weight-trajectory sums."""

    scheme: str
    structure: str
    n: int
    m: int
    base: float  # cost unit: 2 for comparison structures, B for block ones
    access_cost: int = 0
    update_cost: int = 0
    rebuild_cost: int = 0
    access_log_nat: float = 0.0  # sum of ln(1/w) over served items, at access time
    shift_l1_nat: float = 0.0  # sum over updates of |ln w_new - ln w_old|
    update_events: int = 0
    steps: list[tuple] = field(default_factory=list)

    @property
    def total_cost(self) -> int:
        return self.access_cost + self.update_cost + self.rebuild_cost


def _scheme_scores(scheme: str, stats: SequenceStats | None,
                   predicted: Sequence[float] | None, m: int, n: int):
    """Per-step stored score after serving, or None for score-free schemes."""
    if scheme == "past-ws-crude" and predicted is not None:
        raise ConfigError("past-ws-crude derives its own scores")
    if scheme in ("static", "past-ws-crude"):
        return None  # score-free here: crude scores come from the oracle
    if stats is None:
        raise ConfigError(f"scheme {scheme} needs sequence statistics")
    if scheme == "interval-set":
        return [stats.interval[i] for i in range(1, m + 1)]
    if scheme == "future-ws-exact":
        return [stats.future[i] for i in range(1, m + 1)]
    if scheme == "future-ws-noisy":
        if predicted is None:
            raise ConfigError("future-ws-noisy needs predicted scores")
        if len(predicted) != m:
            raise ConfigError(f"predicted scores length {len(predicted)} != m {m}")
        return [min(max(float(s), 0.0), float(n)) for s in predicted]
    return None


def run_dynamic(
    seq: AccessSequence,
    scheme: str,
    structure: str,
    cfg: EMConfig | None = None,
    rng: RandomStream | None = None,
    predicted_scores: Sequence[float] | None = None,
    stats: SequenceStats | None = None,
    keep_steps: bool = False,
    score_power: int = 2,
) -> CostBreakdown:
    """Play one trace against one structure under one weight scheme.

    Protocol per step: access the served item at its current stored weight,
    then re-weight the scheme's update set, drawing a fresh priority offset
    for every re-weighted item.  All items start at weight 1/(n+1)^power.

    ``score_power`` selects the weight map 1/(1+score)^power; only the
    default squared form carries the norm certificate.
    """
    if score_power not in (1, 2):
        raise ConfigError(f"score power must be 1 or 2, got {score_power}")
    if scheme not in SCHEMES:
        raise ConfigError(f"unknown scheme {scheme!r}")
    if structure not in STRUCTURES:
        raise ConfigError(f"unknown structure {structure!r}")
    if structure != "treap" and cfg is None:
        raise ConfigError(f"structure {structure} needs an EMConfig")
    rng = rng if rng is not None else RandomStream(0)
    n, m = seq.n, seq.m
    needs_stats = scheme in ("interval-set", "future-ws-exact", "future-ws-noisy") or keep_steps
    if needs_stats and stats is None:
        stats = compute_stats(seq)
    scores = _scheme_scores(scheme, stats, predicted_scores, m, n) if structure != "rank-forest" else None

    w0 = 1.0 / (n + 1) ** score_power
    weights = [w0] * (n + 1)
    bd = CostBreakdown(scheme=scheme, structure=structure, n=n, m=m,
                       base=2.0 if structure == "treap" else float(cfg.B))

    if structure == "treap":
        tiers_offs = [composite_priority(w0, rng) for _ in range(n)]
        tr = Treap.build_arrays([p.tier for p in tiers_offs], [p.offset for p in tiers_offs])

        def do_access(x: int) -> int:
            return tr.access(x)

        def do_update(x: int, w: float) -> tuple[int, int]:
            return tr.update_priority(x, composite_priority(w, rng)) + 1, 0

    elif structure == "tier-forest":
        st = TierForestBTreap([w0] * n, cfg, rng=rng)

        def do_access(x: int) -> int:
            return st.access(x)

        def do_update(x: int, w: float) -> tuple[int, int]:
            uc = st.update_weight(x, w)
            return uc.search_total, uc.rebuild_writes

    elif structure == "det-forest":
        st = DetScoreForest([w0] * n, cfg)

        def do_access(x: int) -> int:
            return st.access(x)

        def do_update(x: int, w: float) -> tuple[int, int]:
            return st.update_weight(x, w), 0

    else:  # rank-forest: self-organizing, scheme ignored
        st = RankForest(n, cfg)

        def do_access(x: int) -> int:
            return st.access(x)

        def do_update(x: int, w: float) -> tuple[int, int]:
            return 0, 0

    oracle = CrudeOracle(n, expected_steps=m) if (
        scheme == "past-ws-crude" and structure != "rank-forest") else None

    # the norm certificate only exists for the squared weight form
    isp_guard = IntervalSetPriorityState(n) if (
        scheme == "interval-set" and score_power == 2) else None

    for i in range(1, m + 1):
        x = seq.items[i - 1]
        cost = do_access(x)
        bd.access_cost += cost
        bd.access_log_nat += -math.log(weights[x])
        updates: list[tuple[int, float]] = []
        if structure != "rank-forest":
            if scores is not None:
                s = scores[i - 1]
                w_new = 1.0 / (1.0 + s) ** score_power
                if isp_guard is not None:
                    isp_guard.step(i, stats)
                if w_new != weights[x]:
                    updates.append((x, w_new))
            elif oracle is not None:
                for item, s, _w in oracle.step(x):
                    updates.append((item, 1.0 / (1.0 + s) ** score_power))
        usize = len(updates)
        for item, w_new in updates:
            ucost, rcost = do_update(item, w_new)
            bd.update_cost += ucost
            bd.rebuild_cost += rcost
            bd.shift_l1_nat += abs(math.log(w_new) - math.log(weights[item]))
            weights[item] = w_new
            bd.update_events += 1
        if keep_steps:
            bd.steps.append((i, x, cost, usize, stats.work[i], stats.interval[i], stats.future[i]))
    return bd


def cost_decomposition_check(
    breakdown: CostBreakdown,
    factor: float = 8.0,
    additive: float | None = None,
) -> dict:
    """Compare measured total cost against the weight-trajectory bound.

    The bound is factor * (n log_b n + sum log_b(1/w at access) + total
    L1 shift of log_b weights) + additive, with b the structure's cost base.
    """
    b = breakdown.base
    lb = math.log(b)
    n = breakdown.n
    rhs_terms = {
        "n_log_n": n * math.log(max(n, 2)) / lb,
        "access_weight": breakdown.access_log_nat / lb,
        "weight_shift": breakdown.shift_l1_nat / lb,
    }
    rhs = sum(rhs_terms.values())
    additive = factor * n if additive is None else additive
    lhs = breakdown.total_cost
    return {
        "lhs": lhs,
        "rhs": rhs,
        "rhs_terms": rhs_terms,
        "factor": factor,
        "additive": additive,
        "budget": factor * rhs + additive,
        "ratio": lhs / rhs if rhs > 0 else math.inf,
        "ok": lhs <= factor * rhs + additive,
    }
