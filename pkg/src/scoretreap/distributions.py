"""Probability vectors over dense keys, divergence measures, perturbations."""

from __future__ import annotations

import csv
import math
import random
from typing import Sequence

__all__ = [
    "Distribution",
    "entropy",
    "cross_entropy",
    "kl",
    "error_measures",
    "perturb",
    "mae",
    "noisy_scores",
]

_SUM_TOL = 1e-9


class Distribution:
    """Probability masses for keys ``1..n``; must sum to 1 within 1e-9."""

    def __init__(self, masses: Sequence[float]):
        vals = [float(v) for v in masses]
        if not vals:
            raise ValueError("distribution must be non-empty")
        for i, v in enumerate(vals):
            if v < 0.0 or math.isnan(v) or math.isinf(v):
                raise ValueError(f"mass for key {i + 1} must be a finite non-negative number")
        total = math.fsum(vals)
        if abs(total - 1.0) > _SUM_TOL:
            raise ValueError(f"masses sum to {total!r}, expected 1 within {_SUM_TOL}")
        self._p = vals
        self.n = len(vals)

    def __getitem__(self, key: int) -> float:
        if not 1 <= key <= self.n:
            raise KeyError(key)
        return self._p[key - 1]

    def __len__(self) -> int:
        return self.n

    def masses(self) -> list[float]:
        return list(self._p)

    def support(self) -> list[int]:
        return [k + 1 for k, v in enumerate(self._p) if v > 0.0]

    @classmethod
    def uniform(cls, n: int) -> "Distribution":
        return cls([1.0 / n] * n)

    @classmethod
    def from_unnormalized(cls, values: Sequence[float]) -> "Distribution":
        s = math.fsum(values)
        if s <= 0:
            raise ValueError("cannot normalize a non-positive vector")
        return cls([v / s for v in values])

    def save_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["key", "mass"])
            for k, v in enumerate(self._p, start=1):
                w.writerow([k, repr(v)])

    @classmethod
    def load_csv(cls, path: str) -> "Distribution":
        masses: list[tuple[int, float]] = []
        with open(path, newline="") as fh:
            rd = csv.reader(fh)
            header = next(rd, None)
            if header is None or [c.strip() for c in header[:2]] != ["key", "mass"]:
                raise ValueError(f"{path}: expected header 'key,mass'")
            for lineno, row in enumerate(rd, start=2):
                if not row:
                    continue
                try:
                    masses.append((int(row[0]), float(row[1])))
                except (ValueError, IndexError) as exc:
                    raise ValueError(f"{path}:{lineno}: bad row {row!r}") from exc
        masses.sort()
        if [k for k, _ in masses] != list(range(1, len(masses) + 1)):
            raise ValueError(f"{path}: keys must be exactly 1..n")
        return cls([v for _, v in masses])


# ----------------------------------------------------------------------
# divergences


def _check_pair(p: Distribution, q: Distribution) -> None:
    if p.n != q.n:
        raise ValueError(f"length mismatch: {p.n} vs {q.n}")


def entropy(p: Distribution, base: float = 2.0) -> float:
    """Shannon entropy; zero-mass terms contribute nothing."""
    lb = math.log(base)
    return -math.fsum(v * math.log(v) / lb for v in p.masses() if v > 0.0)


def cross_entropy(p: Distribution, q: Distribution, base: float = 2.0) -> float:
    """``-sum p_x log q_x``; infinite-support mismatches are an error."""
    _check_pair(p, q)
    lb = math.log(base)
    out = 0.0
    for pv, qv in zip(p.masses(), q.masses()):
        if pv > 0.0:
            if qv <= 0.0:
                raise ValueError("cross entropy undefined: prediction drops supported mass")
            out -= pv * math.log(qv) / lb
    return out


def kl(p: Distribution, q: Distribution, base: float = math.e) -> float:
    """Relative entropy (defaults to nats); equals cross_entropy - entropy."""
    _check_pair(p, q)
    lb = math.log(base)
    out = 0.0
    for pv, qv in zip(p.masses(), q.masses()):
        if pv > 0.0:
            if qv <= 0.0:
                raise ValueError("kl undefined: prediction drops supported mass")
            out += pv * math.log(pv / qv) / lb
    if out < -1e-12:
        raise AssertionError(f"kl came out negative: {out}")
    return max(out, 0.0)


def error_measures(p: Distribution, q: Distribution) -> dict[str, float]:
    """Total variation, L2, Linf, chi-square, and Hellinger in one pass."""
    _check_pair(p, q)
    tv = 0.0
    l2 = 0.0
    linf = 0.0
    chi2 = 0.0
    hel = 0.0
    for pv, qv in zip(p.masses(), q.masses()):
        d = pv - qv
        ad = abs(d)
        tv += ad
        l2 += d * d
        if ad > linf:
            linf = ad
        if qv > 0.0:
            chi2 += d * d / qv
        elif pv > 0.0:
            chi2 = math.inf
        hd = math.sqrt(pv) - math.sqrt(qv)
        hel += hd * hd
    return {
        "tv": 0.5 * tv,
        "l2": math.sqrt(l2),
        "linf": linf,
        "chi2": chi2,
        "hellinger": 0.5 * math.sqrt(hel),
    }


def _measure(p: Distribution, q: Distribution, name: str) -> float:
    if name == "kl":
        return kl(p, q)
    vals = error_measures(p, q)
    if name not in vals:
        raise ValueError(f"unknown error measure {name!r}")
    return vals[name]


# ----------------------------------------------------------------------
# perturbation


def _apply_floor(vals: list[float], floor: float) -> list[float]:
    clipped = [max(v, floor) for v in vals]
    s = math.fsum(clipped)
    return [v / s for v in clipped]


def perturb(
    p: Distribution,
    measure: str,
    eps: float,
    rng: random.Random | None = None,
    floor: float | None = None,
) -> Distribution:
    """Construct ``q`` with the requested divergence from ``p``.

    The achieved value lands within 10% of ``eps`` (asserted within the
    acceptance band [0.8*eps, 1.2*eps]).  Two monotone families are tried: a
    mixture walk toward the uniform distribution, and -- when that cannot
    reach the target, e.g. for ``p`` uniform -- an exponential tilt along a
    random +/-1 direction.  A ``floor`` (default ``1/(100 n^2)``) keeps every
    mass polynomially bounded away from zero.
    """
    n = p.n
    if floor is None:
        floor = 1.0 / (100.0 * n * n)
    if eps < 0:
        raise ValueError(f"target must be non-negative, got {eps}")
    if eps == 0.0:
        return Distribution(p.masses())
    rng = rng or random.Random(0)
    base = p.masses()
    uni = [1.0 / n] * n
    direction = [1.0 if rng.random() < 0.5 else -1.0 for _ in range(n)]

    def mixture(lam: float) -> Distribution:
        return Distribution(_apply_floor([(1 - lam) * b + lam * u for b, u in zip(base, uni)], floor))

    def tilt(lam: float) -> Distribution:
        vals = [max(b, floor) * math.exp(lam * d) for b, d in zip(base, direction)]
        return Distribution(_apply_floor([v / math.fsum(vals) for v in vals], floor))

    for family, hi_cap in ((mixture, 1.0), (tilt, 80.0)):
        hi = hi_cap
        try:
            reach = _measure(p, family(hi), measure)
        except ValueError:
            continue
        if reach < eps:
            continue
        lo = 0.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            val = _measure(p, family(mid), measure)
            if val < eps:
                lo = mid
            else:
                hi = mid
        q = family(hi)
        got = _measure(p, q, measure)
        if 0.9 * eps <= got <= 1.1 * eps:
            return q
    raise ValueError(f"cannot reach {measure}={eps} from this distribution")


def mae(truth: Sequence[float], predicted: Sequence[float]) -> float:
    """Sum of absolute prediction errors (a sum, not a mean)."""
    if len(truth) != len(predicted):
        raise ValueError(f"length mismatch: {len(truth)} vs {len(predicted)}")
    return math.fsum(abs(a - b) for a, b in zip(truth, predicted))


def noisy_scores(
    scores: Sequence[float],
    target: float,
    rng: random.Random | None = None,
    lo: float = 0.0,
    hi: float | None = None,
) -> list[float]:
    """Perturb nonnegative scores to a summed absolute error near ``target``.

    Draws one uniform direction per entry and bisects a common amplitude
    until mae(scores, result) lands within 10% of the target (clamping to
    [lo, hi] is folded into the search).  target = 0 returns the scores
    unchanged.
    """
    if target < 0:
        raise ValueError(f"target error must be >= 0, got {target}")
    base = [float(s) for s in scores]
    if target == 0 or not base:
        return base
    rng = rng if rng is not None else random.Random(0)
    dirs = [rng.uniform(-1.0, 1.0) for _ in base]

    def apply(c: float) -> list[float]:
        out = []
        for s, d in zip(base, dirs):
            v = s + c * d
            if v < lo:
                v = lo
            if hi is not None and v > hi:
                v = hi
            out.append(v)
        return out

    top = 1.0
    for _ in range(80):
        if mae(base, apply(top)) >= target:
            break
        top *= 2.0
    else:
        raise ValueError(f"cannot reach summed error {target} within clamps")
    bot = 0.0
    for _ in range(80):
        mid = 0.5 * (bot + top)
        if mae(base, apply(mid)) < target:
            bot = mid
        else:
            top = mid
    out = apply(top)
    got = mae(base, out)
    if not 0.9 * target <= got <= 1.1 * target:
        raise ValueError(f"summed error {got} missed target {target}")
    return out
