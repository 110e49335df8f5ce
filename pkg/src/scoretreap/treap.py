"""Treap over dense integer keys with exact cost accounting.

Keys live in ``[1, n]``.  A priority is a pair ``(tier, offset)`` standing for
the real number ``-tier + offset``; priorities compare lexicographically by
``(-tier, offset)`` and ties are broken toward the smaller key, so the heap
order is a strict total order and any priority assignment induces exactly one
tree.  All operations use iterative descent and parent links; nothing here
recurses, so chains of any depth are fine.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

from .errors import DuplicateKeyError

__all__ = ["Priority", "CostLedger", "Treap"]


@dataclass(frozen=True)
class Priority:
    """Composite priority: integral tier plus a fractional tie-breaking offset.

    ``tier`` is the negated integral part of the priority, so a *smaller* tier
    means a *higher* priority (closer to the root).  ``offset`` must lie in
    the open interval (0, 1).
    """

    tier: int
    offset: float

    def __post_init__(self) -> None:
        if not 0.0 < self.offset < 1.0:
            raise ValueError(f"offset must lie in (0, 1), got {self.offset!r}")

    def value(self) -> float:
        """The priority as a plain real number (larger = closer to root)."""
        return -self.tier + self.offset


@dataclass
class CostLedger:
    """Monotone operation counters; ``reset`` is the only way down."""

    comparisons: int = 0
    rotations: int = 0
    nodes_touched: int = 0

    def reset(self) -> None:
        self.comparisons = 0
        self.rotations = 0
        self.nodes_touched = 0


class Treap:
    """Index-addressed treap over the key universe ``1..n``."""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError(f"universe size must be >= 1, got {n}")
        self.n = n
        self.root = 0
        self.size = 0
        self.ledger = CostLedger()
        z = n + 1
        self._tier = [0] * z
        self._off = [0.0] * z
        self._left = [0] * z
        self._right = [0] * z
        self._parent = [0] * z
        self._present = bytearray(z)

    # ------------------------------------------------------------------
    # construction

    @classmethod
    def build_arrays(cls, tiers: Sequence[int], offsets: Sequence[float]) -> "Treap":
        """Build the unique treap for keys ``1..len(tiers)`` in one sweep.

        ``tiers[k-1]`` / ``offsets[k-1]`` hold key ``k``'s priority.  The
        right-spine sweep is O(n) and produces the same tree as inserting the
        keys in any order (uniqueness of the treap under a strict priority
        order).
        """
        n = len(tiers)
        if len(offsets) != n:
            raise ValueError("tiers and offsets must have equal length")
        t = cls(n)
        tier = t._tier
        off = t._off
        left = t._left
        right = t._right
        parent = t._parent
        for i, o in enumerate(offsets):
            if not 0.0 < o < 1.0:
                raise ValueError(f"offset for key {i + 1} not in (0, 1): {o!r}")
        tier[1:] = list(tiers)
        off[1:] = list(offsets)
        stack: list[int] = []
        for k in range(1, n + 1):
            tk = tier[k]
            ok = off[k]
            last = 0
            # pop spine nodes that k beats; equal (tier, offset) resolves to
            # the smaller key, which is already on the stack, so no pop
            while stack:
                s = stack[-1]
                ts = tier[s]
                if ts > tk or (ts == tk and off[s] < ok):
                    stack.pop()
                    last = s
                else:
                    break
            if last:
                left[k] = last
                parent[last] = k
            if stack:
                right[stack[-1]] = k
                parent[k] = stack[-1]
            stack.append(k)
        t.root = stack[0]
        t.size = n
        t._present = bytearray([0]) + bytearray([1] * n)
        return t

    @classmethod
    def build(cls, priorities: Mapping[int, Priority], n: int | None = None) -> "Treap":
        """Build the unique treap holding exactly ``priorities.keys()``."""
        if not priorities:
            raise ValueError("cannot build an empty treap")
        keys = sorted(priorities)
        if n is None:
            n = keys[-1]
        t = cls(n)
        tier = t._tier
        off = t._off
        left = t._left
        right = t._right
        parent = t._parent
        present = t._present
        for k in keys:
            if not 1 <= k <= n:
                raise KeyError(f"key {k} outside universe 1..{n}")
            p = priorities[k]
            tier[k] = p.tier
            off[k] = p.offset
            present[k] = 1
        stack: list[int] = []
        for k in keys:
            tk = tier[k]
            ok = off[k]
            last = 0
            while stack:
                s = stack[-1]
                ts = tier[s]
                if ts > tk or (ts == tk and off[s] < ok):
                    stack.pop()
                    last = s
                else:
                    break
            if last:
                left[k] = last
                parent[last] = k
            if stack:
                right[stack[-1]] = k
                parent[k] = stack[-1]
            stack.append(k)
        t.root = stack[0]
        t.size = len(keys)
        return t

    # ------------------------------------------------------------------
    # introspection

    def __len__(self) -> int:
        return self.size

    def __contains__(self, key: int) -> bool:
        return 1 <= key <= self.n and bool(self._present[key])

    def keys(self) -> Iterator[int]:
        """Present keys in ascending order."""
        for k in range(1, self.n + 1):
            if self._present[k]:
                yield k

    def priority(self, key: int) -> Priority:
        self._require(key)
        return Priority(self._tier[key], self._off[key])

    def parent_of(self, key: int) -> int:
        """Parent key, or 0 at the root."""
        self._require(key)
        return self._parent[key]

    def left_of(self, key: int) -> int:
        self._require(key)
        return self._left[key]

    def right_of(self, key: int) -> int:
        self._require(key)
        return self._right[key]

    def _require(self, key: int) -> None:
        if not (1 <= key <= self.n and self._present[key]):
            raise KeyError(key)

    def _wins(self, a: int, b: int) -> bool:
        """True if key ``a`` outranks key ``b`` (strictly higher priority)."""
        ta = self._tier[a]
        tb = self._tier[b]
        if ta != tb:
            return ta < tb
        oa = self._off[a]
        ob = self._off[b]
        if oa != ob:
            return oa > ob
        return a < b

    # ------------------------------------------------------------------
    # queries

    def access(self, key: int) -> int:
        """Root-to-key descent; returns the number of nodes on the path."""
        self._require(key)
        left = self._left
        right = self._right
        cur = self.root
        d = 0
        while True:
            d += 1
            if cur == key:
                break
            cur = left[cur] if key < cur else right[cur]
        led = self.ledger
        led.comparisons += d
        led.nodes_touched += d
        return d

    def depth(self, key: int) -> int:
        """Depth by parent walk (root has depth 1); no ledger charge."""
        self._require(key)
        parent = self._parent
        d = 1
        cur = key
        while parent[cur]:
            cur = parent[cur]
            d += 1
        return d

    def depths(self) -> dict[int, int]:
        """Depth of every present key in one traversal."""
        out: dict[int, int] = {}
        if not self.root:
            return out
        left = self._left
        right = self._right
        stack = [(self.root, 1)]
        while stack:
            node, d = stack.pop()
            out[node] = d
            l = left[node]
            r = right[node]
            if l:
                stack.append((l, d + 1))
            if r:
                stack.append((r, d + 1))
        return out

    def is_ancestor(self, x: int, y: int) -> bool:
        """True iff ``x`` lies on the root path of ``y``.

        Evaluated through the order characterization: ``x`` is an ancestor of
        ``y`` exactly when ``x`` has the highest priority among the present
        keys in the closed interval ``[min(x,y), max(x,y)]``.
        """
        self._require(x)
        self._require(y)
        if x == y:
            return True
        lo, hi = (x, y) if x < y else (y, x)
        present = self._present
        best = lo
        for k in range(lo + 1, hi + 1):
            if present[k] and self._wins(k, best):
                best = k
        return best == x

    # ------------------------------------------------------------------
    # updates

    def insert(self, key: int, pri: Priority) -> int:
        """Insert; returns the number of rotations performed."""
        if not 1 <= key <= self.n:
            raise KeyError(f"key {key} outside universe 1..{self.n}")
        if self._present[key]:
            raise DuplicateKeyError(f"key {key} already present")
        self._tier[key] = pri.tier
        self._off[key] = pri.offset
        self._present[key] = 1
        self.size += 1
        if not self.root:
            self.root = key
            self._parent[key] = 0
            self._left[key] = 0
            self._right[key] = 0
            return 0
        left = self._left
        right = self._right
        cur = self.root
        comps = 0
        while True:
            comps += 1
            if key < cur:
                nxt = left[cur]
                if not nxt:
                    left[cur] = key
                    break
            else:
                nxt = right[cur]
                if not nxt:
                    right[cur] = key
                    break
            cur = nxt
        self._parent[key] = cur
        left[key] = 0
        right[key] = 0
        self.ledger.comparisons += comps
        rot = 0
        parent = self._parent
        while parent[key] and self._wins(key, parent[key]):
            self._rotate_up(key)
            rot += 1
        self.ledger.rotations += rot
        return rot

    def delete(self, key: int) -> int:
        """Rotate ``key`` down to a leaf and unlink it; returns rotations."""
        self._require(key)
        left = self._left
        right = self._right
        rot = 0
        while True:
            l = left[key]
            r = right[key]
            if l and r:
                c = l if self._wins(l, r) else r
            elif l:
                c = l
            elif r:
                c = r
            else:
                break
            self._rotate_up(c)
            rot += 1
        p = self._parent[key]
        if p:
            if left[p] == key:
                left[p] = 0
            else:
                right[p] = 0
        else:
            self.root = 0
        self._parent[key] = 0
        self._present[key] = 0
        self.size -= 1
        self.ledger.rotations += rot
        return rot

    def update_priority(self, key: int, pri: Priority, *, reinsert: bool = False) -> int:
        """Re-prioritize ``key`` in place; returns the number of rotations.

        The default restores the heap order by rotating ``key`` up or down
        from where it sits, which costs exactly ``|depth_before - depth_after|``
        rotations.  With ``reinsert=True`` the key is deleted and re-inserted
        instead (same resulting tree, by uniqueness, but a costlier path).
        """
        self._require(key)
        if reinsert:
            rot = self.delete(key)
            rot += self.insert(key, pri)
            return rot
        self._tier[key] = pri.tier
        self._off[key] = pri.offset
        rot = 0
        parent = self._parent
        if parent[key] and self._wins(key, parent[key]):
            while parent[key] and self._wins(key, parent[key]):
                self._rotate_up(key)
                rot += 1
        else:
            left = self._left
            right = self._right
            while True:
                l = left[key]
                r = right[key]
                if l and r:
                    c = l if self._wins(l, r) else r
                elif l:
                    c = l
                elif r:
                    c = r
                else:
                    break
                if not self._wins(c, key):
                    break
                self._rotate_up(c)
                rot += 1
        self.ledger.rotations += rot
        return rot

    def _rotate_up(self, x: int) -> None:
        p = self._parent[x]
        g = self._parent[p]
        if self._left[p] == x:
            b = self._right[x]
            self._left[p] = b
            if b:
                self._parent[b] = p
            self._right[x] = p
        else:
            b = self._left[x]
            self._right[p] = b
            if b:
                self._parent[b] = p
            self._left[x] = p
        self._parent[p] = x
        self._parent[x] = g
        if g:
            if self._left[g] == p:
                self._left[g] = x
            else:
                self._right[g] = x
        else:
            self.root = x

    # ------------------------------------------------------------------
    # validation

    def validate(self) -> str | None:
        """Return a description of the first structural violation, else None."""
        present_count = sum(self._present[1:])
        if present_count != self.size:
            return f"size {self.size} != {present_count} present flags"
        if not self.root:
            return None if self.size == 0 else "empty root with nonzero size"
        if not self._present[self.root]:
            return f"root {self.root} is not present"
        if self._parent[self.root]:
            return f"root {self.root} has parent {self._parent[self.root]}"
        left = self._left
        right = self._right
        parent = self._parent
        seen = 0
        stack: list[tuple[int, int, int]] = [(self.root, 0, self.n + 1)]
        while stack:
            node, lo, hi = stack.pop()
            seen += 1
            if not lo < node < hi:
                return f"key {node} violates search order ({lo}, {hi})"
            if not self._present[node]:
                return f"linked key {node} is not present"
            for child in (left[node], right[node]):
                if child:
                    if parent[child] != node:
                        return f"parent link of {child} is {parent[child]}, expected {node}"
                    if self._wins(child, node):
                        return f"heap order violated between {node} and child {child}"
            if left[node]:
                stack.append((left[node], lo, node))
            if right[node]:
                stack.append((right[node], node, hi))
        if seen != self.size:
            return f"reached {seen} nodes, size says {self.size}"
        return None
