"""Block-resident search structures with exact I/O accounting.

A ``BlockStore`` holds fixed-fanout blocks (at most ``B - 1`` keys, ``B``
children) and counts how many distinct blocks each logical operation
touches.  On top of it:

* ``BTree`` -- a plain B-tree (bulk build, search, insert, delete).
* ``TierForestBTreap`` -- a treap under the doubly-logarithmic block rule,
  decomposed into maximal same-tier components, each materialized as a
  bulk-built B-tree and glued below the block holding its root's parent.
* ``DetScoreForest`` -- deterministic score bucketing into doubly
  exponentially growing trees, probed smallest-first.
* ``RankForest`` -- a self-organizing forest keyed by recency rank.
"""

from __future__ import annotations

import heapq
import math
import warnings
from bisect import bisect_left, insort
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import ConfigError, DuplicateKeyError
from .priorities import RandomStream, WeightVector, tier_value
from .treap import Priority, Treap

__all__ = [
    "EMConfig",
    "Block",
    "BlockStore",
    "BTree",
    "UpdateCost",
    "TierForestBTreap",
    "DetScoreForest",
    "RankForest",
    "em_report",
]


@dataclass
class EMConfig:
    """External-memory knobs: block fanout B and the depth slack alpha."""

    B: int
    alpha: float = 0.5

    def __post_init__(self) -> None:
        if self.B < 4:
            raise ConfigError(f"block fanout must be >= 4, got {self.B}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")

    def warn_if_small(self, n: int) -> None:
        """Advisory: fanout below log(n)^(1/(1-alpha)) weakens depth bounds."""
        if n >= 3 and self.B < math.log(n) ** (1.0 / (1.0 - self.alpha)):
            warnings.warn(
                f"fanout B={self.B} is small for n={n} at alpha={self.alpha}; "
                "depth guarantees degrade",
                stacklevel=3,
            )


class Block:
    __slots__ = ("keys", "children", "tier")

    def __init__(self, keys: list[int], children: list[int], tier: int | None):
        self.keys = keys
        self.children = children  # [] for leaves, else len(keys)+1 ids
        self.tier = tier


class BlockStore:
    """Arena of blocks plus the two I/O counters (search vs rebuild)."""

    def __init__(self, B: int):
        if B < 4:
            raise ConfigError(f"block fanout must be >= 4, got {B}")
        self.B = B
        self.blocks: dict[int, Block] = {}
        self.io_touches = 0
        self.rebuild_touches = 0
        self._next_id = 1

    def new_block(self, keys: list[int] | None = None, children: list[int] | None = None,
                  tier: int | None = None) -> int:
        bid = self._next_id
        self._next_id += 1
        self.blocks[bid] = Block(keys or [], children or [], tier)
        return bid

    def free_block(self, bid: int) -> None:
        del self.blocks[bid]

    def charge(self, bids: Iterable[int]) -> int:
        """Count one search touch per distinct block of one operation."""
        distinct = set(bids)
        self.io_touches += len(distinct)
        return len(distinct)


def em_report(store: BlockStore) -> dict:
    """Counters plus an occupancy histogram (keys-per-block -> block count)."""
    hist: dict[int, int] = {}
    for blk in store.blocks.values():
        hist[len(blk.keys)] = hist.get(len(blk.keys), 0) + 1
    return {
        "io_touches": store.io_touches,
        "rebuild_touches": store.rebuild_touches,
        "block_count": len(store.blocks),
        "occupancy": dict(sorted(hist.items())),
    }


class BTree:
    """B-tree of fanout ``store.B`` living inside a ``BlockStore``.

    Blocks hold at most ``B - 1`` keys; non-root blocks keep at least
    ``ceil(B/2) - 1`` after deletions.  ``key_block`` tracks the block that
    currently contains each key, and ``owned`` tracks this tree's block ids
    so a tree can be freed wholesale.
    """

    def __init__(self, store: BlockStore, keys: Sequence[int] = (), tier: int | None = None):
        self.store = store
        self.tier = tier
        self.key_block: dict[int, int] = {}
        self.owned: set[int] = set()
        ks = sorted(keys)
        if any(ks[i] == ks[i + 1] for i in range(len(ks) - 1)):
            raise DuplicateKeyError("bulk keys contain duplicates")
        if ks:
            self.root, _ = self._bulk(ks)
        else:
            self.root = self._new([], [])

    # -- block bookkeeping ------------------------------------------------

    def _new(self, keys: list[int], children: list[int]) -> int:
        bid = self.store.new_block(keys, children, self.tier)
        self.owned.add(bid)
        for k in keys:
            self.key_block[k] = bid
        return bid

    def _free(self, bid: int) -> None:
        self.owned.discard(bid)
        self.store.free_block(bid)

    def free(self) -> None:
        """Release every block owned by this tree."""
        for bid in list(self.owned):
            self.store.free_block(bid)
        self.owned.clear()
        self.key_block.clear()

    def __len__(self) -> int:
        return len(self.key_block)

    def __contains__(self, key: int) -> bool:
        return key in self.key_block

    @property
    def max_keys(self) -> int:
        return self.store.B - 1

    @property
    def min_keys(self) -> int:
        return (self.store.B + 1) // 2 - 1

    # -- bulk construction -------------------------------------------------

    def _bulk(self, keys: list[int]) -> tuple[int, int]:
        """Minimal uniform-depth packing of sorted keys; returns (id, height)."""
        if len(keys) <= self.max_keys:
            return self._new(list(keys), []), 1
        B = self.store.B
        child_cap = self.max_keys  # capacity of a height-1 subtree
        height = 2
        while child_cap * B + (B - 1) < len(keys):
            child_cap = child_cap * B + (B - 1)
            height += 1
        fanout = -((len(keys) + 1) // -(child_cap + 1))  # ceil division
        spread = len(keys) - (fanout - 1)
        base, extra = divmod(spread, fanout)
        sizes = [base + 1] * extra + [base] * (fanout - extra)
        node_keys: list[int] = []
        children: list[int] = []
        idx = 0
        for j, size in enumerate(sizes):
            cid, ch = self._bulk(keys[idx : idx + size])
            if ch != height - 1:
                raise AssertionError(f"ragged bulk build: child height {ch} != {height - 1}")
            children.append(cid)
            idx += size
            if j < fanout - 1:
                node_keys.append(keys[idx])
                idx += 1
        return self._new(node_keys, children), height

    # -- queries -----------------------------------------------------------

    def search(self, key: int) -> tuple[bool, list[int]]:
        """Descend toward ``key``; returns (found, root-to-end block path)."""
        blocks = self.store.blocks
        path: list[int] = []
        bid = self.root
        while True:
            blk = blocks[bid]
            path.append(bid)
            i = bisect_left(blk.keys, key)
            if i < len(blk.keys) and blk.keys[i] == key:
                return True, path
            if not blk.children:
                return False, path
            bid = blk.children[i]

    def height(self) -> int:
        blocks = self.store.blocks
        h = 1
        bid = self.root
        while blocks[bid].children:
            bid = blocks[bid].children[0]
            h += 1
        return h

    def keys_inorder(self) -> list[int]:
        out: list[int] = []
        blocks = self.store.blocks

        def walk(bid: int) -> None:
            blk = blocks[bid]
            if not blk.children:
                out.extend(blk.keys)
                return
            for i, k in enumerate(blk.keys):
                walk(blk.children[i])
                out.append(k)
            walk(blk.children[-1])

        walk(self.root)
        return out

    # -- updates -----------------------------------------------------------

    def insert(self, key: int) -> list[int]:
        """Insert ``key``; returns the block ids touched (path + splits)."""
        if key in self.key_block:
            raise DuplicateKeyError(f"key {key} already present")
        blocks = self.store.blocks
        path: list[int] = []
        bid = self.root
        while True:
            blk = blocks[bid]
            path.append(bid)
            if not blk.children:
                break
            bid = blk.children[bisect_left(blk.keys, key)]
        insort(blk.keys, key)
        self.key_block[key] = bid
        touched = list(path)
        pos = len(path) - 1
        cur = bid
        while len(blocks[cur].keys) > self.max_keys:
            blk = blocks[cur]
            mid = len(blk.keys) // 2
            sep = blk.keys[mid]
            right_keys = blk.keys[mid + 1 :]
            right_children = blk.children[mid + 1 :] if blk.children else []
            blk.keys = blk.keys[:mid]
            if blk.children:
                blk.children = blk.children[: mid + 1]
            rid = self._new(right_keys, right_children)
            touched.append(rid)
            if pos == 0:
                new_root = self._new([sep], [cur, rid])
                self.root = new_root
                touched.append(new_root)
                break
            parent = path[pos - 1]
            pblk = blocks[parent]
            j = bisect_left(pblk.keys, sep)
            pblk.keys.insert(j, sep)
            pblk.children.insert(j + 1, rid)
            self.key_block[sep] = parent
            cur = parent
            pos -= 1
        return touched

    def delete(self, key: int) -> list[int]:
        """Delete ``key``; returns the block ids touched (path + rebalances)."""
        if key not in self.key_block:
            raise KeyError(key)
        blocks = self.store.blocks
        path: list[int] = []
        bid = self.root
        while True:
            blk = blocks[bid]
            path.append(bid)
            i = bisect_left(blk.keys, key)
            if i < len(blk.keys) and blk.keys[i] == key:
                break
            bid = blk.children[i]
        if blk.children:
            # swap with the predecessor so the removal happens at a leaf
            cid = blk.children[i]
            while blocks[cid].children:
                path.append(cid)
                cid = blocks[cid].children[-1]
            path.append(cid)
            leaf = blocks[cid]
            pred = leaf.keys.pop()
            blk.keys[i] = pred
            self.key_block[pred] = bid
        else:
            blk.keys.pop(i)
        del self.key_block[key]
        touched = list(path)
        pos = len(path) - 1
        while pos > 0:
            cur = path[pos]
            cblk = blocks[cur]
            if len(cblk.keys) >= self.min_keys:
                break
            parent = path[pos - 1]
            pblk = blocks[parent]
            ci = pblk.children.index(cur)
            if ci > 0 and len(blocks[pblk.children[ci - 1]].keys) > self.min_keys:
                lid = pblk.children[ci - 1]
                lblk = blocks[lid]
                touched.append(lid)
                sep = pblk.keys[ci - 1]
                cblk.keys.insert(0, sep)
                self.key_block[sep] = cur
                up = lblk.keys.pop()
                pblk.keys[ci - 1] = up
                self.key_block[up] = parent
                if lblk.children:
                    cblk.children.insert(0, lblk.children.pop())
                break
            if ci < len(pblk.children) - 1 and len(blocks[pblk.children[ci + 1]].keys) > self.min_keys:
                rid = pblk.children[ci + 1]
                rblk = blocks[rid]
                touched.append(rid)
                sep = pblk.keys[ci]
                cblk.keys.append(sep)
                self.key_block[sep] = cur
                up = rblk.keys.pop(0)
                pblk.keys[ci] = up
                self.key_block[up] = parent
                if rblk.children:
                    cblk.children.append(rblk.children.pop(0))
                break
            # merge with a sibling and recurse on the parent
            if ci > 0:
                li = ci - 1
                lid, rid = pblk.children[li], cur
            else:
                li = ci
                lid, rid = cur, pblk.children[ci + 1]
            lblk = blocks[lid]
            rblk = blocks[rid]
            touched.append(lid)
            touched.append(rid)
            sep = pblk.keys[li]
            lblk.keys.append(sep)
            self.key_block[sep] = lid
            for k2 in rblk.keys:
                self.key_block[k2] = lid
            lblk.keys.extend(rblk.keys)
            lblk.children.extend(rblk.children)
            pblk.keys.pop(li)
            pblk.children.pop(li + 1)
            self._free(rid)
            if rid == cur:
                path[pos] = lid
            pos -= 1
        root_blk = blocks[self.root]
        if not root_blk.keys and root_blk.children:
            old = self.root
            self.root = root_blk.children[0]
            self._free(old)
        return [b for b in touched if b in self.owned]

    # -- validation ---------------------------------------------------------

    def validate(self) -> str | None:
        blocks = self.store.blocks
        leaf_depths: set[int] = set()
        count = 0
        stack: list[tuple[int, int, float, float]] = [(self.root, 1, -math.inf, math.inf)]
        while stack:
            bid, depth, lo, hi = stack.pop()
            blk = blocks[bid]
            ks = blk.keys
            count += len(ks)
            if any(ks[i] >= ks[i + 1] for i in range(len(ks) - 1)):
                return f"block {bid} keys not strictly increasing"
            if ks and not (lo < ks[0] and ks[-1] < hi):
                return f"block {bid} violates key range ({lo}, {hi})"
            if len(ks) > self.max_keys:
                return f"block {bid} overfull ({len(ks)} keys)"
            if bid != self.root and len(ks) < self.min_keys:
                return f"block {bid} underfull ({len(ks)} keys)"
            for k in ks:
                if self.key_block.get(k) != bid:
                    return f"key {k} maps to {self.key_block.get(k)}, found in {bid}"
            if blk.children:
                if len(blk.children) != len(ks) + 1:
                    return f"block {bid} has {len(blk.children)} children for {len(ks)} keys"
                bounds = [lo] + list(ks) + [hi]
                for i, cid in enumerate(blk.children):
                    stack.append((cid, depth + 1, bounds[i], bounds[i + 1]))
            else:
                leaf_depths.add(depth)
        if len(leaf_depths) > 1:
            return f"leaves at mixed depths {sorted(leaf_depths)}"
        if count != len(self.key_block):
            return f"tree holds {count} keys, map says {len(self.key_block)}"
        return None


@dataclass
class UpdateCost:
    """Block touches of one weight update, split by phase."""

    removal_path: int
    insertion_path: int
    rebuild_writes: int

    @property
    def search_total(self) -> int:
        return self.removal_path + self.insertion_path


class TierForestBTreap:
    """Block-tree over a score-tiered treap.

    The base treap orders keys by ``floor(log4 log_B (1/w))`` tiers; tiers
    only grow along root-to-leaf paths, so maximal same-tier regions form a
    forest of components.  Each component becomes one bulk-built B-tree whose
    root hangs (conceptually) below the block containing the component
    root's treap parent.  Weight updates re-prioritize the base treap and
    rebuild exactly the components whose membership changed; rebuild writes
    are tracked apart from search touches.
    """

    def __init__(
        self,
        weights: WeightVector | Sequence[float],
        cfg: EMConfig,
        rng: RandomStream | None = None,
        offsets: Sequence[float] | None = None,
    ):
        wl = weights.values() if isinstance(weights, WeightVector) else [float(v) for v in weights]
        self.cfg = cfg
        self.n = len(wl)
        cfg.warn_if_small(self.n)
        self.weights = [0.0] + wl  # 1-based
        self._rng = rng if rng is not None else RandomStream(0)
        if offsets is None:
            offsets = [self._rng.next_offset() for _ in range(self.n)]
        tiers = [tier_value(w, cfg.B, 4) for w in wl]
        self.base = Treap.build_arrays(tiers, list(offsets))
        self.store = BlockStore(cfg.B)
        self.comp_of: list[int] = []
        self.comp_root: dict[int, int] = {}
        self.comp_tree: dict[int, BTree] = {}
        self._next_comp = 1
        self._rebuild(full=True)

    # -- component decomposition -------------------------------------------

    def tier_of(self, key: int) -> int:
        return self.base._tier[key]

    def _partition(self) -> list[int]:
        """Component id per key; a node roots a component iff its parent
        is absent or sits in a strictly smaller tier."""
        base = self.base
        left, right, parent, tier = base._left, base._right, base._parent, base._tier
        comp = [0] * (self.n + 1)
        stack = [base.root]
        while stack:
            k = stack.pop()
            p = parent[k]
            if p and tier[p] == tier[k]:
                comp[k] = comp[p]
            else:
                comp[k] = k  # provisional id: the component's top key
            if left[k]:
                stack.append(left[k])
            if right[k]:
                stack.append(right[k])
        return comp

    def _rebuild(self, full: bool = False) -> int:
        """Recompute the partition; rebuild changed components.

        Returns the number of blocks written for the rebuilt components.
        """
        comp_top = self._partition()
        groups: dict[int, list[int]] = {}
        for k in range(1, self.n + 1):
            groups.setdefault(comp_top[k], []).append(k)
        old_by_sig: dict[tuple[int, frozenset[int]], tuple[int, BTree]] = {}
        if not full:
            members: dict[int, list[int]] = {}
            for k in range(1, self.n + 1):
                members.setdefault(self.comp_of[k], []).append(k)
            for cid, ks in members.items():
                # keyed by the tree's recorded tier: the base tier may already
                # have moved under the updated key
                sig = (self.comp_tree[cid].tier, frozenset(ks))
                old_by_sig[sig] = (cid, self.comp_tree[cid])
        new_comp_of = [0] * (self.n + 1)
        new_root: dict[int, int] = {}
        new_tree: dict[int, BTree] = {}
        written = 0
        for top, ks in groups.items():
            sig = (self.base._tier[top], frozenset(ks))
            hit = old_by_sig.pop(sig, None)
            if hit is not None:
                cid, tree = hit
            else:
                cid = self._next_comp
                self._next_comp += 1
                tree = BTree(self.store, ks, tier=self.base._tier[top])
                written += len(tree.owned)
            new_root[cid] = top
            new_tree[cid] = tree
            for k in ks:
                new_comp_of[k] = cid
        for _, (cid, tree) in old_by_sig.items():
            tree.free()
        self.comp_of = new_comp_of
        self.comp_root = new_root
        self.comp_tree = new_tree
        return written

    def _refresh_root(self, key: int) -> None:
        """Same-tier rotations can promote a different member to component top."""
        base = self.base
        tier = base._tier
        parent = base._parent
        cur = key
        while parent[cur] and tier[parent[cur]] == tier[cur]:
            cur = parent[cur]
        self.comp_root[self.comp_of[key]] = cur

    # -- access -------------------------------------------------------------

    def _chain(self, key: int) -> list[int]:
        """Component ids on the root path, top component first."""
        chain = [self.comp_of[key]]
        while True:
            top = self.comp_root[chain[-1]]
            p = self.base._parent[top]
            if not p:
                break
            chain.append(self.comp_of[p])
        chain.reverse()
        return chain

    def _path_blocks(self, key: int) -> list[tuple[int, int]]:
        """(block id, tier) pairs on the glued search path to ``key``."""
        chain = self._chain(key)
        out: list[tuple[int, int]] = []
        for i, cid in enumerate(chain):
            tree = self.comp_tree[cid]
            if i + 1 < len(chain):
                target = self.base._parent[self.comp_root[chain[i + 1]]]
            else:
                target = key
            found, path = tree.search(target)
            if not found:
                raise AssertionError(f"key {target} missing from its component tree")
            out.extend((bid, tree.tier) for bid in path)
        return out

    def access(self, key: int) -> int:
        """Charge and return the distinct blocks on the path to ``key``."""
        if not 1 <= key <= self.n:
            raise KeyError(key)
        pairs = self._path_blocks(key)
        tiers = [t for _, t in pairs]
        if any(tiers[i] > tiers[i + 1] for i in range(len(tiers) - 1)):
            raise AssertionError(f"tiers not monotone along access path: {tiers}")
        return self.store.charge(bid for bid, _ in pairs)

    def access_blocks(self, key: int) -> list[tuple[int, int]]:
        """Uncharged path trace for tests: (block id, tier) pairs."""
        return self._path_blocks(key)

    # -- updates ------------------------------------------------------------

    def update_weight(self, key: int, w_new: float, offset: float | None = None) -> UpdateCost:
        """Re-score one item; returns the phase-split block touches."""
        if not 1 <= key <= self.n:
            raise KeyError(key)
        removal = len({bid for bid, _ in self._path_blocks(key)})
        old_tier = self.base._tier[key]
        new_tier = tier_value(w_new, self.cfg.B, 4)
        if offset is None:
            offset = self._rng.next_offset()
        rot = self.base.update_priority(key, Priority(new_tier, offset))
        self.weights[key] = w_new
        written = 0
        if new_tier != old_tier:
            written = self._rebuild()
        elif rot:
            self._refresh_root(key)
        insertion = len({bid for bid, _ in self._path_blocks(key)})
        self.store.io_touches += removal + insertion
        self.store.rebuild_touches += written
        return UpdateCost(removal, insertion, written)

    # -- serialization / checks ----------------------------------------------

    def dump(self) -> str:
        """Canonical text form: one block per line (id, tier, keys, children).

        Ids are renumbered in a deterministic traversal of the glued forest,
        with component roots appended to their glue block's child list, so
        two structurally identical forests dump to identical strings.
        """
        glue_children: dict[int, list[int]] = {}
        top_comps: list[int] = []
        for cid, top in sorted(self.comp_root.items(), key=lambda kv: kv[1]):
            p = self.base._parent[top]
            if p:
                host = self.comp_tree[self.comp_of[p]].key_block[p]
                glue_children.setdefault(host, []).append(self.comp_tree[cid].root)
            else:
                top_comps.append(self.comp_tree[cid].root)
        blocks = self.store.blocks
        order: list[int] = []
        number: dict[int, int] = {}
        queue = list(top_comps)
        qi = 0
        while qi < len(queue):
            bid = queue[qi]
            qi += 1
            number[bid] = len(order) + 1
            order.append(bid)
            queue.extend(blocks[bid].children)
            queue.extend(glue_children.get(bid, []))
        lines = []
        for bid in order:
            blk = blocks[bid]
            kids = [number[c] for c in blk.children] + [number[c] for c in glue_children.get(bid, [])]
            keys = " ".join(str(k) for k in blk.keys)
            ks = " ".join(str(c) for c in kids)
            lines.append(f"{number[bid]}, {blk.tier}, [{keys}], [{ks}]")
        return "\n".join(lines) + "\n"

    def validate(self) -> str | None:
        err = self.base.validate()
        if err:
            return f"base treap: {err}"
        seen = 0
        for cid, tree in self.comp_tree.items():
            err = tree.validate()
            if err:
                return f"component {cid}: {err}"
            t = self.base._tier[self.comp_root[cid]]
            for k in tree.key_block:
                if self.base._tier[k] != t:
                    return f"component {cid} mixes tiers at key {k}"
                if self.comp_of[k] != cid:
                    return f"key {k} assigned to component {self.comp_of[k]}, stored in {cid}"
            seen += len(tree)
        if seen != self.n:
            return f"components hold {seen} keys, expected {self.n}"
        return None


class DetScoreForest:
    """Deterministic score buckets: item with score w joins tree
    ``max(0, floor(log2 log_B (1/w)))``; lookups probe trees in index order."""

    def __init__(self, weights: WeightVector | Sequence[float], cfg: EMConfig):
        wl = weights.values() if isinstance(weights, WeightVector) else [float(v) for v in weights]
        self.cfg = cfg
        self.n = len(wl)
        cfg.warn_if_small(self.n)
        self.weights = [0.0] + wl
        self.store = BlockStore(cfg.B)
        self.tree_index = [0] * (self.n + 1)
        buckets: dict[int, list[int]] = {}
        for k, w in enumerate(wl, start=1):
            idx = tier_value(w, cfg.B, 2)
            self.tree_index[k] = idx
            buckets.setdefault(idx, []).append(k)
        self.trees = {idx: BTree(self.store, ks, tier=idx) for idx, ks in sorted(buckets.items())}
        if sum(wl) <= 1.0 + 1e-9:
            err = self.check_sizes()
            if err:
                raise AssertionError(err)

    def check_sizes(self) -> str | None:
        """Unit total score forces |T_i| <= B^(2^(i+1))."""
        for idx, tree in self.trees.items():
            cap = self.cfg.B ** (2 ** (idx + 1))
            if len(tree) > cap:
                return f"tree {idx} holds {len(tree)} items, cap {cap}"
        return None

    def access(self, key: int) -> int:
        """Probe trees smallest-index-first; charge every probed path block."""
        if not 1 <= key <= self.n:
            raise KeyError(key)
        touched: set[int] = set()
        for idx in sorted(self.trees):
            tree = self.trees[idx]
            if not len(tree):
                continue
            found, path = tree.search(key)
            touched.update(path)
            if found:
                return self.store.charge(touched)
        raise KeyError(key)

    def update_weight(self, key: int, w_new: float) -> int:
        """Move the item between buckets if its index changed; returns touches."""
        if not 1 <= key <= self.n:
            raise KeyError(key)
        new_idx = tier_value(w_new, self.cfg.B, 2)
        old_idx = self.tree_index[key]
        self.weights[key] = w_new
        if new_idx == old_idx:
            return 0
        touched = set(self.trees[old_idx].delete(key))
        if new_idx not in self.trees:
            self.trees[new_idx] = BTree(self.store, (), tier=new_idx)
            self.trees = dict(sorted(self.trees.items()))
        touched.update(self.trees[new_idx].insert(key))
        self.tree_index[key] = new_idx
        return self.store.charge(touched)

    def validate(self) -> str | None:
        total = 0
        for idx, tree in self.trees.items():
            err = tree.validate()
            if err:
                return f"tree {idx}: {err}"
            for k in tree.key_block:
                if self.tree_index[k] != idx:
                    return f"key {k} indexed {self.tree_index[k]} but stored in tree {idx}"
            total += len(tree)
        if total != self.n:
            return f"forest holds {total} keys, expected {self.n}"
        return None


class _Fenwick:
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


class RankForest:
    """Self-organizing forest of B-trees keyed by recency rank.

    ``S = ceil(log2 log_B n)`` trees (at least one); tree ``i`` (1-based) may
    hold at most ``2 * B^(2^(i+1))`` items before it sheds its ``B^(2^(i+1))``
    least recent ones into tree ``i + 1``; the last tree absorbs everything.
    An access moves the item to recency rank 1 and into the first tree.
    """

    def __init__(self, n: int, cfg: EMConfig):
        if n < 1:
            raise ConfigError(f"universe size must be >= 1, got {n}")
        self.cfg = cfg
        self.n = n
        cfg.warn_if_small(n)
        self.store = BlockStore(cfg.B)
        S = 1
        while cfg.B ** (2 ** S) < n:
            S += 1
        self.S = S
        self._cap = max(1 << 20, 2 * n)
        self._fen = _Fenwick(self._cap)
        self._stamp = [0] * (n + 1)
        self._clock = n
        self.tree_of = [0] * (n + 1)
        self._heaps: list[list[tuple[int, int]]] = [[] for _ in range(S + 1)]
        # initial recency rank equals the key; fill trees front to back
        for k in range(1, n + 1):
            self._stamp[k] = n - k + 1
            self._fen.add(n - k + 1, 1)
        self.trees: list[BTree | None] = [None] * (S + 1)
        start = 1
        for i in range(1, S + 1):
            cap = n - start + 1 if i == S else min(self.cap_hi(i), n - start + 1)
            ks = list(range(start, start + max(cap, 0)))
            self.trees[i] = BTree(self.store, ks, tier=i)
            for k in ks:
                self.tree_of[k] = i
                heapq.heappush(self._heaps[i], (self._stamp[k], k))
            start += len(ks)
            if start > n:
                for j in range(i + 1, S + 1):
                    self.trees[j] = BTree(self.store, (), tier=j)
                break

    def cap_hi(self, i: int) -> int:
        return 2 * self.cfg.B ** (2 ** (i + 1))

    def chunk(self, i: int) -> int:
        return self.cfg.B ** (2 ** (i + 1))

    def rank(self, key: int) -> int:
        """1 = most recently accessed."""
        return self.n - self._fen.prefix(self._stamp[key]) + 1

    def _tick(self) -> int:
        self._clock += 1
        if self._clock > self._cap:
            self._compact()
        return self._clock

    def _compact(self) -> None:
        order = sorted(range(1, self.n + 1), key=lambda k: self._stamp[k])
        self._fen = _Fenwick(self._cap)
        for pos, k in enumerate(order, start=1):
            self._stamp[k] = pos
            self._fen.add(pos, 1)
        self._clock = self.n
        self._heaps = [[] for _ in range(self.S + 1)]
        for k in range(1, self.n + 1):
            heapq.heappush(self._heaps[self.tree_of[k]], (self._stamp[k], k))

    def _oldest(self, i: int) -> tuple[int, int] | None:
        heap = self._heaps[i]
        while heap:
            stamp, key = heap[0]
            if self.tree_of[key] == i and self._stamp[key] == stamp:
                return stamp, key
            heapq.heappop(heap)
        return None

    def access(self, key: int) -> int:
        """Probe trees in order, promote the item, cascade overflow chunks."""
        if not 1 <= key <= self.n:
            raise KeyError(key)
        touched: set[int] = set()
        found_at = 0
        for i in range(1, self.S + 1):
            tree = self.trees[i]
            if not len(tree):
                continue
            found, path = tree.search(key)
            touched.update(path)
            if found:
                found_at = i
                break
        if not found_at:
            raise KeyError(key)
        self._fen.add(self._stamp[key], -1)
        self._stamp[key] = self._tick()
        self._fen.add(self._stamp[key], 1)
        if found_at != 1:
            touched.update(self.trees[found_at].delete(key))
            touched.update(self.trees[1].insert(key))
            self.tree_of[key] = 1
        heapq.heappush(self._heaps[1], (self._stamp[key], key))
        for i in range(1, self.S):
            tree = self.trees[i]
            while len(tree) > self.cap_hi(i):
                for _ in range(self.chunk(i)):
                    entry = self._oldest(i)
                    if entry is None:
                        break
                    _, victim = entry
                    touched.update(tree.delete(victim))
                    touched.update(self.trees[i + 1].insert(victim))
                    self.tree_of[victim] = i + 1
                    heapq.heappush(self._heaps[i + 1], (self._stamp[victim], victim))
        return self.store.charge(touched)

    def check_invariant(self) -> str | None:
        """Size and max-rank bands; the last non-empty tree is exempt from
        the size band (it absorbs whatever the geometric prefix cannot)."""
        last_nonempty = 0
        for i in range(1, self.S + 1):
            if len(self.trees[i]):
                last_nonempty = i
        for i in range(1, self.S + 1):
            tree = self.trees[i]
            if not len(tree):
                continue
            if i != last_nonempty:
                lo = self.cfg.B ** (2 ** i)
                if not lo <= len(tree) <= self.cap_hi(i):
                    return f"tree {i} has {len(tree)} items, band [{lo}, {self.cap_hi(i)}]"
            entry = self._oldest(i)
            if entry is not None:
                worst = self.rank(entry[1])
                cap = 4 * self.cfg.B ** (2 ** (i + 1))
                if worst > cap:
                    return f"tree {i} holds rank {worst}, cap {cap}"
        return None

    def validate(self) -> str | None:
        total = 0
        for i in range(1, self.S + 1):
            tree = self.trees[i]
            err = tree.validate()
            if err:
                return f"tree {i}: {err}"
            for k in tree.key_block:
                if self.tree_of[k] != i:
                    return f"key {k} marked in tree {self.tree_of[k]}, stored in {i}"
            total += len(tree)
        if total != self.n:
            return f"forest holds {total} keys, expected {self.n}"
        return self.check_invariant()
