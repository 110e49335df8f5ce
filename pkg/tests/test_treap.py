"""Treap construction, mutation, and invariant tests.

The reference for every structural check is ``Treap.build`` (recursive
max-priority construction) together with ``naive_depths``; the array-based
spine builder and the incremental operations must agree with them node for
node because distinct priorities admit exactly one treap.
"""

import itertools
import random

import pytest

from conftest import random_priorities
from scoretreap.errors import DuplicateKeyError
from scoretreap.oracle import naive_depths
from scoretreap.priorities import RandomStream
from scoretreap.treap import Priority, Treap

THREE = {1: Priority(0, 0.9), 2: Priority(0, 0.5), 3: Priority(0, 0.7)}


def shape(t: Treap) -> list[tuple[int, int, int, int]]:
    """Canonical (key, parent, left, right) table for tree equality checks."""
    return [(k, t.parent_of(k), t.left_of(k), t.right_of(k)) for k in sorted(t.keys())]


class TestBuild:
    def test_three_key_example(self):
        t = Treap.build(THREE)
        assert t.root == 1
        assert t.right_of(1) == 3
        assert t.left_of(3) == 2
        assert t.depths() == {1: 1, 3: 2, 2: 3}
        assert t.validate() is None

    def test_singleton(self):
        t = Treap.build({1: Priority(0, 0.5)})
        assert t.root == 1
        assert t.size == 1
        assert t.depth(1) == 1

    def test_decreasing_priorities_make_a_right_chain(self):
        n = 12
        pris = {k: Priority(0, 1.0 - k / (n + 1)) for k in range(1, n + 1)}
        t = Treap.build(pris)
        for k in range(1, n + 1):
            assert t.depth(k) == k
            assert t.left_of(k) == 0

    def test_build_matches_naive_depths(self, py_rng):
        for _ in range(200):
            n = py_rng.randint(1, 10)
            pris = random_priorities(py_rng, n)
            t = Treap.build(pris)
            assert t.validate() is None
            assert t.depths() == naive_depths(pris)

    def test_build_arrays_matches_build(self, py_rng):
        for _ in range(100):
            n = py_rng.randint(1, 40)
            pris = random_priorities(py_rng, n)
            via_arrays = Treap.build_arrays(
                [pris[k].tier for k in range(1, n + 1)],
                [pris[k].offset for k in range(1, n + 1)],
            )
            assert shape(via_arrays) == shape(Treap.build(pris))

    def test_build_arrays_rejects_closed_interval_offsets(self):
        with pytest.raises(ValueError):
            Treap.build_arrays([0, 0], [0.5, 0.0])
        with pytest.raises(ValueError):
            Treap.build_arrays([0], [1.0])

    def test_equal_tier_and_offset_resolved_by_smaller_key(self):
        pris = {1: Priority(2, 0.25), 2: Priority(2, 0.25), 3: Priority(2, 0.25)}
        t = Treap.build(pris)
        assert t.root == 1
        assert t.depth(1) == 1 and t.depth(2) == 2 and t.depth(3) == 3


class TestInsertDelete:
    def test_insert_into_empty(self):
        t = Treap(5)
        rot = t.insert(3, Priority(0, 0.5))
        assert rot == 0
        assert t.root == 3 and t.size == 1

    def test_duplicate_insert_rejected(self):
        t = Treap(5)
        t.insert(3, Priority(0, 0.5))
        with pytest.raises(DuplicateKeyError):
            t.insert(3, Priority(0, 0.25))

    def test_insertion_order_invariance(self, py_rng):
        # Uniqueness: all insertion orders for n <= 4, sampled orders beyond.
        for _ in range(120):
            n = py_rng.randint(2, 8)
            pris = random_priorities(py_rng, n)
            want = shape(Treap.build(pris))
            keys = list(pris)
            if n <= 4:
                orders = list(itertools.permutations(keys))
            else:
                orders = [tuple(py_rng.sample(keys, n)) for _ in range(12)]
            for order in orders:
                t = Treap(n)
                for k in order:
                    t.insert(k, pris[k])
                assert shape(t) == want

    def test_max_priority_insert_becomes_root(self, py_rng):
        for _ in range(60):
            n = py_rng.randint(2, 8)
            pris = random_priorities(py_rng, n - 1)
            t = Treap(n)
            for k, p in pris.items():
                t.insert(k, p)
            # key n goes in as the right-spine leaf, then rotates to the root;
            # one rotation per node it passes, i.e. the old spine length
            spine, node = 0, t.root
            while node:
                spine += 1
                node = t.right_of(node)
            rot = t.insert(n, Priority(-1, 0.5))
            assert t.root == n
            assert rot == spine

    def test_delete_root_of_two_node_tree(self):
        t = Treap.build({1: Priority(0, 0.9), 2: Priority(0, 0.3)})
        t.delete(1)
        assert t.root == 2 and t.size == 1
        assert t.validate() is None

    def test_delete_matches_rebuild_without_key(self, py_rng):
        for _ in range(150):
            n = py_rng.randint(1, 8)
            pris = random_priorities(py_rng, n)
            for k in pris:
                t = Treap.build(pris)
                t.delete(k)
                rest = {j: p for j, p in pris.items() if j != k}
                assert t.depths() == naive_depths(rest)
                assert t.validate() is None

    def test_delete_then_reinsert_restores_tree(self, py_rng):
        for _ in range(80):
            n = py_rng.randint(1, 10)
            pris = random_priorities(py_rng, n)
            t = Treap.build(pris)
            want = shape(t)
            k = py_rng.choice(list(pris))
            t.delete(k)
            t.insert(k, pris[k])
            assert shape(t) == want

    def test_absent_key_operations_raise(self):
        t = Treap.build(THREE)
        for op in (t.delete, t.access, t.depth):
            with pytest.raises(KeyError):
                op(9)
        with pytest.raises(KeyError):
            t.update_priority(9, Priority(0, 0.1))


class TestAccess:
    def test_access_root_costs_one(self):
        t = Treap.build(THREE)
        assert t.access(1) == 1

    def test_access_on_chain_costs_key(self):
        n = 9
        pris = {k: Priority(0, 1.0 - k / (n + 1)) for k in range(1, n + 1)}
        t = Treap.build(pris)
        for k in range(1, n + 1):
            assert t.access(k) == k

    def test_three_key_access_example(self):
        assert Treap.build(THREE).access(2) == 3

    def test_access_accumulates_nodes_touched(self):
        t = Treap.build(THREE)
        t.ledger.reset()
        total = t.access(2) + t.access(1) + t.access(3)
        assert t.ledger.nodes_touched == total == 3 + 1 + 2


class TestAncestor:
    def test_three_key_examples(self):
        t = Treap.build(THREE)
        assert t.is_ancestor(3, 2)
        assert t.is_ancestor(1, 2) and t.is_ancestor(1, 3)
        assert not t.is_ancestor(2, 3)

    def test_interval_max_agrees_with_parent_walk(self, py_rng):
        def walk_ancestor(t: Treap, x: int, y: int) -> bool:
            node = t.parent_of(y)
            while node:
                if node == x:
                    return True
                node = t.parent_of(node)
            return False

        for _ in range(100):
            n = py_rng.randint(2, 10)
            pris = random_priorities(py_rng, n)
            t = Treap.build(pris)
            for x in range(1, n + 1):
                for y in range(1, n + 1):
                    if x == y:
                        continue
                    assert t.is_ancestor(x, y) == walk_ancestor(t, x, y)


class TestUpdatePriority:
    def test_same_priority_is_a_no_op(self):
        t = Treap.build(THREE)
        want = shape(t)
        assert t.update_priority(2, THREE[2]) == 0
        assert shape(t) == want

    def test_raise_to_maximum_moves_key_to_root(self, py_rng):
        for _ in range(40):
            n = py_rng.randint(2, 10)
            t = Treap.build(random_priorities(py_rng, n))
            k = py_rng.randint(1, n)
            t.update_priority(k, Priority(-5, 0.5))
            assert t.root == k
            assert t.validate() is None

    def test_update_matches_delete_plus_insert(self, py_rng):
        for _ in range(150):
            n = py_rng.randint(1, 8)
            pris = random_priorities(py_rng, n)
            k = py_rng.choice(list(pris))
            new = Priority(py_rng.randint(0, 3), py_rng.random())
            t = Treap.build(pris)
            t.update_priority(k, new)
            want = naive_depths({**pris, k: new})
            assert t.depths() == want
            # the reinsert flavor must land on the same unique tree
            t2 = Treap.build(pris)
            t2.update_priority(k, new, reinsert=True)
            assert t2.depths() == want

    def test_rotation_count_equals_depth_change(self, py_rng):
        for _ in range(300):
            n = py_rng.randint(2, 8)
            t = Treap.build(random_priorities(py_rng, n))
            k = py_rng.randint(1, n)
            before = t.depth(k)
            rot = t.update_priority(k, Priority(py_rng.randint(0, 3), py_rng.random()))
            assert rot == abs(before - t.depth(k))

    def test_rotations_counted_in_ledger(self, py_rng):
        t = Treap.build(random_priorities(py_rng, 16))
        t.ledger.reset()
        rot = t.update_priority(7, Priority(-1, 0.5))
        assert t.ledger.rotations == rot > 0


class TestValidate:
    def test_fresh_tree_is_ok(self, py_rng):
        t = Treap.build(random_priorities(py_rng, 20))
        assert t.validate() is None

    def test_swapped_children_reported_as_bst_violation(self):
        t = Treap.build({1: Priority(0, 0.9), 2: Priority(0, 0.8), 3: Priority(0, 0.7)})
        # chain 1 -> 2 -> 3; graft 3 as left child of 1 to break key order
        t._right[2] = 0
        t._right[1] = 0
        t._left[1] = 3
        t._parent[3] = 1
        report = t.validate()
        assert report is not None and "order" in report

    def test_child_priority_above_parent_reported(self):
        t = Treap.build({1: Priority(1, 0.5), 2: Priority(2, 0.5)})
        t._tier[2] = 0  # now 2 outranks its parent
        report = t.validate()
        assert report is not None and "heap" in report


class TestLedger:
    def test_counters_monotone_and_resettable(self, py_rng):
        t = Treap.build(random_priorities(py_rng, 12))
        t.ledger.reset()
        seen = (0, 0, 0)
        for k in (3, 7, 1, 12, 5):
            t.access(k)
            now = (t.ledger.comparisons, t.ledger.rotations, t.ledger.nodes_touched)
            assert now >= seen
            seen = now
        t.ledger.reset()
        assert (t.ledger.comparisons, t.ledger.rotations, t.ledger.nodes_touched) == (0, 0, 0)


def test_deterministic_build_across_identical_streams():
    n = 200
    a = RandomStream(99)
    b = RandomStream(99)
    offs_a = [a.next_offset() for _ in range(n)]
    offs_b = [b.next_offset() for _ in range(n)]
    assert offs_a == offs_b
    t1 = Treap.build_arrays([0] * n, offs_a)
    t2 = Treap.build_arrays([0] * n, offs_b)
    assert shape(t1) == shape(t2)
