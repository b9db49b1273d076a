import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from qalloc.allocation import NodeSpec
from qalloc.baselines import (
    RngStream,
    cut_weight,
    kernighan_lin_bisect,
    random_allocate,
    recursive_partition,
    round_robin_allocate,
)
from qalloc.circuits import InteractionGraph
from qalloc.errors import InfeasibleError


def nodes_of(caps):
    return [NodeSpec(k, c) for k, c in enumerate(caps)]


def cut_of(g, parts):
    where = {v: i for i, p in enumerate(parts) for v in p}
    return sum(w for (u, v), w in g.edge_weights.items() if where[u] != where[v])


class TestRngStream:
    def test_reproducible(self):
        a, b = RngStream(42), RngStream(42)
        assert [a.integer(0, 100) for _ in range(5)] == [b.integer(0, 100) for _ in range(5)]

    def test_children_differ(self):
        root = RngStream(1)
        assert root.child(0).integers(0, 10**6, 4) != root.child(1).integers(0, 10**6, 4)
        assert RngStream(1).child(3).integers(0, 99, 6) == RngStream(1, (3,)).integers(0, 99, 6)

    def test_inclusive_bounds(self):
        r = RngStream(0)
        assert {r.integer(9, 10) for _ in range(200)} == {9, 10}


class TestRoundRobin:
    def test_fits_first(self):
        assert round_robin_allocate([4], nodes_of([9, 9])).tolist() == [[4, 0]]

    def test_spill(self):
        assert round_robin_allocate([12], nodes_of([9, 9])).tolist() == [[9, 3]]

    def test_advances_per_circuit(self):
        assert round_robin_allocate([4, 4], nodes_of([9, 9])).tolist() == [[4, 0], [0, 4]]

    def test_cursor_and_wrap(self):
        assert round_robin_allocate([4, 4, 4], nodes_of([5, 5, 5]), cursor=2).tolist() == [
            [0, 0, 4], [4, 0, 0], [0, 4, 0]]

    def test_infeasible(self):
        with pytest.raises(InfeasibleError):
            round_robin_allocate([7, 7], nodes_of([6, 6]))


class TestRandom:
    def test_single_node_matches_round_robin(self):
        nodes = nodes_of([10])
        assert random_allocate([3, 4], nodes, RngStream(5)).tolist() == \
            round_robin_allocate([3, 4], nodes).tolist()

    def test_golden(self):
        # frozen from seed 0
        assert random_allocate([12], nodes_of([9, 9]), RngStream(0)).tolist() == [[3, 9]]
        assert random_allocate([5, 7, 3], nodes_of([4, 6, 5]), RngStream(0)).tolist() == [
            [0, 0, 5], [1, 6, 0], [3, 0, 0]]

    def test_exact_fill(self):
        mat = random_allocate([5, 6, 4], nodes_of([3, 7, 5]), RngStream(9))
        assert mat.sum(axis=0).tolist() == [3, 7, 5]

    @given(st.data())
    @settings(max_examples=80, deadline=None)
    def test_feasible_and_reproducible(self, data):
        q = data.draw(st.integers(1, 6))
        caps = data.draw(st.lists(st.integers(1, 10), min_size=q, max_size=q))
        n = data.draw(st.integers(1, 5))
        demands = data.draw(st.lists(st.integers(1, 10), min_size=n, max_size=n))
        if sum(demands) > sum(caps):
            return
        seed = data.draw(st.integers(0, 2**32))
        nodes = nodes_of(caps)
        for mat in (random_allocate(demands, nodes, RngStream(seed)), round_robin_allocate(demands, nodes)):
            assert mat.sum(axis=1).tolist() == demands
            assert (mat.sum(axis=0) <= caps).all() and (mat >= 0).all()
        np.testing.assert_array_equal(random_allocate(demands, nodes, RngStream(seed)),
                                      random_allocate(demands, nodes, RngStream(seed)))


class TestKernighanLin:
    def test_path6_every_start(self):
        g = InteractionGraph.path(6)
        for s in range(100):
            a, b = kernighan_lin_bisect(g, (3, 3), RngStream(s))
            assert len(a) == len(b) == 3
            assert cut_of(g, [a, b]) == 1

    def test_edgeless(self):
        a, b = kernighan_lin_bisect(InteractionGraph(5, {}), (2, 3), RngStream(0))
        assert len(a) == 2 and len(b) == 3

    def test_k4(self):
        g = InteractionGraph.complete(4)
        assert cut_of(g, kernighan_lin_bisect(g, (2, 2), RngStream(1))) == 4

    def test_unequal_sizes(self):
        g = InteractionGraph.path(10)
        for s in range(30):
            a, b = kernighan_lin_bisect(g, (7, 3), RngStream(s))
            assert (len(a), len(b)) == (7, 3)

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            kernighan_lin_bisect(InteractionGraph.path(4), (2, 3), RngStream(0))

    def test_never_worse_than_start(self):
        rng = np.random.default_rng(11)
        for s in range(40):
            n = int(rng.integers(2, 14))
            edges = {p: int(rng.integers(1, 5)) for p in itertools.combinations(range(n), 2)
                     if rng.random() < 0.3}
            g = InteractionGraph(n, edges)
            s1 = int(rng.integers(0, n + 1))
            start = RngStream(s).permutation(list(range(n)))
            before = cut_weight(g.adjacency(), start[:s1], start[s1:])
            a, b = kernighan_lin_bisect(g, (s1, n - s1), RngStream(s))
            assert cut_of(g, [a, b]) <= before


class TestRecursivePartition:
    def test_single_target(self):
        g = InteractionGraph.path(6)
        assert recursive_partition(g, [6], RngStream(0)) == [frozenset(range(6))]

    def test_path9_three_ways(self):
        g = InteractionGraph.path(9)
        edges = dict(g.edge_weights)
        assert oracles.min_cut_ordered(9, edges, [3, 3, 3]) == 2
        parts = recursive_partition(g, [3, 3, 3], RngStream(0))
        assert [len(p) for p in parts] == [3, 3, 3]
        assert cut_of(g, parts) == 2

    def test_isolate_one(self):
        rng = np.random.default_rng(2)
        for s in range(10):
            n = 7
            edges = {p: int(rng.integers(1, 4)) for p in itertools.combinations(range(n), 2)
                     if rng.random() < 0.5}
            g = InteractionGraph(n, edges)
            big, small = recursive_partition(g, [n - 1, 1], RngStream(s))
            (v,) = small
            assert cut_of(g, [big, small]) == g.weighted_degree(v)

    def test_sizes_in_order_with_zeros(self):
        g = InteractionGraph.complete(8)
        parts = recursive_partition(g, [0, 5, 0, 3], RngStream(4))
        assert [len(p) for p in parts] == [0, 5, 0, 3]
        assert set().union(*parts) == set(range(8))

    def test_mismatch(self):
        with pytest.raises(ValueError):
            recursive_partition(InteractionGraph.path(5), [2, 2], RngStream(0))
