import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from qalloc import allocation as alloc
from qalloc.allocation import (
    CostModel,
    LoadUnit,
    NodeSpec,
    Strategy,
    allocate,
    client_cost,
    largest_remainder,
    optimal_loads,
    poa_certificate,
    system_cost,
    verify_nash,
)
from qalloc.errors import InfeasibleError, SizeGuardError


def nodes_of(caps, a=None):
    a = a if a is not None else [1.0] * len(caps)
    return [NodeSpec(k, c, a[k]) for k, c in enumerate(caps)]


EXAMPLE_1 = [[5, 4, 0, 0], [3, 3, 0, 0]]


class TestOptimalLoads:
    def test_symmetric_pair(self):
        np.testing.assert_allclose(optimal_loads(10, nodes_of([10, 10])), [5, 5], atol=1e-9)

    def test_equal_split_below_caps(self):
        x = optimal_loads(15, nodes_of([5, 4, 5, 4]))
        np.testing.assert_allclose(x, [3.75] * 4, atol=1e-9)
        np.testing.assert_allclose(x, oracles.projected_gradient([1] * 4, [5, 4, 5, 4], 15), atol=1e-6)

    def test_unequal_coefficients(self):
        x = optimal_loads(8, nodes_of([10, 10], [1, 3]))
        np.testing.assert_allclose(x, [6, 2], atol=1e-9)

    # frozen from the projected-gradient oracle
    @pytest.mark.parametrize(
        "caps,a,demand,expected",
        [
            ([10, 3, 10], [1, 2, 4], 12, [7.2, 3.0, 1.8]),
            ([2, 8, 8, 8], [0.5, 2, 3, 1], 17, [2.0, 4.2, 2.8, 8.0]),
        ],
    )
    def test_capped_cases(self, caps, a, demand, expected):
        np.testing.assert_allclose(optimal_loads(demand, nodes_of(caps, a)), expected, atol=1e-8)

    def test_full_and_empty(self):
        nodes = nodes_of([3, 4])
        np.testing.assert_array_equal(optimal_loads(7, nodes), [3, 4])
        np.testing.assert_array_equal(optimal_loads(0, nodes), [0, 0])

    def test_infeasible_names_shortfall(self):
        with pytest.raises(InfeasibleError) as info:
            optimal_loads(12, nodes_of([5, 5]))
        assert info.value.shortfall == 2

    def test_percent_unit_folds_capacity(self):
        # f(100 x / m) = 100 a x / m, so small nodes are relatively dear
        nodes = nodes_of([10, 20])
        model = CostModel.for_nodes(nodes, LoadUnit.PERCENT)
        x = optimal_loads(12, nodes, model)
        np.testing.assert_allclose(x, oracles.projected_gradient([10.0, 5.0], [10, 20], 12), atol=1e-6)
        np.testing.assert_allclose(x, [4, 8], atol=1e-8)

    @given(st.data())
    @settings(max_examples=60, deadline=None)
    def test_kkt(self, data):
        q = data.draw(st.integers(1, 6))
        caps = data.draw(st.lists(st.integers(1, 30), min_size=q, max_size=q))
        a = data.draw(st.lists(st.floats(0.5, 10), min_size=q, max_size=q))
        demand = data.draw(st.integers(0, sum(caps)))
        x = optimal_loads(demand, nodes_of(caps, a))
        assert abs(x.sum() - demand) <= 1e-8
        assert (x >= -1e-12).all() and (x <= np.array(caps) + 1e-12).all()
        assert oracles.kkt_residual(x, a, caps) <= 1e-6


class TestLargestRemainder:
    def test_ties_go_to_lower_index(self):
        np.testing.assert_array_equal(largest_remainder([1.5, 1.5, 1.0], 4), [2, 1, 1])

    def test_respects_limits(self):
        np.testing.assert_array_equal(largest_remainder([2.9, 1.05], 4, [2, 5]), [2, 2])

    def test_sum_exact(self):
        v = largest_remainder([3.75] * 4, 15)
        assert v.sum() == 15 and sorted(v.tolist()) == [3, 4, 4, 4]


class TestAllocate:
    def test_single_node(self):
        for s in Strategy:
            np.testing.assert_array_equal(allocate([5], nodes_of([10]), strategy=s), [[5]])

    def test_sparse_then_cost_example(self):
        nodes = nodes_of([9] * 4, [100] * 4)
        mat = allocate([9, 6], nodes, strategy=Strategy.SPARSE_THEN_COST)
        np.testing.assert_array_equal(mat, [[9, 0, 0, 0], [0, 6, 0, 0]])
        # brute force: fewest nonzero cells, then lowest system cost
        best = min(
            (sum(x > 0 for r in m for x in r), oracles.eq2(m, [100] * 4))
            for m in oracles.all_matrices([9, 6], [9] * 4)
        )
        assert best == (int((mat > 0).sum()), system_cost(mat, nodes))

    def test_example_capacities_min_cost(self):
        nodes = nodes_of([5, 4, 5, 4], [100] * 4)
        mat = allocate([9, 6], nodes, strategy=Strategy.MIN_COST)
        alloc.check_allocation(mat, [9, 6], [5, 4, 5, 4])
        assert system_cost(mat, nodes) == oracles.brute_optimum([9, 6], [5, 4, 5, 4], [100] * 4) == 5700

    def test_infeasible(self):
        for s in Strategy:
            with pytest.raises(InfeasibleError):
                allocate([6, 6], nodes_of([5, 5]), strategy=s)

    @given(st.data())
    @settings(max_examples=80, deadline=None)
    def test_always_feasible(self, data):
        q = data.draw(st.integers(1, 6))
        caps = data.draw(st.lists(st.integers(1, 12), min_size=q, max_size=q))
        n = data.draw(st.integers(1, 5))
        demands = data.draw(st.lists(st.integers(1, 12), min_size=n, max_size=n))
        if sum(demands) > sum(caps):
            return
        a = data.draw(st.lists(st.sampled_from([1.0, 2.0, 5.0]), min_size=q, max_size=q))
        for s in Strategy:
            mat = allocate(demands, nodes_of(caps, a), strategy=s)
            assert (mat.sum(axis=1) == demands).all()
            assert (mat.sum(axis=0) <= caps).all()
            assert (mat >= 0).all()

    @given(st.data())
    @settings(max_examples=40, deadline=None)
    def test_scaling_keeps_argmin(self, data):
        q = data.draw(st.integers(1, 4))
        caps = data.draw(st.lists(st.integers(1, 8), min_size=q, max_size=q))
        n = data.draw(st.integers(1, 3))
        demands = data.draw(st.lists(st.integers(1, 6), min_size=n, max_size=n))
        if sum(demands) > sum(caps):
            return
        a = data.draw(st.lists(st.sampled_from([1.0, 2.0, 3.0]), min_size=q, max_size=q))
        nodes = nodes_of(caps, a)
        big = nodes_of(caps, [10 * x for x in a])
        for s in Strategy:
            m1 = allocate(demands, nodes, strategy=s)
            m10 = allocate(demands, big, strategy=s)
            np.testing.assert_array_equal(m1, m10)
            assert system_cost(m10, big) == pytest.approx(10 * system_cost(m1, nodes))
            for i in range(n):
                assert client_cost(m10, i, big) == pytest.approx(10 * client_cost(m1, i, nodes))


class TestCosts:
    def test_example_client_cost(self):
        nodes = nodes_of([9] * 4, [100] * 4)
        assert client_cost(EXAMPLE_1, 0, nodes) == 1500
        assert client_cost(EXAMPLE_1, 1, nodes) == 1500

    def test_example_system_cost(self):
        assert system_cost(EXAMPLE_1, nodes_of([9] * 4, [100] * 4)) == 11300

    def test_empty_row(self):
        assert client_cost([[0, 0], [2, 1]], 0, nodes_of([4, 4])) == 0

    def test_shared_node(self):
        nodes = nodes_of([10], [10])
        assert client_cost([[2], [3]], 0, nodes) == client_cost([[2], [3]], 1, nodes) == 50

    def test_system_cost_small(self):
        assert system_cost([[0, 0]], nodes_of([4, 4])) == 0
        assert system_cost([[4]], nodes_of([5], [3])) == 48

    def test_percent_unit(self):
        nodes = nodes_of([20], [1])
        model = CostModel.for_nodes(nodes, LoadUnit.PERCENT)
        assert client_cost([[15]], 0, nodes, model) == pytest.approx(75.0)

    def test_index_error(self):
        with pytest.raises(IndexError):
            client_cost(EXAMPLE_1, 2, nodes_of([9] * 4))

    @given(st.data())
    @settings(max_examples=60, deadline=None)
    def test_regrouping_identity(self, data):
        q = data.draw(st.integers(1, 5))
        n = data.draw(st.integers(1, 4))
        mat = np.array(data.draw(st.lists(st.lists(st.integers(0, 6), min_size=q, max_size=q),
                                          min_size=n, max_size=n)))
        a = data.draw(st.lists(st.integers(1, 9), min_size=q, max_size=q))
        caps = [max(1, int(c)) for c in mat.sum(axis=0)]
        nodes = nodes_of(caps, a)
        f = alloc.per_node_cost(mat, nodes)
        attributed = sum(int(mat[i, k]) * f[k] for i in range(n) for k in range(q))
        assert system_cost(mat, nodes) == pytest.approx(attributed, abs=0)


class TestNash:
    def test_single_client_single_node(self):
        check = verify_nash([[3]], 0, nodes_of([5]))
        assert check.is_equilibrium and check.best_deviation is None

    def test_shared_pair_is_not_equilibrium(self):
        # rows for client 0: (0,2) and (2,0) cost 3, (1,1) costs 4
        check = verify_nash([[1, 1], [1, 1]], 0, nodes_of([4, 4]))
        assert not check.is_equilibrium
        assert check.current_cost == 4 and check.best_cost == 3
        assert check.best_deviation in {(0, 2), (2, 0)}
        assert verify_nash([[1, 1], [1, 1]], 0, nodes_of([4, 4]), tolerance=1).is_equilibrium

    def test_concentrated_is_equilibrium(self):
        assert verify_nash([[2, 0], [0, 2]], 0, nodes_of([4, 4])).is_equilibrium

    def test_size_guard(self):
        with pytest.raises(SizeGuardError):
            verify_nash([[40] + [0] * 9], 0, nodes_of([40] * 10), limit=1000)

    def test_matches_brute_force(self):
        a = [1, 2, 3]
        mat = [[2, 1, 0], [0, 2, 2]]
        caps = [4, 4, 4]
        brute = min(oracles.eq1([list(r), mat[1]], 0, a)
                    for r in oracles.rows_of(3, [4, 2, 2]))
        check = verify_nash(mat, 0, nodes_of(caps, a))
        assert check.best_cost == brute


class TestPoA:
    def test_optimum_has_ratio_one(self):
        nodes = nodes_of([5, 4, 5, 4], [100] * 4)
        _, mat = alloc.exhaustive_optimum([9, 6], nodes)
        assert poa_certificate(mat, [9, 6], nodes) == 1.0

    def test_exhaustive_matches_brute(self):
        for demands, caps, a in [([3, 2], [3, 3, 3], [1, 1, 1]), ([3, 3], [6, 6], [1, 2])]:
            opt, mat = alloc.exhaustive_optimum(demands, nodes_of(caps, a))
            assert opt == oracles.brute_optimum(demands, caps, a)
            assert system_cost(mat, nodes_of(caps, a)) == opt

    @pytest.mark.parametrize(
        "demands,caps,a", [([3, 2], [3, 3, 3], [1, 1, 1]), ([3, 3], [6, 6], [1, 2])]
    )
    def test_small_bound(self, demands, caps, a):
        nodes = nodes_of(caps, a)
        mat = allocate(demands, nodes, strategy=Strategy.MIN_COST)
        ratio = poa_certificate(mat, demands, nodes)
        assert 1.0 <= ratio <= 4 / 3 + 1e-9

    def test_ratio_at_least_one(self):
        nodes = nodes_of([4, 4])
        assert poa_certificate([[4, 0], [0, 2]], [4, 2], nodes) >= 1.0

    def test_size_guard(self):
        with pytest.raises(SizeGuardError):
            alloc.exhaustive_optimum([20, 20], nodes_of([10] * 6), limit=1000)


class TestStabilizeRows:
    def test_keeps_columns(self):
        nodes = nodes_of([5, 6], [1, 2])
        mat = np.array([[4, 1], [0, 1]])
        out = alloc.stabilize_rows(mat, nodes)
        np.testing.assert_array_equal(out.sum(axis=0), mat.sum(axis=0))
        np.testing.assert_array_equal(out.sum(axis=1), mat.sum(axis=1))
        tol = 2
        assert all(verify_nash(out, i, nodes, tolerance=tol).is_equilibrium for i in range(2))

    def test_stable_input_unchanged(self):
        mat = np.array([[2, 0], [0, 2]])
        np.testing.assert_array_equal(alloc.stabilize_rows(mat, nodes_of([4, 4])), mat)
