"""Brute-force cross-checks of the heuristics on small random instances.

Used by ``qalloc oracle`` and the test-suite.
"""

from __future__ import annotations

from dataclasses import dataclass

from qalloc import allocation as alloc
from qalloc.allocation import CostModel, NodeSpec, Strategy
from qalloc.baselines import RngStream
from qalloc.circuits import InteractionGraph, subgraph_weight
from qalloc.grouping import SubsetMode, select_max_weight_subset


@dataclass
class SmallInstance:
    demands: list[int]
    nodes: list[NodeSpec]

    @property
    def model(self) -> CostModel:
        return CostModel.for_nodes(self.nodes)


def random_instance(
    rng: RngStream,
    max_clients: int = 3,
    max_nodes: int = 4,
    max_demand: int = 6,
    max_capacity: int = 6,
    coefficients=(1.0, 2.0, 3.0),
) -> SmallInstance:
    """Feasible random instance; node count and capacities are redrawn until the demands fit."""
    n = rng.integer(1, max_clients)
    demands = rng.integers(1, max_demand, n)
    if sum(demands) > max_nodes * max_capacity:
        raise ValueError("bounds admit no feasible instance for these demands")
    while True:
        q = rng.integer(1, max_nodes)
        caps = rng.integers(1, max_capacity, q)
        if sum(caps) >= sum(demands):
            break
    a = [coefficients[rng.index(len(coefficients))] for _ in range(q)]
    return SmallInstance(demands, [NodeSpec(k, c, a[k]) for k, c in enumerate(caps)])


def random_graph(rng: RngStream, max_vertices: int = 10, max_weight: int = 5, density: float = 0.4):
    n = rng.integer(2, max_vertices)
    weights = {}
    for u in range(n):
        for v in range(u + 1, n):
            if rng.index(1000) < density * 1000:
                weights[(u, v)] = rng.integer(1, max_weight)
    return InteractionGraph(n, weights)


def subset_report(seed: int, count: int):
    """(greedy weight, exhaustive weight) for every ``m`` of ``count`` random graphs."""
    rng = RngStream(seed)
    out = []
    for t in range(count):
        g = random_graph(rng.child(t))
        for m in range(1, g.num_vertices + 1):
            greedy = subgraph_weight(g, select_max_weight_subset(g, m, SubsetMode.GREEDY))
            best = subgraph_weight(g, select_max_weight_subset(g, m, SubsetMode.EXHAUSTIVE))
            out.append((t, g.num_vertices, m, greedy, best))
    return out


def allocation_report(seed: int, count: int):
    """(instance, MinCost cost, exhaustive optimum, PoA ratio) per random instance."""
    rng = RngStream(seed)
    out = []
    for t in range(count):
        inst = random_instance(rng.child(t), max_clients=2, max_nodes=3, max_demand=5, max_capacity=5)
        mat = alloc.allocate(inst.demands, inst.nodes, inst.model, Strategy.MIN_COST)
        cost = alloc.system_cost(mat, inst.nodes, inst.model)
        opt, _ = alloc.exhaustive_optimum(inst.demands, inst.nodes, inst.model)
        ratio = alloc.poa_certificate(mat, inst.demands, inst.nodes, inst.model)
        out.append((inst, cost, opt, ratio))
    return out


def nash_report(seed: int, count: int):
    """Worst unilateral improvement per MinCost allocation, against its tolerance."""
    rng = RngStream(seed)
    out = []
    for t in range(count):
        inst = random_instance(rng.child(t))
        mat = alloc.allocate(inst.demands, inst.nodes, inst.model, Strategy.MIN_COST)
        tol = max(inst.model.coefficients)
        checks = [alloc.verify_nash(mat, i, inst.nodes, inst.model, tol) for i in range(len(inst.demands))]
        worst = max(checks, key=lambda c: c.improvement)
        out.append((inst, mat, worst, tol))
    return out
