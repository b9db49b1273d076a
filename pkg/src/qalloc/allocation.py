"""Qubit allocation game: cost functions, optimal loads and allocation strategies.

Each node ``k`` charges ``f_k(x) = a_k * x`` where ``x`` is either the raw
qubit load or the load as a percentage of capacity. A client pays ``f_k`` at
every node it touches; the provider's system cost is ``sum_k X_k f_k(X_k)``
over the column loads ``X_k`` of the allocation matrix.

Allocation matrices are plain ``(n_clients, n_nodes)`` int64 arrays.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from qalloc.errors import InfeasibleError, SizeGuardError

ENUMERATION_LIMIT = 10**6


class LoadUnit(enum.Enum):
    RAW = "raw"
    PERCENT = "percent"


class Strategy(enum.Enum):
    MIN_COST = "min-cost"
    SPARSE_THEN_COST = "sparse-then-cost"
    COST_THEN_SPARSE = "cost-then-sparse"


@dataclass(frozen=True)
class NodeSpec:
    id: int
    capacity: int
    cost_coefficient: float = 1.0

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError(f"node {self.id}: capacity must be >= 1, got {self.capacity}")
        if not self.cost_coefficient > 0:
            raise ValueError(f"node {self.id}: cost coefficient must be > 0")


@dataclass(frozen=True)
class CostModel:
    """Per-node linear costs plus the unit in which load is measured."""

    coefficients: tuple[float, ...]
    load_unit: LoadUnit = LoadUnit.RAW

    @classmethod
    def for_nodes(cls, nodes: Sequence[NodeSpec], load_unit: LoadUnit = LoadUnit.RAW) -> "CostModel":
        return cls(tuple(float(n.cost_coefficient) for n in nodes), load_unit)

    def scaled(self, factor: float) -> "CostModel":
        return CostModel(tuple(a * factor for a in self.coefficients), self.load_unit)

    def node_cost(self, loads, capacities) -> np.ndarray:
        """``f_k(X_k)`` for every node."""
        a = np.asarray(self.coefficients, dtype=float)
        x = np.asarray(loads, dtype=float)
        if self.load_unit is LoadUnit.PERCENT:
            x = 100.0 * x / np.asarray(capacities, dtype=float)
        return a * x

    def quadratic_coefficients(self, capacities) -> np.ndarray:
        """``c_k`` such that ``X_k f_k(X_k) = c_k X_k**2``."""
        a = np.asarray(self.coefficients, dtype=float)
        if self.load_unit is LoadUnit.PERCENT:
            return 100.0 * a / np.asarray(capacities, dtype=float)
        return a


def capacities_of(nodes: Sequence[NodeSpec]) -> np.ndarray:
    return np.array([n.capacity for n in nodes], dtype=np.int64)


def _default_model(nodes, model):
    if model is None:
        return CostModel.for_nodes(nodes)
    if len(model.coefficients) != len(nodes):
        raise ValueError(
            f"cost model has {len(model.coefficients)} coefficients for {len(nodes)} nodes"
        )
    return model


def check_feasible(total_demand, capacities) -> None:
    total_cap = int(np.sum(capacities))
    if total_demand > total_cap:
        raise InfeasibleError(total_demand, total_cap)


# --- continuous optimum ----------------------------------------------------


def optimal_loads(
    total_demand: float,
    nodes: Sequence[NodeSpec],
    model: Optional[CostModel] = None,
    tol: float = 1e-9,
) -> np.ndarray:
    """Minimize ``sum_k c_k X_k**2`` s.t. ``sum X = total_demand``, ``0 <= X <= m``.

    KKT gives ``X_k = clip(lam / (2 c_k), 0, m_k)``; ``lam`` is found by
    bisection on the monotone map ``lam -> sum_k X_k(lam)``.
    """
    model = _default_model(nodes, model)
    caps = capacities_of(nodes).astype(float)
    if total_demand < 0:
        raise ValueError("total demand must be non-negative")
    check_feasible(total_demand, caps)
    c = model.quadratic_coefficients(caps)
    if total_demand == 0:
        return np.zeros_like(caps)
    if total_demand >= caps.sum():
        return caps.copy()

    lo, hi = 0.0, float(np.max(2.0 * c * caps))
    loads = np.clip(hi / (2.0 * c), 0.0, caps)
    for _ in range(400):
        lam = 0.5 * (lo + hi)
        loads = np.clip(lam / (2.0 * c), 0.0, caps)
        gap = loads.sum() - total_demand
        if abs(gap) <= tol:
            break
        if gap < 0:
            lo = lam
        else:
            hi = lam
        if hi - lo <= 1e-15 * hi:
            break
    return loads


def largest_remainder(values, total: int, limits=None) -> np.ndarray:
    """Round non-negative reals to integers summing to ``total``.

    Floors first, then hands out the missing units by descending fractional
    part (lower index wins ties), never exceeding ``limits``.
    """
    vals = np.asarray(values, dtype=float)
    base = np.floor(vals + 1e-9).astype(np.int64)
    base = np.maximum(base, 0)
    if limits is not None:
        base = np.minimum(base, np.asarray(limits, dtype=np.int64))
    missing = int(total) - int(base.sum())
    if missing < 0:
        raise ValueError(f"floors already exceed total {total}")
    remainders = vals - base
    order = sorted(range(len(vals)), key=lambda k: (-remainders[k], k))
    for k in order:
        if missing == 0:
            break
        if limits is not None and base[k] >= limits[k]:
            continue
        base[k] += 1
        missing -= 1
    if missing:
        raise InfeasibleError(int(total), int(total) - missing)
    return base


def integer_budgets(total_demand: int, nodes, model=None) -> np.ndarray:
    """Integer column loads closest to the continuous optimum."""
    loads = optimal_loads(total_demand, nodes, model)
    return largest_remainder(loads, total_demand, capacities_of(nodes))


# --- strategies ------------------------------------------------------------


def _greedy_fill(demands, budgets, node_order) -> np.ndarray:
    mat = np.zeros((len(demands), len(budgets)), dtype=np.int64)
    left = np.array(budgets, dtype=np.int64)
    for j, r in enumerate(demands):
        need = int(r)
        for k in node_order:
            if need == 0:
                break
            take = min(need, int(left[k]))
            mat[j, k] += take
            left[k] -= take
            need -= take
        if need:
            raise InfeasibleError(int(sum(demands)), int(np.sum(budgets)))
    return mat


def _fewest_nodes(need: int, residuals: Sequence[int]) -> int:
    total = 0
    for count, r in enumerate(sorted(residuals, reverse=True), start=1):
        total += r
        if total >= need:
            return count
    raise InfeasibleError(need, total)


def _sparse_fill(demands, limits, coefficients) -> np.ndarray:
    """Place each client (largest first) on as few nodes as possible.

    Among the nodes that still allow finishing within that minimum count, the
    one with the smallest ``a_k * (load_k + share)`` is filled first.
    """
    n, q = len(demands), len(limits)
    limits = np.asarray(limits, dtype=np.int64)
    load = np.zeros(q, dtype=np.int64)
    mat = np.zeros((n, q), dtype=np.int64)
    for j in sorted(range(n), key=lambda j: (-demands[j], j)):
        need = int(demands[j])
        if need == 0:
            continue
        slots = _fewest_nodes(need, list(limits - load))
        while need > 0:
            open_nodes = [k for k in range(q) if mat[j, k] == 0 and limits[k] > load[k]]
            best = None
            for k in open_nodes:
                share = min(int(limits[k] - load[k]), need)
                rest = need - share
                if rest:
                    others = sorted((int(limits[i] - load[i]) for i in open_nodes if i != k), reverse=True)
                    if sum(others[: slots - 1]) < rest:
                        continue
                key = (coefficients[k] * (load[k] + share), k)
                if best is None or key < best[0]:
                    best = (key, k, share)
            _, k, share = best
            mat[j, k] = share
            load[k] += share
            need -= share
            slots -= 1
    return mat


BEST_FIT_LIMIT = 50_000


def _best_fit_fill(demands, limits) -> np.ndarray:
    """Pack each client (largest first) into the fewest nodes, wasting the least.

    Among all minimum-size node sets that can hold the client, the one whose
    residual room exceeds the demand by the least is used (ties: larger
    residuals, then lower indices); its nodes are filled largest first.
    """
    n, q = len(demands), len(limits)
    limits = np.asarray(limits, dtype=np.int64)
    load = np.zeros(q, dtype=np.int64)
    mat = np.zeros((n, q), dtype=np.int64)
    for j in sorted(range(n), key=lambda j: (-demands[j], j)):
        need = int(demands[j])
        if need == 0:
            continue
        room = [int(x) for x in limits - load]
        slots = _fewest_nodes(need, room)
        open_nodes = [k for k in range(q) if room[k] > 0]
        if math.comb(len(open_nodes), slots) <= BEST_FIT_LIMIT:
            best = None
            for combo in itertools.combinations(open_nodes, slots):
                total = sum(room[k] for k in combo)
                if total < need:
                    continue
                key = (total - need, sorted((-room[k] for k in combo)), combo)
                if best is None or key < best:
                    best = key
            chosen = best[2]
        else:
            chosen = sorted(open_nodes, key=lambda k: (-room[k], k))[:slots]
        for k in sorted(chosen, key=lambda k: (-room[k], k)):
            take = min(need, room[k])
            mat[j, k] = take
            load[k] += take
            need -= take
    return mat


def allocate(
    demands: Sequence[int],
    nodes: Sequence[NodeSpec],
    model: Optional[CostModel] = None,
    strategy: Strategy = Strategy.SPARSE_THEN_COST,
    refine: bool = True,
) -> np.ndarray:
    """Build an integer allocation matrix (rows = clients, columns = nodes).

    ``MIN_COST`` rounds the water-filling loads by largest remainder and fills
    client rows into those column budgets, cheapest node first. With
    ``refine`` the rows are then rearranged (same columns, same cost) when a
    client could gain more than one qubit's worth by deviating; see
    :func:`stabilize_rows`.
    ``SPARSE_THEN_COST`` ignores the optimum and packs every client onto the
    fewest nodes, breaking choices by marginal cost.
    ``COST_THEN_SPARSE`` packs clients onto few nodes too, but inside the
    ``MIN_COST`` column budgets, so its system cost equals ``MIN_COST``'s.
    """
    model = _default_model(nodes, model)
    demands = [int(r) for r in demands]
    if any(r < 0 for r in demands):
        raise ValueError("demands must be non-negative")
    caps = capacities_of(nodes)
    check_feasible(sum(demands), caps)
    a = list(model.coefficients)

    if strategy is Strategy.SPARSE_THEN_COST:
        mat = _sparse_fill(demands, caps, a)
    else:
        budgets = integer_budgets(sum(demands), nodes, model)
        if strategy is Strategy.MIN_COST:
            order = sorted(range(len(nodes)), key=lambda k: (a[k], k))
            mat = _greedy_fill(demands, budgets, order)
            if refine:
                mat = stabilize_rows(mat, nodes, model)
        elif strategy is Strategy.COST_THEN_SPARSE:
            mat = _best_fit_fill(demands, budgets)
        else:
            raise ValueError(f"unknown strategy {strategy!r}")
    check_allocation(mat, demands, caps)
    return mat


def check_allocation(mat, demands, capacities) -> None:
    """Raise ``ValueError`` unless rows meet demand exactly and columns fit capacity."""
    mat = np.asarray(mat)
    if mat.shape != (len(demands), len(capacities)):
        raise ValueError(f"matrix shape {mat.shape} != ({len(demands)}, {len(capacities)})")
    if (mat < 0).any():
        raise ValueError("allocation has negative entries")
    rows = mat.sum(axis=1)
    bad = [j for j in range(len(demands)) if rows[j] != demands[j]]
    if bad:
        raise ValueError(f"row sums {rows[bad].tolist()} != demands for clients {bad}")
    cols = mat.sum(axis=0)
    over = [k for k in range(len(capacities)) if cols[k] > capacities[k]]
    if over:
        raise ValueError(f"nodes {over} over capacity")


# --- costs -----------------------------------------------------------------


def per_node_cost(mat, nodes, model=None) -> np.ndarray:
    model = _default_model(nodes, model)
    return model.node_cost(np.asarray(mat).sum(axis=0), capacities_of(nodes))


def client_cost(mat, i: int, nodes, model=None) -> float:
    """Client ``i`` pays the full node cost at every node it occupies."""
    mat = np.asarray(mat)
    if not 0 <= i < mat.shape[0]:
        raise IndexError(f"client index {i} out of range for {mat.shape[0]} clients")
    costs = per_node_cost(mat, nodes, model)
    return float(costs[mat[i] > 0].sum())


def system_cost(mat, nodes, model=None) -> float:
    mat = np.asarray(mat)
    loads = mat.sum(axis=0)
    return float(np.dot(loads, per_node_cost(mat, nodes, model)))


# --- equilibrium and PoA checks -------------------------------------------


def _bounded_compositions(total: int, bounds: Sequence[int]):
    """All integer vectors ``0 <= x <= bounds`` summing to ``total``, lexicographic."""
    q = len(bounds)
    suffix = [0] * (q + 1)
    for k in range(q - 1, -1, -1):
        suffix[k] = suffix[k + 1] + bounds[k]

    def rec(k, left, prefix):
        if k == q - 1:
            if left <= bounds[k]:
                yield prefix + (left,)
            return
        lo = max(0, left - suffix[k + 1])
        for x in range(lo, min(bounds[k], left) + 1):
            yield from rec(k + 1, left - x, prefix + (x,))

    if q == 0:
        if total == 0:
            yield ()
        return
    if total > suffix[0]:
        return
    yield from rec(0, total, ())


def composition_count(total: int, parts: int) -> int:
    return math.comb(total + parts - 1, parts - 1)


@dataclass(frozen=True)
class NashCheck:
    is_equilibrium: bool
    current_cost: float
    best_cost: float
    best_deviation: Optional[tuple[int, ...]]

    @property
    def improvement(self) -> float:
        return self.current_cost - self.best_cost


def verify_nash(
    mat,
    i: int,
    nodes: Sequence[NodeSpec],
    model: Optional[CostModel] = None,
    tolerance: float = 0.0,
    limit: int = ENUMERATION_LIMIT,
) -> NashCheck:
    """Check client ``i`` against every unilateral change of its own row.

    Rows are enumerated exhaustively within the capacity the other clients
    leave free. A deviation counts only if it lowers the client's cost by more
    than ``tolerance``.
    """
    mat = np.asarray(mat, dtype=np.int64)
    if not 0 <= i < mat.shape[0]:
        raise IndexError(f"client index {i} out of range for {mat.shape[0]} clients")
    model = _default_model(nodes, model)
    caps = capacities_of(nodes)
    r = int(mat[i].sum())
    count = composition_count(r, len(nodes))
    if count > limit:
        raise SizeGuardError(f"deviations of client {i}", count, limit)

    current = client_cost(mat, i, nodes, model)
    others = mat.sum(axis=0) - mat[i]
    free = [int(x) for x in caps - others]
    best_cost, best_row = current, None
    trial = mat.copy()
    for row in _bounded_compositions(r, free):
        trial[i] = row
        cost = client_cost(trial, i, nodes, model)
        if cost < best_cost - 1e-12 * max(1.0, abs(best_cost)):
            best_cost, best_row = cost, row
    ok = best_row is None or current - best_cost <= tolerance + 1e-9 * max(1.0, abs(current))
    return NashCheck(ok, current, best_cost, best_row)


REFINE_LIMIT = 20_000


def _worst_gain(mat, nodes, model) -> float:
    return max(verify_nash(mat, i, nodes, model).improvement for i in range(mat.shape[0]))


def stabilize_rows(mat, nodes, model=None, limit: int = REFINE_LIMIT) -> np.ndarray:
    """Rearrange rows within fixed column sums to minimise the best unilateral gain.

    ``mat`` is returned unchanged when no client gains more than
    ``max_k a_k`` by deviating, or when the arrangements to search exceed
    ``limit``. Otherwise the arrangement with the smallest worst-case gain
    wins, ties going to the lexicographically first one.
    """
    model = _default_model(nodes, model)
    mat = np.asarray(mat, dtype=np.int64)
    tol = max(model.coefficients)
    budgets = [int(x) for x in mat.sum(axis=0)]
    demands = [int(r) for r in mat.sum(axis=1)]
    # The last row is fixed by the column sums.
    count = 1
    for r in demands[:-1]:
        count *= composition_count(r, len(budgets))
        if count > limit:
            return mat
    if composition_count(max(demands), len(budgets)) > ENUMERATION_LIMIT:
        return mat
    current = _worst_gain(mat, nodes, model)
    if current <= tol + 1e-9:
        return mat

    best_gain, best = current, mat

    def rec(j, left, rows):
        nonlocal best_gain, best
        if j == len(demands) - 1:
            if sum(left) != demands[j]:
                return
            cand = np.array(rows + [left], dtype=np.int64)
            gain = _worst_gain(cand, nodes, model)
            if gain < best_gain - 1e-9:
                best_gain, best = gain, cand
            return
        for row in _bounded_compositions(demands[j], left):
            rec(j + 1, [x - y for x, y in zip(left, row)], rows + [list(row)])

    rec(0, budgets, [])
    return best


def exhaustive_optimum(
    demands: Sequence[int],
    nodes: Sequence[NodeSpec],
    model: Optional[CostModel] = None,
    limit: int = ENUMERATION_LIMIT,
) -> tuple[float, np.ndarray]:
    """Minimum system cost over every feasible integer allocation matrix.

    Matrices are enumerated row by row; rows leading to the same column loads
    are merged since the cost depends on those loads alone. Returns the
    optimum and a lexicographically first matrix achieving it.
    """
    model = _default_model(nodes, model)
    caps = capacities_of(nodes)
    demands = [int(r) for r in demands]
    check_feasible(sum(demands), caps)
    count = 1
    for r in demands:
        count *= composition_count(r, len(nodes))
    if count > limit:
        raise SizeGuardError("allocation matrices", count, limit)

    frontier: dict[tuple[int, ...], tuple[tuple[int, ...], ...]] = {tuple([0] * len(nodes)): ()}
    for r in demands:
        nxt: dict[tuple[int, ...], tuple[tuple[int, ...], ...]] = {}
        for loads, rows in frontier.items():
            free = [int(c - x) for c, x in zip(caps, loads)]
            for row in _bounded_compositions(r, free):
                key = tuple(x + y for x, y in zip(loads, row))
                cand = rows + (row,)
                if key not in nxt or cand < nxt[key]:
                    nxt[key] = cand
        frontier = nxt

    best = None
    for loads, rows in sorted(frontier.items(), key=lambda kv: kv[1]):
        mat = np.array(rows, dtype=np.int64).reshape(len(demands), len(nodes))
        cost = system_cost(mat, nodes, model)
        if best is None or cost < best[0] - 1e-12 * max(1.0, abs(best[0])):
            best = (cost, mat)
    return best


def poa_certificate(
    mat_eq,
    demands: Sequence[int],
    nodes: Sequence[NodeSpec],
    model: Optional[CostModel] = None,
    limit: int = ENUMERATION_LIMIT,
) -> float:
    """System cost of ``mat_eq`` divided by the exhaustive integer optimum."""
    opt, _ = exhaustive_optimum(demands, nodes, model, limit)
    cost = system_cost(mat_eq, nodes, model)
    if opt == 0:
        return 1.0 if cost == 0 else math.inf
    return cost / opt


def iter_instances(max_clients, max_nodes, max_demand, max_capacity):
    """Every (demands, capacities) pair within the bounds that is feasible."""
    for n in range(1, max_clients + 1):
        for q in range(1, max_nodes + 1):
            for caps in itertools.product(range(1, max_capacity + 1), repeat=q):
                for dem in itertools.product(range(1, max_demand + 1), repeat=n):
                    if sum(dem) <= sum(caps):
                        yield list(dem), list(caps)
