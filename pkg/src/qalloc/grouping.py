"""Turn allocation rows into concrete qubit groups that keep gates local.

For every client row of an allocation matrix, cells are filled largest
first and each receives the qubit subset of the requested size with the
largest internal gate weight among the qubits not yet placed.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from qalloc.circuits import CircuitSpec, InteractionGraph, circuit_to_graph, subgraph_weight
from qalloc.errors import SizeGuardError

EXHAUSTIVE_LIMIT = 10**5

PartitionRow = list[frozenset[int]]
PartitionMatrix = list[PartitionRow]


class SubsetMode(enum.Enum):
    GREEDY = "greedy"
    EXHAUSTIVE = "exhaustive"


def _candidates(g: InteractionGraph, vertices: Optional[Iterable[int]]) -> list[int]:
    if vertices is None:
        return list(g.vertices)
    cand = sorted(set(vertices))
    for v in cand:
        if not 0 <= v < g.num_vertices:
            raise ValueError(f"vertex {v} outside [0, {g.num_vertices})")
    return cand


def _greedy_subset(adj: np.ndarray, cand: list[int], m: int) -> list[int]:
    idx = np.array(cand)
    sub = adj[np.ix_(idx, idx)]
    size = len(cand)
    chosen = np.zeros(size, dtype=bool)
    conn = np.zeros(size, dtype=np.int64)
    picked: list[int] = []

    def take(p):
        chosen[p] = True
        conn[:] += sub[:, p]
        picked.append(p)

    while len(picked) < m:
        slots = m - len(picked)
        free_conn = np.where(chosen, -1, conn)
        best = int(np.argmax(free_conn))
        if free_conn[best] > 0 or slots < 2:
            take(best)
            continue
        # Nothing free touches the chosen set: seed from the heaviest free edge.
        free = ~chosen
        masked = np.where(np.outer(free, free), np.triu(sub, 1), 0)
        if masked.max() > 0:
            u, v = np.unravel_index(int(np.argmax(masked)), masked.shape)
            take(int(u))
            take(int(v))
        else:
            take(best)
    return sorted(int(idx[p]) for p in picked)


def _exhaustive_subset(adj: np.ndarray, cand: list[int], m: int, limit: int) -> list[int]:
    count = math.comb(len(cand), m)
    if count > limit:
        raise SizeGuardError(f"{m}-subsets of {len(cand)} vertices", count, limit)
    best_w, best = -1, None
    for combo in itertools.combinations(cand, m):
        idx = list(combo)
        w = int(adj[np.ix_(idx, idx)].sum()) // 2
        if w > best_w:
            best_w, best = w, idx
    return best


def select_max_weight_subset(
    g: InteractionGraph,
    m: int,
    mode: SubsetMode = SubsetMode.GREEDY,
    vertices: Optional[Iterable[int]] = None,
    limit: int = EXHAUSTIVE_LIMIT,
) -> frozenset[int]:
    """Pick ``m`` vertices (from ``vertices``, default all) with heavy internal weight.

    Exhaustive mode returns the true optimum, ties going to the lexicographically
    smallest sorted vertex list. Greedy mode seeds with the heaviest edge and
    then keeps adding the vertex most connected to the current set, lowest
    index first on ties.
    """
    cand = _candidates(g, vertices)
    if m < 1:
        raise ValueError(f"subset size must be positive, got {m}")
    if m > len(cand):
        raise ValueError(f"subset size {m} exceeds the {len(cand)} available vertices")
    if m == len(cand):
        return frozenset(cand)
    adj = g.adjacency()
    if mode is SubsetMode.EXHAUSTIVE:
        return frozenset(_exhaustive_subset(adj, cand, m, limit))
    return frozenset(_greedy_subset(adj, cand, m))


def qcpragm_pp(
    mat,
    circuits: Sequence[CircuitSpec],
    mode: SubsetMode = SubsetMode.GREEDY,
) -> PartitionMatrix:
    """Assign concrete qubits to every nonzero cell of the allocation matrix."""
    mat = np.asarray(mat)
    if mat.shape[0] != len(circuits):
        raise ValueError(f"{mat.shape[0]} allocation rows for {len(circuits)} circuits")
    out: PartitionMatrix = []
    for j, circ in enumerate(circuits):
        row = [int(x) for x in mat[j]]
        if sum(row) != circ.num_qubits:
            raise ValueError(
                f"row {j} allocates {sum(row)} qubits to a {circ.num_qubits}-qubit circuit"
            )
        out.append(partition_circuit(circuit_to_graph(circ), row, mode))
    return out


def partition_circuit(
    g: InteractionGraph, row: Sequence[int], mode: SubsetMode = SubsetMode.GREEDY
) -> PartitionRow:
    """Split the vertices of ``g`` into cells whose sizes follow ``row``."""
    if any(x < 0 for x in row):
        raise ValueError("negative entry in allocation row")
    if sum(row) != g.num_vertices:
        raise ValueError(f"row sums to {sum(row)} but the graph has {g.num_vertices} vertices")
    remaining = set(g.vertices)
    cells: PartitionRow = [frozenset()] * len(row)
    # Largest cell first so the densest group lands on the biggest share.
    for k in sorted((k for k, s in enumerate(row) if s > 0), key=lambda k: (-row[k], k)):
        size = row[k]
        if size == len(remaining):
            cells[k] = frozenset(remaining)
            remaining = set()
        else:
            cells[k] = select_max_weight_subset(g, size, mode, remaining)
            remaining -= cells[k]
    return cells


def count_remote_gates(row: Sequence[Iterable[int]], g: InteractionGraph) -> int:
    """Weight of edges whose endpoints sit in different cells."""
    where: dict[int, int] = {}
    for c, cell in enumerate(row):
        for v in cell:
            if v in where:
                raise ValueError(f"qubit {v} appears in cells {where[v]} and {c}")
            if not 0 <= v < g.num_vertices:
                raise ValueError(f"qubit {v} outside [0, {g.num_vertices})")
            where[v] = c
    if len(where) != g.num_vertices:
        missing = sorted(set(g.vertices) - set(where))
        raise ValueError(f"qubits {missing} are not assigned to any cell")
    return sum(w for (u, v), w in g.edge_weights.items() if where[u] != where[v])


@dataclass(frozen=True)
class PartitionReport:
    partition_count: int
    local_gate_weight: int
    remote_gate_weight: int

    @property
    def total_weight(self) -> int:
        return self.local_gate_weight + self.remote_gate_weight


def partition_report(row: Sequence[Iterable[int]], g: InteractionGraph) -> PartitionReport:
    cells = [set(c) for c in row]
    remote = count_remote_gates(cells, g)
    local = sum(subgraph_weight(g, c) for c in cells)
    return PartitionReport(sum(1 for c in cells if c), local, remote)
