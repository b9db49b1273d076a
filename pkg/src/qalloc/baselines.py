"""Comparison arms: round-robin and random allocation, Kernighan-Lin partitioning."""

from __future__ import annotations

from typing import Iterable, Optional, Sequence

import numpy as np

from qalloc.allocation import NodeSpec, capacities_of, check_allocation, check_feasible
from qalloc.circuits import InteractionGraph


class RngStream:
    """Seeded random stream backed by numpy's PCG64.

    ``child(k)`` derives an independent stream through ``SeedSequence``
    spawn keys, so sub-streams never overlap with their parent or siblings.
    """

    algorithm = "PCG64"

    def __init__(self, seed: int, key: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.key = tuple(key)
        ss = np.random.SeedSequence(self.seed, spawn_key=self.key)
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, key={self.key})"

    def child(self, k: int) -> "RngStream":
        return RngStream(self.seed, self.key + (int(k),))

    def integer(self, lo: int, hi: int) -> int:
        """Uniform integer in ``[lo, hi]`` inclusive."""
        return int(self._gen.integers(lo, hi + 1))

    def integers(self, lo: int, hi: int, size: int) -> list[int]:
        return [int(x) for x in self._gen.integers(lo, hi + 1, size=size)]

    def index(self, n: int) -> int:
        return int(self._gen.integers(0, n))

    def permutation(self, items: Sequence[int]) -> list[int]:
        order = self._gen.permutation(len(items))
        return [items[i] for i in order]


def _fill(need, k, mat, j, load, caps):
    take = min(need, int(caps[k] - load[k]))
    mat[j, k] += take
    load[k] += take
    return need - take


def round_robin_allocate(
    demands: Sequence[int], nodes: Sequence[NodeSpec], cursor: int = 0
) -> np.ndarray:
    """Circular placement; each node is filled as far as it allows before moving on.

    The next circuit starts at the node after the last one used.
    """
    caps = capacities_of(nodes)
    q = len(caps)
    check_feasible(sum(demands), caps)
    if not 0 <= cursor < q:
        raise ValueError(f"cursor {cursor} outside [0, {q})")
    mat = np.zeros((len(demands), q), dtype=np.int64)
    load = np.zeros(q, dtype=np.int64)
    for j, r in enumerate(demands):
        need = int(r)
        while need > 0:
            if load[cursor] < caps[cursor]:
                need = _fill(need, cursor, mat, j, load, caps)
            cursor = (cursor + 1) % q
    check_allocation(mat, list(demands), caps)
    return mat


def random_allocate(
    demands: Sequence[int], nodes: Sequence[NodeSpec], rng: RngStream
) -> np.ndarray:
    """Draw a uniformly random node with spare room, fill it, repeat until placed."""
    caps = capacities_of(nodes)
    q = len(caps)
    check_feasible(sum(demands), caps)
    mat = np.zeros((len(demands), q), dtype=np.int64)
    load = np.zeros(q, dtype=np.int64)
    for j, r in enumerate(demands):
        need = int(r)
        while need > 0:
            open_nodes = [k for k in range(q) if load[k] < caps[k]]
            k = open_nodes[rng.index(len(open_nodes))]
            need = _fill(need, k, mat, j, load, caps)
    check_allocation(mat, list(demands), caps)
    return mat


# --- Kernighan-Lin ---------------------------------------------------------


def cut_weight(adj: np.ndarray, side_a: Sequence[int], side_b: Sequence[int]) -> int:
    if len(side_a) == 0 or len(side_b) == 0:
        return 0
    return int(adj[np.ix_(list(side_a), list(side_b))].sum())


def _kl_pass(adj: np.ndarray, a: np.ndarray, b: np.ndarray) -> int:
    """One pass of gain-ordered swaps with locking; applies the best prefix in place.

    Returns the cut reduction achieved (0 when no prefix has positive gain).
    """
    w_aa = adj[np.ix_(a, a)]
    w_bb = adj[np.ix_(b, b)]
    w_ab = adj[np.ix_(a, b)].astype(np.int64)
    d_a = w_ab.sum(axis=1) - w_aa.sum(axis=1)
    d_b = w_ab.sum(axis=0) - w_bb.sum(axis=1)
    free_a = np.ones(len(a), dtype=bool)
    free_b = np.ones(len(b), dtype=bool)
    neg = np.iinfo(np.int64).min // 4

    swaps, total, best_total, best_len = [], 0, 0, 0
    for _ in range(min(len(a), len(b))):
        gain = d_a[:, None] + d_b[None, :] - 2 * w_ab
        gain = np.where(free_a[:, None] & free_b[None, :], gain, neg)
        flat = int(np.argmax(gain))
        x, y = divmod(flat, len(b))
        g = int(gain[x, y])
        free_a[x] = False
        free_b[y] = False
        swaps.append((x, y))
        total += g
        if total > best_total:
            best_total, best_len = total, len(swaps)
        # x moves to side b, y moves to side a
        d_a += 2 * w_aa[:, x] - 2 * w_ab[:, y]
        d_b += 2 * w_bb[:, y] - 2 * w_ab[x, :]

    for x, y in swaps[:best_len]:
        a[x], b[y] = b[y], a[x]
    return best_total


def kernighan_lin_bisect(
    g: InteractionGraph,
    sizes: tuple[int, int],
    rng: RngStream,
    vertices: Optional[Iterable[int]] = None,
    max_passes: int = 100,
) -> tuple[frozenset[int], frozenset[int]]:
    """Split ``vertices`` (default all) into parts of the given sizes with a small cut.

    Starts from a random split and swaps vertex pairs, so unequal sizes are
    kept throughout. The result never cuts more than the starting split.
    """
    verts = sorted(set(g.vertices if vertices is None else vertices))
    s1, s2 = sizes
    if s1 < 0 or s2 < 0 or s1 + s2 != len(verts):
        raise ValueError(f"sizes {sizes} do not add up to {len(verts)} vertices")
    order = rng.permutation(verts)
    if s1 == 0 or s2 == 0:
        return frozenset(order[:s1]), frozenset(order[s1:])

    adj = g.adjacency()
    a = np.array(order[:s1])
    b = np.array(order[s1:])
    for _ in range(max_passes):
        if _kl_pass(adj, a, b) <= 0:
            break
    return frozenset(int(v) for v in a), frozenset(int(v) for v in b)


def recursive_partition(
    g: InteractionGraph,
    target_sizes: Sequence[int],
    rng: RngStream,
    vertices: Optional[Iterable[int]] = None,
) -> list[frozenset[int]]:
    """Repeated KL bisection producing one vertex set per target size, in order."""
    verts = sorted(set(g.vertices if vertices is None else vertices))
    sizes = [int(s) for s in target_sizes]
    if any(s < 0 for s in sizes) or sum(sizes) != len(verts):
        raise ValueError(f"target sizes {sizes} do not add up to {len(verts)} vertices")
    if len(sizes) == 1:
        return [frozenset(verts)]
    half = len(sizes) // 2
    left, right = sizes[:half], sizes[half:]
    side_a, side_b = kernighan_lin_bisect(g, (sum(left), sum(right)), rng.child(0), verts)
    return (
        recursive_partition(g, left, rng.child(1), side_a)
        + recursive_partition(g, right, rng.child(2), side_b)
    )
