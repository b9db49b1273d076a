"""Circuits, the three benchmark families, and qubit interaction graphs.

Only connectivity matters downstream: a circuit is reduced to an undirected
graph whose edge weights count the two-qubit gates acting on each qubit pair.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np


class GateKind(enum.Enum):
    SINGLE = 1
    TWO = 2


@dataclass(frozen=True)
class Gate:
    """A gate acting on one or two qubits.

    For two-qubit gates the first operand is the control, the second the target.
    """

    kind: GateKind
    label: str
    operands: tuple[int, ...]

    def __post_init__(self):
        ops = tuple(int(q) for q in self.operands)
        object.__setattr__(self, "operands", ops)
        if len(ops) != self.kind.value:
            raise ValueError(
                f"{self.kind.name.lower()} gate {self.label!r} needs "
                f"{self.kind.value} operand(s), got {len(ops)}"
            )
        if self.kind is GateKind.TWO and ops[0] == ops[1]:
            raise ValueError(f"two-qubit gate {self.label!r} acts twice on qubit {ops[0]}")

    @classmethod
    def single(cls, label: str, qubit: int) -> "Gate":
        return cls(GateKind.SINGLE, label, (qubit,))

    @classmethod
    def two(cls, label: str, control: int, target: int) -> "Gate":
        return cls(GateKind.TWO, label, (control, target))


@dataclass(frozen=True)
class CircuitSpec:
    """A client job: a width and an ordered gate list."""

    num_qubits: int
    gates: tuple[Gate, ...] = ()
    id: int = 0
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.num_qubits < 1:
            raise ValueError(f"num_qubits must be >= 1, got {self.num_qubits}")
        for pos, gate in enumerate(self.gates):
            for q in gate.operands:
                if not 0 <= q < self.num_qubits:
                    raise ValueError(
                        f"gate {pos} ({gate.label}) operand {q} outside [0, {self.num_qubits})"
                    )

    @property
    def two_qubit_count(self) -> int:
        return sum(1 for g in self.gates if g.kind is GateKind.TWO)

    def with_id(self, client_id: int) -> "CircuitSpec":
        return CircuitSpec(self.num_qubits, self.gates, client_id, self.name)


def _pair(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class InteractionGraph:
    """Undirected weighted qubit-coupling graph.

    ``edge_weights`` maps ``(u, v)`` with ``u < v`` to the number of two-qubit
    gates between ``u`` and ``v``.
    """

    num_vertices: int
    edge_weights: Mapping[tuple[int, int], int] = field(default_factory=dict)

    def __post_init__(self):
        if self.num_vertices < 1:
            raise ValueError("an interaction graph needs at least one vertex")
        clean: dict[tuple[int, int], int] = {}
        for (u, v), w in self.edge_weights.items():
            if u == v:
                raise ValueError(f"self-loop on vertex {u}")
            for x in (u, v):
                if not 0 <= x < self.num_vertices:
                    raise ValueError(f"vertex {x} outside [0, {self.num_vertices})")
            if w < 1:
                raise ValueError(f"edge {(u, v)} has non-positive weight {w}")
            key = _pair(u, v)
            clean[key] = clean.get(key, 0) + int(w)
        object.__setattr__(self, "edge_weights", MappingProxyType(dict(sorted(clean.items()))))

    @property
    def vertices(self) -> range:
        return range(self.num_vertices)

    def weight(self, u: int, v: int) -> int:
        return self.edge_weights.get(_pair(u, v), 0)

    def total_weight(self) -> int:
        return sum(self.edge_weights.values())

    def weighted_degree(self, v: int) -> int:
        return sum(w for (a, b), w in self.edge_weights.items() if v in (a, b))

    def adjacency(self) -> np.ndarray:
        """Dense symmetric weight matrix (int64)."""
        adj = np.zeros((self.num_vertices, self.num_vertices), dtype=np.int64)
        for (u, v), w in self.edge_weights.items():
            adj[u, v] = w
            adj[v, u] = w
        return adj

    @classmethod
    def path(cls, n: int) -> "InteractionGraph":
        return cls(n, {(i, i + 1): 1 for i in range(n - 1)})

    @classmethod
    def complete(cls, n: int, weight: int = 1) -> "InteractionGraph":
        return cls(n, {(i, j): weight for i in range(n) for j in range(i + 1, n)})

    @classmethod
    def star(cls, n: int, center: int) -> "InteractionGraph":
        return cls(n, {_pair(center, i): 1 for i in range(n) if i != center})


def generate_ghz(n: int) -> CircuitSpec:
    """H on qubit 0, then a CNOT chain 0->1->...->n-1."""
    if n < 1:
        raise ValueError(f"GHZ needs at least one qubit, got {n}")
    gates = [Gate.single("h", 0)]
    gates += [Gate.two("cx", i, i + 1) for i in range(n - 1)]
    return CircuitSpec(n, tuple(gates), name=f"ghz_{n}")


def generate_qft(n: int) -> CircuitSpec:
    """Textbook QFT without the final swaps: H then controlled phases to every later qubit."""
    if n < 1:
        raise ValueError(f"QFT needs at least one qubit, got {n}")
    gates = []
    for i in range(n):
        gates.append(Gate.single("h", i))
        for j in range(i + 1, n):
            gates.append(Gate.two(f"cp(pi/{2 ** (j - i)})", j, i))
    return CircuitSpec(n, tuple(gates), name=f"qft_{n}")


def generate_dj(n_inputs: int) -> CircuitSpec:
    """Deutsch-Jozsa with a balanced all-CNOT oracle; the ancilla is the last qubit."""
    if n_inputs < 1:
        raise ValueError(f"Deutsch-Jozsa needs at least one input qubit, got {n_inputs}")
    anc = n_inputs
    gates = [Gate.single("x", anc)]
    gates += [Gate.single("h", q) for q in range(n_inputs + 1)]
    gates += [Gate.two("cx", q, anc) for q in range(n_inputs)]
    gates += [Gate.single("h", q) for q in range(n_inputs)]
    return CircuitSpec(n_inputs + 1, tuple(gates), name=f"dj_{n_inputs}")


GENERATORS = {
    "GHZ": generate_ghz,
    "QFT": generate_qft,
    "DJ": lambda width: generate_dj(width - 1),
}


def generate(family: str, width: int) -> CircuitSpec:
    """Build a benchmark circuit of the given family with exactly ``width`` qubits."""
    try:
        gen = GENERATORS[family.upper()]
    except KeyError:
        raise ValueError(f"unknown circuit family {family!r}; expected one of {sorted(GENERATORS)}")
    return gen(width)


def circuit_to_graph(c: CircuitSpec) -> InteractionGraph:
    weights: dict[tuple[int, int], int] = {}
    for gate in c.gates:
        if gate.kind is GateKind.TWO:
            key = _pair(*gate.operands)
            weights[key] = weights.get(key, 0) + 1
    return InteractionGraph(c.num_qubits, weights)


def subgraph_weight(g: InteractionGraph, s: Iterable[int]) -> int:
    """Total weight of edges with both endpoints in ``s`` (the local-gate count of ``s``)."""
    members = set(s)
    for v in members:
        if not 0 <= v < g.num_vertices:
            raise ValueError(f"vertex {v} outside [0, {g.num_vertices})")
    if len(members) < 2:
        return 0
    return sum(w for (u, v), w in g.edge_weights.items() if u in members and v in members)


# --- text format -----------------------------------------------------------


def parse_circuit(text: str, client_id: int = 0, name: str = "") -> CircuitSpec:
    """Parse the line-oriented circuit format.

    ``qubits <n>`` header, then ``g1 <label> <q>`` or ``g2 <label> <ctrl> <tgt>``
    per line. ``#`` starts a comment.
    """
    num_qubits = None
    gates = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        head = parts[0].lower()
        try:
            if head == "qubits":
                if num_qubits is not None:
                    raise ValueError("duplicate 'qubits' header")
                if len(parts) != 2:
                    raise ValueError("expected 'qubits <n>'")
                num_qubits = int(parts[1])
                if num_qubits < 1:
                    raise ValueError("qubit count must be positive")
                continue
            if num_qubits is None:
                raise ValueError("gate before 'qubits' header")
            if head == "g1":
                if len(parts) != 3:
                    raise ValueError("expected 'g1 <label> <q>'")
                ops = (int(parts[2]),)
                kind = GateKind.SINGLE
            elif head == "g2":
                if len(parts) != 4:
                    raise ValueError("expected 'g2 <label> <control> <target>'")
                ops = (int(parts[2]), int(parts[3]))
                kind = GateKind.TWO
            else:
                raise ValueError(f"unknown directive {parts[0]!r}")
            for q in ops:
                if not 0 <= q < num_qubits:
                    raise ValueError(f"qubit index {q} out of range [0, {num_qubits})")
            gates.append(Gate(kind, parts[1], ops))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    if num_qubits is None:
        raise ValueError("missing 'qubits <n>' header")
    return CircuitSpec(num_qubits, tuple(gates), client_id, name)


def format_circuit(c: CircuitSpec) -> str:
    lines = [f"qubits {c.num_qubits}"]
    for gate in c.gates:
        tag = "g1" if gate.kind is GateKind.SINGLE else "g2"
        lines.append(" ".join([tag, gate.label, *map(str, gate.operands)]))
    return "\n".join(lines) + "\n"


def load_circuit(path, client_id: int = 0) -> CircuitSpec:
    path = Path(path)
    try:
        return parse_circuit(path.read_text(), client_id, path.stem)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
