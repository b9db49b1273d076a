"""Instance files, allocation CSV and partition JSON."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from qalloc import allocation as alloc
from qalloc.allocation import CostModel, LoadUnit, NodeSpec
from qalloc.circuits import CircuitSpec, load_circuit


@dataclass
class Instance:
    nodes: list[NodeSpec]
    client_ids: list[int]
    demands: list[int]
    model: CostModel
    circuits: Optional[list[CircuitSpec]] = None


def parse_instance(data: dict, base_dir: Path = Path(".")) -> Instance:
    """Build an :class:`Instance` from the decoded JSON document.

    Each client gives either ``demand`` or ``circuit`` (a circuit file path,
    relative to ``base_dir``). When every client names a circuit, the circuits
    are kept for partitioning.
    """
    try:
        nodes = [
            NodeSpec(int(n["id"]), int(n["capacity"]), float(n.get("cost_coefficient", 1.0)))
            for n in data["nodes"]
        ]
        clients = data["clients"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"instance is missing field {exc}") from None
    if not nodes:
        raise ValueError("instance has no nodes")
    unit = LoadUnit(data.get("model", {}).get("load_unit", "raw"))
    ids, demands, circuits = [], [], []
    for pos, client in enumerate(clients):
        cid = int(client.get("id", pos))
        if "circuit" in client:
            circ = load_circuit(base_dir / client["circuit"], cid)
            circuits.append(circ)
            demand = circ.num_qubits
        elif "demand" in client:
            demand = int(client["demand"])
            if demand < 1:
                raise ValueError(f"client {cid}: demand must be positive")
        else:
            raise ValueError(f"client {cid}: needs 'demand' or 'circuit'")
        ids.append(cid)
        demands.append(demand)
    keep = circuits if len(circuits) == len(demands) else None
    return Instance(nodes, ids, demands, CostModel.for_nodes(nodes, unit), keep)


def load_instance(path) -> Instance:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON: {exc}") from None
    return parse_instance(data, path.parent)


def matrix_csv(mat, client_ids: Sequence[int], nodes: Sequence[NodeSpec]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["client"] + [f"node_{n.id}" for n in nodes])
    for cid, row in zip(client_ids, np.asarray(mat)):
        w.writerow([cid] + [int(x) for x in row])
    return buf.getvalue()


def allocation_summary(mat, nodes, model) -> dict:
    costs = alloc.per_node_cost(mat, nodes, model)
    return {
        "system_cost": alloc.system_cost(mat, nodes, model),
        "max_node_cost": float(costs.max()),
        "per_node_cost": [float(c) for c in costs],
    }


def partition_to_json(partitions, client_ids: Sequence[int], node_ids: Sequence[int]) -> str:
    doc = {
        str(cid): {str(nid): sorted(int(v) for v in cell) for nid, cell in zip(node_ids, row)}
        for cid, row in zip(client_ids, partitions)
    }
    return json.dumps(doc, indent=2) + "\n"


def partition_from_json(text: str) -> dict[int, dict[int, list[int]]]:
    doc = json.loads(text)
    return {int(c): {int(n): list(v) for n, v in row.items()} for c, row in doc.items()}


def parse_row(text: str) -> list[int]:
    try:
        row = [int(x) for x in text.replace(" ", "").split(",") if x != ""]
    except ValueError:
        raise ValueError(f"allocation row {text!r} must be comma-separated integers") from None
    if not row or any(x < 0 for x in row):
        raise ValueError(f"allocation row {text!r} must be non-empty and non-negative")
    return row
