"""Seeded experiments comparing the game allocator against round-robin and random.

One trial draws a cloud and a workload, runs every requested arm on that same
input, and reduces each arm to a :class:`MetricsRecord`. Trial ``t`` of an
experiment uses seed ``cfg.seed + t``; inside a trial, each consumer draws from
its own child stream of that seed.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from qalloc import allocation as alloc
from qalloc.allocation import CostModel, LoadUnit, NodeSpec, Strategy
from qalloc.baselines import RngStream, random_allocate, recursive_partition, round_robin_allocate
from qalloc.circuits import CircuitSpec, circuit_to_graph, generate
from qalloc.errors import InfeasibleError
from qalloc.grouping import PartitionReport, SubsetMode, partition_report, qcpragm_pp

log = logging.getLogger(__name__)

PRAGM, ROUND_ROBIN, RANDOM = "qcpragm++", "round-robin", "random"
ALLOCATORS = (PRAGM, ROUND_ROBIN, RANDOM)
ALLOCATOR_ALIASES = {"pragm": PRAGM, "rr": ROUND_ROBIN, "random": RANDOM}

# m -> circuit width range used for the m = 8, 10, 14 sweeps
STANDARD_WIDTHS = {8: (30, 40), 10: (23, 33), 14: (15, 25)}

# child-stream keys inside one trial
_CLOUD, _WORKLOAD, _RANDOM_ARM, _KL = 0, 1, 2, 3


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    num_nodes: int = 20
    capacity_range: tuple[int, int] = (9, 19)
    num_circuits: int = 8
    width_range: tuple[int, int] = (30, 40)
    circuit_pool: tuple[str, ...] = ("QFT", "DJ", "GHZ")
    cost_coefficient: float = 100.0
    load_unit: LoadUnit = LoadUnit.RAW
    allocators: tuple[str, ...] = ALLOCATORS
    trials: int = 10
    strategy: Strategy = Strategy.COST_THEN_SPARSE
    subset_mode: SubsetMode = SubsetMode.GREEDY
    max_retries: int = 100

    def __post_init__(self):
        for name in ("capacity_range", "width_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} ({lo}, {hi}) is empty")
        if self.capacity_range[0] < 1:
            raise ValueError("capacities must be at least 1")
        if self.width_range[0] < 1:
            raise ValueError("circuit widths must be at least 1")
        if "DJ" in self.circuit_pool and self.width_range[0] < 2:
            raise ValueError("Deutsch-Jozsa circuits need width >= 2")
        if not self.circuit_pool:
            raise ValueError("circuit pool is empty")
        for fam in self.circuit_pool:
            if fam not in ("QFT", "DJ", "GHZ"):
                raise ValueError(f"unknown circuit family {fam!r}")
        for a in self.allocators:
            if a not in ALLOCATORS:
                raise ValueError(f"unknown allocator {a!r}")
        if self.num_nodes < 1 or self.num_circuits < 1 or self.trials < 1:
            raise ValueError("num_nodes, num_circuits and trials must be positive")
        if self.cost_coefficient <= 0:
            raise ValueError("cost coefficient must be positive")

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


def standard_config(m: int, **overrides) -> ExperimentConfig:
    """20 nodes with capacities 9..19 and the width range matching ``m`` circuits."""
    return ExperimentConfig(num_circuits=m, width_range=STANDARD_WIDTHS[m], **overrides)


@dataclass(frozen=True)
class MetricsRecord:
    allocator: str
    seed: int
    m: int
    per_node_cost: tuple[float, ...]
    total_cost: float
    max_node_cost: float
    normalized_partitions: float
    normalized_remote_gates: float


@dataclass
class ArmResult:
    allocator: str
    matrix: np.ndarray
    partitions: list[list[frozenset[int]]]
    reports: list[PartitionReport]
    metrics: MetricsRecord


@dataclass
class TrialResult:
    seed: int
    nodes: list[NodeSpec]
    circuits: list[CircuitSpec]
    arms: dict[str, ArmResult] = field(default_factory=dict)

    @property
    def demands(self) -> list[int]:
        return [c.num_qubits for c in self.circuits]


def build_cloud(cfg: ExperimentConfig, rng: RngStream) -> list[NodeSpec]:
    lo, hi = cfg.capacity_range
    caps = rng.integers(lo, hi, cfg.num_nodes)
    return [NodeSpec(k, c, cfg.cost_coefficient) for k, c in enumerate(caps)]


def sample_workload(cfg: ExperimentConfig, rng: RngStream) -> list[CircuitSpec]:
    lo, hi = cfg.width_range
    out = []
    for j in range(cfg.num_circuits):
        family = cfg.circuit_pool[rng.index(len(cfg.circuit_pool))]
        width = rng.integer(lo, hi)
        out.append(generate(family, width).with_id(j))
    return out


def draw_instance(cfg: ExperimentConfig, seed: int) -> tuple[list[NodeSpec], list[CircuitSpec]]:
    """Cloud and workload for one trial; capacities are redrawn until the workload fits."""
    rng = RngStream(seed)
    cloud_rng = rng.child(_CLOUD)
    nodes = build_cloud(cfg, cloud_rng)
    circuits = sample_workload(cfg, rng.child(_WORKLOAD))
    demand = sum(c.num_qubits for c in circuits)
    for attempt in range(cfg.max_retries):
        if demand <= sum(n.capacity for n in nodes):
            return nodes, circuits
        log.debug("seed %d: demand %d does not fit, redrawing capacities (%d)", seed, demand, attempt)
        nodes = build_cloud(cfg, cloud_rng)
    if demand <= sum(n.capacity for n in nodes):
        return nodes, circuits
    raise InfeasibleError(demand, sum(n.capacity for n in nodes),
                          f"seed {seed}: workload of {demand} qubits never fit "
                          f"after {cfg.max_retries} capacity redraws")


def metrics_for(
    label: str,
    seed: int,
    mat: np.ndarray,
    reports: Sequence[PartitionReport],
    nodes: Sequence[NodeSpec],
    model: CostModel,
) -> MetricsRecord:
    costs = alloc.per_node_cost(mat, nodes, model)
    m = len(reports)
    return MetricsRecord(
        allocator=label,
        seed=seed,
        m=m,
        per_node_cost=tuple(float(c) for c in costs),
        total_cost=alloc.system_cost(mat, nodes, model),
        max_node_cost=float(costs.max()),
        normalized_partitions=sum(r.partition_count for r in reports) / m,
        normalized_remote_gates=sum(r.remote_gate_weight for r in reports) / m,
    )


def _kl_partitions(mat, circuits, rng: RngStream):
    out = []
    for j, circ in enumerate(circuits):
        row = [int(x) for x in mat[j]]
        used = [k for k, x in enumerate(row) if x > 0]
        sets = recursive_partition(circuit_to_graph(circ), [row[k] for k in used], rng.child(j))
        cells = [frozenset()] * len(row)
        for k, s in zip(used, sets):
            cells[k] = s
        out.append(cells)
    return out


def run_arm(label: str, nodes, circuits, cfg: ExperimentConfig, seed: int) -> ArmResult:
    model = CostModel.for_nodes(nodes, cfg.load_unit)
    demands = [c.num_qubits for c in circuits]
    rng = RngStream(seed)
    if label == PRAGM:
        mat = alloc.allocate(demands, nodes, model, cfg.strategy)
        parts = qcpragm_pp(mat, circuits, cfg.subset_mode)
    elif label == ROUND_ROBIN:
        mat = round_robin_allocate(demands, nodes, 0)
        parts = _kl_partitions(mat, circuits, rng.child(_KL).child(0))
    elif label == RANDOM:
        mat = random_allocate(demands, nodes, rng.child(_RANDOM_ARM))
        parts = _kl_partitions(mat, circuits, rng.child(_KL).child(1))
    else:
        raise ValueError(f"unknown allocator {label!r}")
    reports = [partition_report(p, circuit_to_graph(c)) for p, c in zip(parts, circuits)]
    return ArmResult(label, mat, parts, reports, metrics_for(label, seed, mat, reports, nodes, model))


def run_trial(cfg: ExperimentConfig, seed: int) -> TrialResult:
    nodes, circuits = draw_instance(cfg, seed)
    trial = TrialResult(seed, nodes, circuits)
    for label in cfg.allocators:
        trial.arms[label] = run_arm(label, nodes, circuits, cfg, seed)
    return trial


# --- experiments and output -----------------------------------------------

CSV_COLUMNS = (
    "allocator", "seed", "m", "node_id", "per_node_cost", "total_cost",
    "max_node_cost", "normalized_partitions", "normalized_remote_gates",
)
SUMMARY_FIELDS = ("total_cost", "max_node_cost", "normalized_partitions", "normalized_remote_gates")


def _num(x: float) -> str:
    return format(float(x), ".10g")


def metrics_rows(records: Sequence[MetricsRecord]) -> list[list[str]]:
    """One row per node plus one summary row (node columns set to '-') per record."""
    rows = []
    for rec in records:
        tail = [_num(rec.total_cost), _num(rec.max_node_cost),
                _num(rec.normalized_partitions), _num(rec.normalized_remote_gates)]
        head = [rec.allocator, str(rec.seed), str(rec.m)]
        for k, c in enumerate(rec.per_node_cost):
            rows.append(head + [str(k), _num(c)] + tail)
        rows.append(head + ["-", "-"] + tail)
    return rows


def metrics_csv(records: Sequence[MetricsRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    writer.writerows(metrics_rows(records))
    return buf.getvalue()


def summarize(records: Sequence[MetricsRecord]) -> dict:
    """Mean/min/max of each scalar metric, per (m, allocator)."""
    groups: dict[tuple[int, str], list[MetricsRecord]] = {}
    for rec in records:
        groups.setdefault((rec.m, rec.allocator), []).append(rec)
    out: dict = {}
    for (m, label), recs in sorted(groups.items()):
        block = out.setdefault(f"m={m}", {})
        stats = {"trials": len(recs)}
        for name in SUMMARY_FIELDS:
            vals = [getattr(r, name) for r in recs]
            stats[name] = {"mean": float(np.mean(vals)), "min": float(min(vals)), "max": float(max(vals))}
        stats["per_node_cost_mean"] = [float(x) for x in np.mean([r.per_node_cost for r in recs], axis=0)]
        block[label] = stats
    return out


@dataclass
class ExperimentResult:
    records: list[MetricsRecord]
    trials: list[TrialResult]
    summary: dict

    def csv(self) -> str:
        return metrics_csv(self.records)

    def summary_json(self) -> str:
        return json.dumps(self.summary, indent=2, sort_keys=True) + "\n"


def run_experiment(cfg: ExperimentConfig, out_dir: Optional[Path] = None) -> ExperimentResult:
    trials = [run_trial(cfg, cfg.seed + t) for t in range(cfg.trials)]
    return _finish(trials, out_dir)


def run_sweep(
    ms: Sequence[int] = (8, 10, 14), out_dir: Optional[Path] = None, **overrides
) -> ExperimentResult:
    """The standard m = 8, 10, 14 configurations run back to back."""
    trials = []
    for m in ms:
        cfg = standard_config(m, **overrides)
        trials += [run_trial(cfg, cfg.seed + t) for t in range(cfg.trials)]
    return _finish(trials, out_dir)


def _finish(trials: list[TrialResult], out_dir: Optional[Path]) -> ExperimentResult:
    records = [arm.metrics for t in trials for arm in t.arms.values()]
    result = ExperimentResult(records, trials, summarize(records))
    if out_dir is not None:
        write_outputs(result, Path(out_dir))
    return result


def write_outputs(result: ExperimentResult, out_dir: Path) -> None:
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "metrics.csv").write_text(result.csv())
        (out_dir / "summary.json").write_text(result.summary_json())
    except OSError as exc:
        raise OSError(f"could not write results to {out_dir}: {exc}") from exc


# --- config files -----------------------------------------------------------


def _pair(text: str) -> tuple[int, int]:
    parts = [p for p in text.replace("(", " ").replace(")", " ").replace(",", " ").split() if p]
    if len(parts) != 2:
        raise ValueError(f"expected two integers, got {text!r}")
    return int(parts[0]), int(parts[1])


def _allocators(text: str) -> tuple[str, ...]:
    text = text.strip().lower()
    if text == "all":
        return ALLOCATORS
    out = []
    for item in text.split(","):
        item = item.strip()
        out.append(ALLOCATOR_ALIASES.get(item, item))
    return tuple(out)


_PARSERS = {
    "seed": int,
    "num_nodes": int,
    "capacity_range": _pair,
    "num_circuits": int,
    "m": int,
    "width_range": _pair,
    "circuit_pool": lambda s: tuple(x.strip().upper() for x in s.split(",") if x.strip()),
    "cost_coefficient": float,
    "load_unit": LoadUnit,
    "allocator": _allocators,
    "allocators": _allocators,
    "trials": int,
    "strategy": Strategy,
    "subset_mode": SubsetMode,
    "max_retries": int,
}
_RENAMES = {"m": "num_circuits", "allocator": "allocators"}


def parse_config(text: str) -> ExperimentConfig:
    """Read flat ``key = value`` lines (``#`` comments) into an ExperimentConfig."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _PARSERS:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        try:
            values[_RENAMES.get(key, key)] = _PARSERS[key](value)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad value for {key}: {exc}") from None
    if "num_circuits" in values and "width_range" not in values:
        widths = STANDARD_WIDTHS.get(values["num_circuits"])
        if widths is not None:
            values["width_range"] = widths
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        return parse_config(path.read_text())
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
