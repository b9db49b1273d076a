"""Game-theoretic qubit allocation and circuit partitioning for a simulated quantum cloud."""

from qalloc.errors import InfeasibleError, SizeGuardError
from qalloc.circuits import (
    CircuitSpec,
    Gate,
    GateKind,
    InteractionGraph,
    circuit_to_graph,
    generate_dj,
    generate_ghz,
    generate_qft,
    subgraph_weight,
)
from qalloc.allocation import (
    CostModel,
    LoadUnit,
    NodeSpec,
    Strategy,
    allocate,
    client_cost,
    optimal_loads,
    poa_certificate,
    system_cost,
    verify_nash,
)
from qalloc.grouping import (
    SubsetMode,
    count_remote_gates,
    partition_report,
    qcpragm_pp,
    select_max_weight_subset,
)
from qalloc.baselines import (
    RngStream,
    kernighan_lin_bisect,
    random_allocate,
    recursive_partition,
    round_robin_allocate,
)

__version__ = "0.1.0"

__all__ = [
    "CircuitSpec",
    "CostModel",
    "Gate",
    "GateKind",
    "InfeasibleError",
    "InteractionGraph",
    "LoadUnit",
    "NodeSpec",
    "RngStream",
    "SizeGuardError",
    "Strategy",
    "SubsetMode",
    "allocate",
    "circuit_to_graph",
    "client_cost",
    "count_remote_gates",
    "generate_dj",
    "generate_ghz",
    "generate_qft",
    "kernighan_lin_bisect",
    "optimal_loads",
    "partition_report",
    "poa_certificate",
    "qcpragm_pp",
    "random_allocate",
    "recursive_partition",
    "round_robin_allocate",
    "select_max_weight_subset",
    "subgraph_weight",
    "system_cost",
    "verify_nash",
]
