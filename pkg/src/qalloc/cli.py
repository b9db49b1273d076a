"""Command line entry point: ``qalloc run|allocate|partition|oracle``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from qalloc import allocation as alloc
from qalloc import harness, io, oracle
from qalloc.allocation import Strategy
from qalloc.circuits import circuit_to_graph, load_circuit
from qalloc.errors import InfeasibleError, SizeGuardError
from qalloc.grouping import SubsetMode, partition_circuit, partition_report, qcpragm_pp

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_SIZE = 0, 2, 3, 4


def _cmd_run(args) -> int:
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.allocator is not None:
        overrides["allocators"] = harness._allocators(args.allocator)
    if args.trials is not None:
        overrides["trials"] = args.trials
    out = Path(args.out) if args.out else None
    if args.sweep:
        result = harness.run_sweep(out_dir=out, **overrides)
    else:
        if not args.config:
            raise ValueError("run needs --config or --sweep")
        cfg = harness.load_config(args.config).replace(**overrides)
        result = harness.run_experiment(cfg, out)
    if out is None:
        sys.stdout.write(result.csv())
    else:
        sys.stdout.write(result.summary_json())
    return EXIT_OK


def _cmd_allocate(args) -> int:
    inst = io.load_instance(args.instance)
    strategy = Strategy(args.strategy)
    mat = alloc.allocate(inst.demands, inst.nodes, inst.model, strategy)
    csv_text = io.matrix_csv(mat, inst.client_ids, inst.nodes)
    summary = io.allocation_summary(mat, inst.nodes, inst.model)
    partition_text = None
    if inst.circuits is not None:
        parts = qcpragm_pp(mat, inst.circuits, SubsetMode(args.mode))
        partition_text = io.partition_to_json(parts, inst.client_ids, [n.id for n in inst.nodes])
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "allocation.csv").write_text(csv_text)
        (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
        if partition_text is not None:
            (out / "partition.json").write_text(partition_text)
    sys.stdout.write(csv_text)
    sys.stdout.write(json.dumps(summary, indent=2) + "\n")
    if partition_text is not None:
        sys.stdout.write(partition_text)
    return EXIT_OK


def _cmd_partition(args) -> int:
    circ = load_circuit(args.circuit)
    row = io.parse_row(args.row)
    g = circuit_to_graph(circ)
    cells = partition_circuit(g, row, SubsetMode(args.mode))
    rep = partition_report(cells, g)
    doc = {
        "cells": {str(k): sorted(c) for k, c in enumerate(cells)},
        "partition_count": rep.partition_count,
        "local_gate_weight": rep.local_gate_weight,
        "remote_gate_weight": rep.remote_gate_weight,
    }
    sys.stdout.write(json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


def _cmd_oracle(args) -> int:
    if args.mode == "subset":
        rows = oracle.subset_report(args.seed, args.count)
        worst = min((g / b if b else 1.0) for *_, g, b in rows)
        bad = [r for r in rows if r[3] > r[4]]
        print(f"subset: {len(rows)} checks, worst greedy/exhaustive ratio {worst:.4f}, "
              f"greedy above optimum: {len(bad)}")
        return EXIT_OK if not bad else 1
    if args.mode == "alloc":
        rows = oracle.allocation_report(args.seed, args.count)
        gap = max(cost - opt for _, cost, opt, _ in rows)
        poa = max(r for *_, r in rows)
        print(f"alloc: {len(rows)} instances, worst cost gap {gap:g}, worst PoA ratio {poa:.6f}")
        return EXIT_OK
    rows = oracle.nash_report(args.seed, args.count)
    for t, (inst, mat, worst, tol) in enumerate(rows):
        verdict = "ok" if worst.improvement <= tol + 1e-9 else "DEVIATION"
        print(f"nash[{t}] demands={inst.demands} caps={[n.capacity for n in inst.nodes]} "
              f"improvement={worst.improvement:g} tol={tol:g} {verdict}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qalloc", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a seeded experiment")
    run.add_argument("--config")
    run.add_argument("--sweep", action="store_true", help="standard sweep over m = 8, 10, 14")
    run.add_argument("--seed", type=int)
    run.add_argument("--trials", type=int)
    run.add_argument("--allocator", help="all|pragm|rr|random (comma separated)")
    run.add_argument("--out")
    run.set_defaults(func=_cmd_run)

    al = sub.add_parser("allocate", help="allocate one instance file")
    al.add_argument("--instance", required=True)
    al.add_argument("--strategy", default=Strategy.SPARSE_THEN_COST.value,
                    choices=[s.value for s in Strategy])
    al.add_argument("--mode", default="greedy", choices=[m.value for m in SubsetMode])
    al.add_argument("--out")
    al.set_defaults(func=_cmd_allocate)

    pa = sub.add_parser("partition", help="group one circuit's qubits for an allocation row")
    pa.add_argument("--circuit", required=True)
    pa.add_argument("--row", required=True, help="e.g. 3,3,0,0")
    pa.add_argument("--mode", default="greedy", choices=[m.value for m in SubsetMode])
    pa.set_defaults(func=_cmd_partition)

    orc = sub.add_parser("oracle", help="compare heuristics with brute force")
    orc.add_argument("--mode", required=True, choices=["subset", "alloc", "nash"])
    orc.add_argument("--seed", type=int, default=0)
    orc.add_argument("--count", type=int, default=20)
    orc.set_defaults(func=_cmd_oracle)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SizeGuardError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_SIZE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
