"""Command-line entry point: ``detect``, ``compare``, ``count``, ``generate``.

Exit codes: 0 success, 2 invalid configuration, 3 unreadable or malformed
input, 4 no feasible assignment for the requested threshold (unconstrained
results are still written).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import io as cio
from .analysis import compare
from .combinatorics import (
    count_feasible_enumerated,
    count_feasible_exact,
    count_feasible_paper,
    ordered_bell,
    stirling2,
)
from .generator import PlantedSpec, generate
from .graph import VertexVolumes, build_graph
from .objective import is_feasible
from .optimizer import EnsembleConfig, PenaltySchedule, default_tau, run_ensemble
from .sampler import DEFAULT_THETA_CAP, CoolingSchedule

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARSE = 3
EXIT_INFEASIBLE = 4

DEFAULT_COOLING = "exp2:m"
MAX_COUNT_P = 200
MAX_ENUMERATE_P = 10

log = logging.getLogger("ccdetect")


class ConfigError(ValueError):
    pass


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text} is not a positive integer")
    return value


def _tau(text: str):
    if text == "auto":
        return "auto"
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("tau must be 'auto' or a non-negative integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ccdetect", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("detect", help="find communities under a minimum-volume constraint")
    d.add_argument("--edges", required=True, help="edge list, one 'u v w' per line")
    d.add_argument("--volumes", help="volume file, one 'v f' per line (absent vertices have 0)")
    d.add_argument("--vertices", type=_positive, help="vertex count (default: largest index + 1)")
    d.add_argument("--tau", type=_tau, default="auto", help="threshold, or 'auto' for mean volume per unconstrained community")
    d.add_argument(
        "--penalty", action="append", default=None,
        help="penalty preset none|always|fold:J|end; repeat for several (default: end)",
    )
    d.add_argument("--cooling", default=DEFAULT_COOLING, help="constant:THETA | exp2[:THETA0] | exp2:m | greedy")
    d.add_argument("--theta-cap", type=float, default=DEFAULT_THETA_CAP, help="arg-max above this inverse temperature")
    d.add_argument("--sweeps", type=_positive, default=30, help="sweeps per round (T)")
    d.add_argument("--rounds", type=_positive, default=5, help="maximum rounds per penalty phase (R)")
    d.add_argument("--chains", type=_positive, default=250, help="chains per config (N)")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--workers", type=_positive, default=1)
    d.add_argument("--fast", action="store_true", help="only score neighbouring labels")
    d.add_argument("--out", required=True, help="output directory")

    c = sub.add_parser("compare", help="compare two assignments")
    c.add_argument("a", help="first assignment CSV (e.g. unconstrained)")
    c.add_argument("b", help="second assignment CSV (e.g. constrained)")
    c.add_argument("--volumes", help="volume file")
    c.add_argument("--tau", type=_tau, default=None, help="threshold for the volume fractions")
    c.add_argument("--out", help="report path (default: stdout)")

    n = sub.add_parser("count", help="partition counts for p vertices, r of them special")
    n.add_argument("p", type=int)
    n.add_argument("r", type=int)

    g = sub.add_parser("generate", help="write a planted-partition instance")
    g.add_argument("--spec", required=True, help="JSON instance description")
    g.add_argument("--out", required=True, help="output directory")
    return parser


def _load_instance(args):
    triples, top = cio.read_edge_list(args.edges)
    vol_map = cio.read_volume_map(args.volumes) if args.volumes else {}
    p = max(top, max(vol_map, default=-1) + 1)
    if args.vertices is not None:
        if args.vertices < p:
            raise ConfigError(f"--vertices {args.vertices} is smaller than the largest index in the inputs")
        p = args.vertices
    if p == 0:
        raise cio.ParseError(args.edges, None, "no vertices")
    graph = build_graph(triples, p)
    if not graph.total_weight > 0:
        raise cio.ParseError(args.edges, None, "graph has zero total weight")
    return graph, VertexVolumes.from_mapping(vol_map, p)


def cmd_detect(args) -> int:
    started = time.perf_counter()
    try:
        presets = [PenaltySchedule.parse(t) for t in (args.penalty or ["end"])]
        cooling = CoolingSchedule.parse(args.cooling)
        cooling = CoolingSchedule(cooling.kind, cooling.theta0, args.theta_cap, cooling.table, cooling.per_weight)
    except ValueError as err:
        raise ConfigError(str(err)) from None
    graph, volumes = _load_instance(args)
    T, R, N = args.sweeps, args.rounds, args.chains
    none = PenaltySchedule("zero")
    constrained = [pen for pen in presets if pen != none]
    configs = [EnsembleConfig(none, cooling, T, R)] + [EnsembleConfig(pen, cooling, T, R) for pen in constrained]
    opts = dict(workers=args.workers, neighbour_only=args.fast, keep_snapshots=False)

    if args.tau == "auto":
        log.info("running %d unconstrained chains to set tau", N)
        pilot = run_ensemble(graph, volumes, 0, configs[:1], N, args.seed, **opts)
        tau = default_tau(volumes, pilot.x_ddagger)
        log.info("tau = %d", tau)
    else:
        tau = args.tau
    log.info("running %d configs x %d chains", len(configs), N)
    result = run_ensemble(graph, volumes, tau, configs, N, args.seed, **opts)

    out = Path(args.out)
    rows = ((i * N + c, rec) for i, c, trace in result.all_traces() for rec in trace.records)
    cio.write_trace(out / "trace.csv", rows)
    cio.write_assignment(out / "assignment_unconstrained.csv", result.x_ddagger)
    if result.x_dagger is not None:
        assert is_feasible(volumes, result.x_dagger, tau)
        cio.write_assignment(out / "assignment.csv", result.x_dagger)
    summary = {
        "status": "ok" if result.x_dagger is not None else "no_feasible_assignment",
        "vertices": graph.vertex_count,
        "total_weight": graph.total_weight,
        "total_volume": volumes.total,
        "special_vertices": len(volumes.special_set),
        "tau": tau,
        "tau_mode": "auto" if args.tau == "auto" else "explicit",
        "penalty": [cfg.penalty.label for cfg in configs],
        "cooling": args.cooling,
        "theta_cap": args.theta_cap,
        "sweeps": T,
        "rounds": R,
        "chains": N,
        "seed": args.seed,
        "fast": args.fast,
        "q_best_overall": result.q_ddagger,
        "communities_best_overall": len(np.unique(result.x_ddagger)),
        "best_overall_at": list(result.ddagger_at),
        "q_best_feasible": result.q_dagger,
        "communities_best_feasible": None if result.x_dagger is None else len(np.unique(result.x_dagger)),
        "best_feasible_at": None if result.dagger_at is None else list(result.dagger_at),
        "modularity_reduction": None if result.q_dagger is None else result.q_ddagger - result.q_dagger,
        "diagnostic": result.diagnostic,
    }
    cio.write_summary(out / "summary.txt", summary)
    # wall time lives apart so that the summary is reproducible byte for byte
    cio.write_summary(out / "timing.txt", {"wall_time_seconds": time.perf_counter() - started})
    if result.x_dagger is None:
        print(f"no feasible assignment: {result.diagnostic}", file=sys.stderr)
        return EXIT_INFEASIBLE
    print(f"Q(best overall) = {cio.fmt(result.q_ddagger)}; Q(best feasible) = {cio.fmt(result.q_dagger)}; tau = {tau}")
    return EXIT_OK


def cmd_compare(args) -> int:
    a = cio.read_assignment(args.a)
    b = cio.read_assignment(args.b)
    if len(a) != len(b):
        raise ConfigError(f"assignments cover {len(a)} and {len(b)} vertices")
    volumes = cio.read_volumes(args.volumes, len(a)) if args.volumes else None
    tau = args.tau
    if tau == "auto":
        if volumes is None:
            raise ConfigError("--tau auto needs --volumes")
        tau = default_tau(volumes, a)
    text = cio.format_report(compare(a, b, volumes, tau))
    if args.out:
        cio.atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_count(args) -> int:
    p, r = args.p, args.r
    if not 0 <= r <= p <= MAX_COUNT_P:
        raise ConfigError(f"need 0 <= r <= p <= {MAX_COUNT_P}")
    items = {
        "p": p,
        "r": r,
        "stirling_row_p": [stirling2(p, k) for k in range(p + 1)],
        "ordered_bell_r": ordered_bell(r),
        "feasible_paper_formula": count_feasible_paper(p, r),
        "feasible_exact": count_feasible_exact(p, r),
    }
    if p <= MAX_ENUMERATE_P:
        items["feasible_enumerated"] = count_feasible_enumerated(p, r)
    sys.stdout.write(cio.format_summary(items))
    return EXIT_OK


def cmd_generate(args) -> int:
    try:
        data = json.loads(Path(args.spec).read_text())
    except OSError as err:
        raise cio.ParseError(args.spec, None, err.strerror or str(err)) from None
    except json.JSONDecodeError as err:
        raise cio.ParseError(args.spec, err.lineno, err.msg) from None
    try:
        spec = PlantedSpec.from_dict(data)
    except (ValueError, TypeError) as err:
        raise ConfigError(f"invalid spec: {err}") from None
    graph, volumes, truth = generate(spec)
    out = Path(args.out)
    cio.write_edge_list(out / "edges.txt", graph)
    cio.write_volumes(out / "volumes.txt", volumes)
    cio.write_assignment(out / "truth.csv", truth)
    print(f"{graph.vertex_count} vertices, {len(graph.edges())} edges, {len(volumes.special_set)} special")
    return EXIT_OK


COMMANDS = {"detect": cmd_detect, "compare": cmd_compare, "count": cmd_count, "generate": cmd_generate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except cio.ParseError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_PARSE
    except (ConfigError, IndexError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG if isinstance(err, ConfigError) else EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
