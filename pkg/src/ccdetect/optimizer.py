"""Alternating local optimisation and folding under a penalty schedule.

A chain runs rounds of label resampling; after every round the communities
found are folded into single vertices and the next round starts from
singletons on the folded graph.  The penalty multiplier is 0 or 1 per round
according to a :class:`PenaltySchedule`.  Ensembles of chains are reduced to
two estimates: the best assignment traversed overall (``x_ddagger``) and the
best feasible one (``x_dagger``).
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .graph import VertexVolumes, WeightedGraph, first_appearance_labels, fold
from .objective import PenaltyContext, singletons
from .sampler import CoolingSchedule, SweepState, make_rng, run_sweeps
from .trace import BestState, ChainTrace, SweepRecord

log = logging.getLogger(__name__)

__all__ = [
    "BestState",
    "ChainTrace",
    "EnsembleConfig",
    "EnsembleResult",
    "PenaltySchedule",
    "SweepRecord",
    "constrained_optimize",
    "default_tau",
    "run_ensemble",
]


@dataclass(frozen=True)
class PenaltySchedule:
    """Binary penalty multiplier per round.

    ``zero`` and ``one`` are constant.  ``switch`` keeps the penalty off for
    the first ``switch_round`` rounds (fold points) and on afterwards; with
    ``switch_round=None`` it switches once the unpenalised rounds stop
    merging communities, i.e. at the end of the unconstrained chain.
    """

    kind: str = "switch"
    switch_round: int | None = None

    def __post_init__(self):
        if self.kind not in ("zero", "one", "switch"):
            raise ValueError(f"unknown penalty schedule {self.kind!r}")
        if self.switch_round is not None and self.switch_round < 1:
            raise ValueError("switch_round counts folds and starts at 1")

    @classmethod
    def parse(cls, text: str) -> "PenaltySchedule":
        """Parse a CLI preset: ``none``, ``always``, ``fold:J`` or ``end``."""
        if text == "none":
            return cls("zero")
        if text == "always":
            return cls("one")
        if text == "end":
            return cls("switch")
        name, _, arg = text.partition(":")
        if name == "fold" and arg.isdigit() and int(arg) >= 1:
            return cls("switch", int(arg))
        raise ValueError(f"bad penalty preset {text!r}; use none, always, fold:J or end")

    @property
    def label(self) -> str:
        if self.kind == "zero":
            return "none"
        if self.kind == "one":
            return "always"
        return "end" if self.switch_round is None else f"fold:{self.switch_round}"

    @property
    def ends_penalised(self) -> bool:
        return self.kind != "zero"

    def lam(self, r: int) -> float:
        """Multiplier of round ``r`` when no early switch happens."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "one":
            return 1.0
        if self.switch_round is None:
            return 0.0
        return 1.0 if r > self.switch_round else 0.0

    def phases(self, rounds: int) -> list[tuple[float, int]]:
        """``(multiplier, maximum rounds)`` blocks making up a chain."""
        if self.kind == "zero":
            return [(0.0, rounds)]
        if self.kind == "one":
            return [(1.0, rounds)]
        unpenalised = rounds if self.switch_round is None else self.switch_round
        return [(0.0, unpenalised), (1.0, rounds)]


class EnsembleConfig(NamedTuple):
    penalty: PenaltySchedule
    cooling: CoolingSchedule
    sweeps: int
    rounds: int


def constrained_optimize(
    graph: WeightedGraph,
    volumes: VertexVolumes,
    tau: int,
    penalty: PenaltySchedule,
    cooling: CoolingSchedule,
    sweeps: int,
    rounds: int,
    rng_seed: int | None = 0,
    *,
    chain: int = 0,
    neighbour_only: bool = False,
    early_stop: bool = True,
    keep_snapshots: bool = True,
) -> ChainTrace:
    """Run one chain of alternating resampling rounds and folds.

    Each phase of the penalty schedule runs at most ``rounds`` rounds of
    ``sweeps`` sweeps; with ``early_stop`` a phase ends as soon as a round
    leaves every (folded) vertex in its own community.  The cooling schedule
    sees a sweep index that keeps counting across rounds.  Snapshots are
    expressed on the vertices of ``graph``.
    """
    if sweeps < 1 or rounds < 1:
        raise ValueError("sweeps and rounds must both be at least 1")
    if len(volumes) != graph.vertex_count:
        raise ValueError("volumes and graph disagree on the vertex count")
    rng = make_rng(rng_seed, chain)
    phases = penalty.phases(rounds)
    g, vols = graph, volumes
    parent = np.arange(graph.vertex_count)
    trace = ChainTrace()

    start_ctx = PenaltyContext.for_graph(g, tau, phases[0][0])
    state = SweepState(g, vols, singletons(g.vertex_count), tau, rng)
    _append_initial(trace, g, vols, state, start_ctx)

    r = 0
    offset = 0
    for lam, max_rounds in phases:
        for _ in range(max_rounds):
            r += 1
            ctx = PenaltyContext.for_graph(g, tau, lam)
            state = SweepState(g, vols, singletons(g.vertex_count), tau, rng)
            run_sweeps(
                g, vols, ctx, cooling, sweeps, state, trace,
                round_index=r, sweep_offset=offset, parent=parent,
                neighbour_only=neighbour_only, keep_snapshots=keep_snapshots,
            )
            offset += sweeps
            before = g.vertex_count
            g, vols, fmap = fold(g, vols, state.assignment)
            parent = fmap.parent[parent]
            trace.fold_rounds.append(r)
            if early_stop and g.vertex_count == before:
                break
    return trace


def _append_initial(trace, graph, volumes, state, ctx):
    from .objective import hamiltonian, modularity

    x = state.assignment
    q = modularity(graph, x)
    h = hamiltonian(graph, volumes, x, ctx)
    trace.append(SweepRecord(1, 0, 0.0, ctx.lam, q, h, state.infeasible, state.community_count), x)


@dataclass
class EnsembleResult:
    """Reduction of an ensemble of chains.

    ``traces[i][c]`` is chain ``c`` of config ``i``.  Locations are
    ``(config, chain, round, sweep)``.
    """

    x_dagger: np.ndarray | None
    x_ddagger: np.ndarray
    traces: list[list[ChainTrace]]
    q_dagger: float | None = None
    q_ddagger: float = float("nan")
    dagger_at: tuple[int, int, int, int] | None = None
    ddagger_at: tuple[int, int, int, int] | None = None
    diagnostic: str | None = None
    configs: list[EnsembleConfig] = field(default_factory=list)

    def __iter__(self):
        # allows ``x_dagger, x_ddagger, traces = run_ensemble(...)``
        return iter((self.x_dagger, self.x_ddagger, self.traces))

    def all_traces(self):
        for i, chains in enumerate(self.traces):
            for c, trace in enumerate(chains):
                yield i, c, trace


def _run_chain(args):
    graph, volumes, tau, config, seed, chain, neighbour_only, keep_snapshots = args
    return constrained_optimize(
        graph, volumes, tau, config.penalty, config.cooling, config.sweeps, config.rounds,
        seed, chain=chain, neighbour_only=neighbour_only, keep_snapshots=keep_snapshots,
    )


def run_ensemble(
    graph: WeightedGraph,
    volumes: VertexVolumes,
    tau: int,
    configs: Sequence[EnsembleConfig | tuple],
    chains_per_config: int,
    seed: int | None = 0,
    *,
    workers: int = 1,
    neighbour_only: bool = False,
    keep_snapshots: bool = True,
) -> EnsembleResult:
    """Run ``chains_per_config`` chains for every config and pick the optima.

    Chain ``c`` draws from the stream ``(seed, c)`` under every config, so a
    chain that switches the penalty on at fold ``j`` retraces the
    unpenalised chain with the same index up to that fold.  Ties between
    equal modularities go to the earliest ``(config, chain, round, sweep)``.
    """
    if chains_per_config < 1:
        raise ValueError("need at least one chain per config")
    configs = [EnsembleConfig(*c) for c in configs]
    if not configs:
        raise ValueError("need at least one config")
    tasks = [
        (graph, volumes, tau, config, seed, c, neighbour_only, keep_snapshots)
        for config in configs
        for c in range(chains_per_config)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            flat = list(pool.map(_run_chain, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        flat = [_run_chain(t) for t in tasks]
    traces = [flat[i * chains_per_config:(i + 1) * chains_per_config] for i in range(len(configs))]

    best: BestState | None = None
    best_at = None
    best_feas: BestState | None = None
    feas_at = None
    for i, chains in enumerate(traces):
        for c, trace in enumerate(chains):
            b = trace.best_overall
            if best is None or b.modularity > best.modularity:
                best, best_at = b, (i, c, b.round, b.sweep)
            fb = trace.best_feasible
            if fb is not None and (best_feas is None or fb.modularity > best_feas.modularity):
                best_feas, feas_at = fb, (i, c, fb.round, fb.sweep)

    diagnostic = None
    if best_feas is None:
        if volumes.total <= tau:
            diagnostic = f"no feasible assignment exists: total volume {volumes.total} <= tau {tau}"
        else:
            diagnostic = "no feasible assignment was traversed by any chain"
        log.info(diagnostic)
    return EnsembleResult(
        x_dagger=None if best_feas is None else best_feas.assignment,
        x_ddagger=best.assignment,
        traces=traces,
        q_dagger=None if best_feas is None else best_feas.modularity,
        q_ddagger=best.modularity,
        dagger_at=feas_at,
        ddagger_at=best_at,
        diagnostic=diagnostic,
        configs=configs,
    )


def community_count(assignment) -> int:
    return len(np.unique(np.asarray(assignment)))


def default_tau(volumes: VertexVolumes, x_ddagger) -> int:
    """Mean volume per community of ``x_ddagger``, rounded down."""
    k = community_count(x_ddagger)
    if k < 1:
        raise ValueError("assignment has no communities")
    return volumes.total // k


def canonical(assignment) -> np.ndarray:
    """Labels renumbered ``0, 1, ...`` by first appearance."""
    return first_appearance_labels(assignment)
