"""Gibbs-style label resampling with annealing (the local optimisation step).

Each sweep visits every vertex once in a fresh random order.  At a visit the
vertex may take any label that is currently in use; the candidate weights are
the conditional probabilities of the penalised Potts model, computed from
cached per-community degree and volume totals instead of from scratch.
Labels that lose their last member are never used again, so the number of
communities along a chain can only go down.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from .graph import VertexVolumes, WeightedGraph
from .objective import (
    PenaltyContext,
    check_assignment,
    external_field,
    modularity,
    singletons,
)
from .trace import ChainTrace, SweepRecord

DEFAULT_THETA_CAP = 2.0**40
# scores closer than this (relative to the vertex degree) count as tied
TIE_RTOL = 1e-12


def make_rng(seed: int | None, chain: int = 0) -> np.random.Generator:
    """Counter-based stream for chain ``chain`` of a run seeded with ``seed``."""
    seq = np.random.SeedSequence(seed, spawn_key=(chain,))
    return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class CoolingSchedule:
    """Inverse temperature as a function of the (1-based) sweep index.

    ``constant`` keeps ``theta0``; ``exp2`` doubles every sweep,
    ``theta0 * 2**(t-1)``; ``table`` reads ``table[t-1]`` and repeats the last
    entry.  With ``per_weight`` the values are multiplied by ``m``, so the
    exponent ``theta/m`` times a score no longer depends on the overall weight
    scale of the graph.  Above ``theta_cap`` a visit picks an arg-max label
    instead of sampling.
    """

    kind: str = "constant"
    theta0: float = 1.0
    theta_cap: float = DEFAULT_THETA_CAP
    table: tuple[float, ...] = ()
    per_weight: bool = False

    def __post_init__(self):
        if self.kind not in ("constant", "exp2", "table"):
            raise ValueError(f"unknown cooling schedule {self.kind!r}")
        if self.kind == "table":
            if not self.table or min(self.table) <= 0:
                raise ValueError("a table schedule needs positive entries")
        elif not self.theta0 > 0:
            raise ValueError("theta0 must be positive")
        if not self.theta_cap > 0:
            raise ValueError("theta_cap must be positive")

    @classmethod
    def constant(cls, theta: float, theta_cap: float = DEFAULT_THETA_CAP) -> "CoolingSchedule":
        return cls("constant", theta, theta_cap)

    @classmethod
    def exponential(
        cls, theta0: float = 1.0, theta_cap: float = DEFAULT_THETA_CAP, per_weight: bool = False
    ) -> "CoolingSchedule":
        return cls("exp2", theta0, theta_cap, per_weight=per_weight)

    @classmethod
    def greedy(cls) -> "CoolingSchedule":
        return cls("constant", math.inf)

    @classmethod
    def custom(cls, table, theta_cap: float = DEFAULT_THETA_CAP) -> "CoolingSchedule":
        return cls("table", 1.0, theta_cap, tuple(float(t) for t in table))

    @classmethod
    def parse(cls, text: str) -> "CoolingSchedule":
        """Parse ``constant:THETA``, ``exp2``, ``exp2:THETA0``, ``exp2:m`` or ``greedy``.

        ``exp2:m`` starts at ``theta0 = m`` (see ``per_weight``).
        """
        name, _, arg = text.partition(":")
        try:
            if name == "constant" and arg:
                return cls.constant(float(arg))
            if name == "exp2" and arg == "m":
                return cls.exponential(1.0, per_weight=True)
            if name == "exp2":
                return cls.exponential(float(arg) if arg else 1.0)
            if name == "greedy" and not arg:
                return cls.greedy()
        except ValueError as err:
            raise ValueError(f"bad cooling schedule {text!r}: {err}") from None
        raise ValueError(f"bad cooling schedule {text!r}")

    def theta(self, t: int, m: float = 1.0) -> float:
        """Inverse temperature of sweep ``t``; ``m`` only matters with ``per_weight``."""
        if t < 1:
            raise ValueError("sweep index starts at 1")
        scale = m if self.per_weight else 1.0
        if self.kind == "constant":
            return self.theta0 * scale
        if self.kind == "exp2":
            if t > 1100:
                return math.inf
            return self.theta0 * scale * 2.0 ** (t - 1)
        return self.table[min(t, len(self.table)) - 1] * scale

    def is_greedy(self, theta: float) -> bool:
        return theta > self.theta_cap or math.isinf(theta)


class SweepState:
    """Mutable chain state: labels plus per-community caches.

    Community totals are indexed by label.  ``live`` is kept sorted; that
    order fixes which label a given uniform draw maps to.
    """

    def __init__(self, graph: WeightedGraph, volumes: VertexVolumes, initial, tau: int, rng):
        p = graph.vertex_count
        if len(volumes) != p:
            raise ValueError(f"volumes have length {len(volumes)}, graph has {p} vertices")
        labels = check_assignment(initial, p).tolist()
        d = graph.local_view.degrees
        f = volumes.as_list
        self.labels = labels
        self.size = [0] * p
        self.degree = [0.0] * p
        self.volume = [0] * p
        for v, c in enumerate(labels):
            self.size[c] += 1
            self.degree[c] += d[v]
            self.volume[c] += f[v]
        self.live = sorted(set(labels))
        self.rng = rng
        self.tau = int(tau)
        self.n_violating = sum(1 for c in self.live if self.volume[c] <= self.tau)

    @property
    def assignment(self) -> np.ndarray:
        return np.array(self.labels, dtype=np.int64)

    @property
    def live_labels(self) -> tuple[int, ...]:
        return tuple(self.live)

    @property
    def community_count(self) -> int:
        return len(self.live)

    @property
    def community_volumes(self) -> dict[int, int]:
        return {c: self.volume[c] for c in self.live}

    @property
    def infeasible(self) -> int:
        return int(self.n_violating > 0)

    def retarget(self, tau: int) -> None:
        self.tau = int(tau)
        self.n_violating = sum(1 for c in self.live if self.volume[c] <= self.tau)

    def move(self, v: int, new: int, d_v: float, f_v: int) -> None:
        old = self.labels[v]
        if new == old:
            return
        tau = self.tau
        size, volume, degree = self.size, self.volume, self.degree
        self.n_violating -= (volume[old] <= tau) + (volume[new] <= tau)
        size[old] -= 1
        degree[old] -= d_v
        volume[old] -= f_v
        size[new] += 1
        degree[new] += d_v
        volume[new] += f_v
        self.labels[v] = new
        if size[old] == 0:
            # extinction: the label is never offered again
            degree[old] = 0.0
            del self.live[bisect.bisect_left(self.live, old)]
        else:
            self.n_violating += volume[old] <= tau
        self.n_violating += volume[new] <= tau

    def cache_mismatches(self, graph: WeightedGraph, volumes: VertexVolumes, atol: float = 1e-9) -> list[str]:
        """Compare the caches with a recomputation from the labels."""
        fresh = SweepState(graph, volumes, self.labels, self.tau, None)
        problems = []
        if fresh.live != self.live:
            problems.append(f"live labels {self.live} != {fresh.live}")
        for c in fresh.live:
            if fresh.size[c] != self.size[c]:
                problems.append(f"size of {c}: {self.size[c]} != {fresh.size[c]}")
            if fresh.volume[c] != self.volume[c]:
                problems.append(f"volume of {c}: {self.volume[c]} != {fresh.volume[c]}")
            if abs(fresh.degree[c] - self.degree[c]) > atol * max(1.0, abs(fresh.degree[c])):
                problems.append(f"degree of {c}: {self.degree[c]} != {fresh.degree[c]}")
        if fresh.n_violating != self.n_violating:
            problems.append(f"violating count {self.n_violating} != {fresh.n_violating}")
        return problems


def _candidate_scores(state: SweepState, view, f: list[int], two_m: float, lam: float, v: int, neighbour_only: bool):
    """Labels ``v`` may take and their scores before the ``theta/m`` factor."""
    labels = state.labels
    a = labels[v]
    link: dict[int, float] = {}
    for u, w in zip(view.neighbours[v], view.neighbour_weights[v]):
        c = labels[u]
        link[c] = link.get(c, 0.0) + w
    d_v = view.degrees[v]
    k = d_v / two_m
    if neighbour_only:
        cands = sorted(link.keys() | {a})
    else:
        cands = state.live
    degree = state.degree
    scores = [link.get(c, 0.0) - k * (degree[c] - d_v if c == a else degree[c]) for c in cands]

    raw = view.penalty_raw[v]
    if lam and raw:
        tau = state.tau
        volume = state.volume
        f_v = f[v]
        vol_a = volume[a]
        base = state.n_violating - (vol_a <= tau)
        if state.size[a] > 1:
            base += vol_a - f_v <= tau
        weight = lam * raw
        for i, c in enumerate(cands):
            if c == a:
                new_vol = vol_a
                infeasible_after = state.n_violating > 0
            else:
                vol_c = volume[c]
                new_vol = vol_c + f_v
                infeasible_after = base - (vol_c <= tau) + (new_vol <= tau) > 0
            chi = (new_vol <= tau) + (infeasible_after and f_v > 0 and new_vol - f_v > tau)
            if chi:
                scores[i] -= weight * chi
    return cands, scores


def _choose(cands, scores, theta: float, m: float, greedy: bool, u: float, tie_scale: float) -> int:
    best = max(scores)
    if greedy:
        tol = TIE_RTOL * tie_scale
        tied = [c for c, s in zip(cands, scores) if s >= best - tol]
        return tied[min(int(u * len(tied)), len(tied) - 1)]
    beta = theta / m
    weights = [math.exp(beta * (s - best)) for s in scores]
    target = u * math.fsum(weights)
    acc = 0.0
    for c, w in zip(cands, weights):
        acc += w
        if target < acc:
            return c
    return cands[-1]


def candidate_log_weights(
    state: SweepState,
    graph: WeightedGraph,
    volumes: VertexVolumes,
    ctx: PenaltyContext,
    theta: float,
    v: int,
    neighbour_only: bool = False,
) -> tuple[list[int], np.ndarray]:
    """Candidate labels for ``v`` and their unnormalised log-weights."""
    if state.tau != ctx.tau:
        state.retarget(ctx.tau)
    cands, scores = _candidate_scores(
        state, graph.local_view, volumes.as_list, graph.total_weight, ctx.lam, v, neighbour_only
    )
    return list(cands), theta / graph.m * np.asarray(scores)


def resample_vertex(
    state: SweepState,
    graph: WeightedGraph,
    volumes: VertexVolumes,
    ctx: PenaltyContext,
    theta: float,
    v: int,
    *,
    theta_cap: float = DEFAULT_THETA_CAP,
    neighbour_only: bool = False,
    u: float | None = None,
) -> SweepState:
    """Draw a new label for ``v`` from its conditional distribution.

    ``u`` is the uniform variate driving the draw; by default it is taken
    from ``state.rng``.  The state is updated in place and returned.
    """
    if not 0 <= v < graph.vertex_count:
        raise IndexError(f"vertex {v} out of range")
    if not theta > 0:
        raise ValueError("inverse temperature must be positive")
    if state.tau != ctx.tau:
        state.retarget(ctx.tau)
    view = graph.local_view
    cands, scores = _candidate_scores(state, view, volumes.as_list, graph.total_weight, ctx.lam, v, neighbour_only)
    if u is None:
        u = state.rng.random()
    tie_scale = view.degrees[v] + ctx.lam * view.penalty_raw[v]
    greedy = theta > theta_cap or math.isinf(theta)
    new = _choose(cands, scores, theta, graph.m, greedy, u, tie_scale)
    state.move(v, new, view.degrees[v], volumes.as_list[v])
    return state


def _record(graph, volumes, state, ctx, round_index, sweep, theta):
    x = state.assignment
    q = modularity(graph, x)
    h = q + external_field(graph, volumes, x, ctx) if state.infeasible else q
    return x, SweepRecord(round_index, sweep, theta, ctx.lam, q, h, state.infeasible, state.community_count)


def run_sweeps(
    graph: WeightedGraph,
    volumes: VertexVolumes,
    ctx: PenaltyContext,
    cooling: CoolingSchedule,
    sweeps: int,
    state: SweepState,
    trace: ChainTrace,
    *,
    round_index: int = 1,
    sweep_offset: int = 0,
    parent: np.ndarray | None = None,
    neighbour_only: bool = False,
    halt_when_stable: bool = False,
    keep_snapshots: bool = True,
) -> int:
    """Run up to ``sweeps`` sweeps on ``state``, appending to ``trace``.

    ``sweep_offset`` shifts the index handed to the cooling schedule and
    ``parent`` maps the vertices of ``graph`` back to original vertices for
    the snapshots.  Returns the number of label changes made.
    """
    p = graph.vertex_count
    view = graph.local_view
    f = volumes.as_list
    two_m = graph.total_weight
    m = graph.m
    lam = ctx.lam
    rng = state.rng
    if state.tau != ctx.tau:
        state.retarget(ctx.tau)
    total_changes = 0
    for t in range(1, sweeps + 1):
        theta = cooling.theta(sweep_offset + t, m)
        greedy = cooling.is_greedy(theta)
        order = rng.permutation(p).tolist()
        draws = rng.random(p).tolist()
        changes = 0
        for v, u in zip(order, draws):
            cands, scores = _candidate_scores(state, view, f, two_m, lam, v, neighbour_only)
            if len(cands) == 1:
                continue
            d_v = view.degrees[v]
            new = _choose(cands, scores, theta, m, greedy, u, d_v + lam * view.penalty_raw[v])
            if new != state.labels[v]:
                state.move(v, new, d_v, f[v])
                changes += 1
        total_changes += changes
        x, record = _record(graph, volumes, state, ctx, round_index, t, theta)
        trace.append(record, x if parent is None else x[parent], keep_snapshots)
        if halt_when_stable and greedy and changes == 0:
            break
    return total_changes


def local_optimize(
    graph: WeightedGraph,
    volumes: VertexVolumes,
    ctx: PenaltyContext,
    cooling: CoolingSchedule,
    sweeps: int,
    initial=None,
    rng_seed: int | None = 0,
    *,
    chain: int = 0,
    neighbour_only: bool = False,
    halt_when_stable: bool = False,
) -> ChainTrace:
    """Run ``sweeps`` full sweeps of label resampling from ``initial``.

    The default start is every vertex in its own community.  The returned
    trace holds the start state (sweep 0) followed by one record and
    snapshot per sweep.
    """
    if sweeps < 1:
        raise ValueError("need at least one sweep")
    p = graph.vertex_count
    x0 = singletons(p) if initial is None else check_assignment(initial, p)
    state = SweepState(graph, volumes, x0, ctx.tau, make_rng(rng_seed, chain))
    trace = ChainTrace()
    x, record = _record(graph, volumes, state, ctx, 1, 0, 0.0)
    trace.append(record, x)
    run_sweeps(
        graph, volumes, ctx, cooling, sweeps, state, trace,
        neighbour_only=neighbour_only, halt_when_stable=halt_when_stable,
    )
    return trace
