"""Modularity, community volumes, feasibility and the penalised Hamiltonian.

Everything here works from scratch on a full assignment vector and is meant
as the reference path: the sampler keeps incremental caches and is checked
against these functions in the test-suite.

Notation used in docstrings: ``W`` weights, ``d`` degrees, ``2m`` total
weight, ``f`` vertex volumes, ``F(v, x)`` the volume of the community of
``v`` and ``tau`` the minimum-volume threshold.  A community is *violating*
when its volume is at most ``tau``; an assignment is feasible when no
community violates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import VertexVolumes, WeightedGraph


def check_assignment(assignment, p: int) -> np.ndarray:
    """Return ``assignment`` as an int array after checking length and range."""
    x = np.asarray(assignment)
    if x.shape != (p,):
        raise ValueError(f"assignment has shape {x.shape}, expected ({p},)")
    if p and not np.issubdtype(x.dtype, np.integer):
        if not np.all(x == np.floor(x)):
            raise ValueError("community labels must be integers")
    x = x.astype(np.int64)
    if p and (x.min() < 0 or x.max() >= p):
        raise ValueError(f"community labels must lie in 0..{p - 1}")
    return x


def singletons(p: int) -> np.ndarray:
    return np.arange(p, dtype=np.int64)


def penalty_weights(graph: WeightedGraph) -> np.ndarray:
    """Per-vertex penalty weights ``|W_vv - d_v^2 / 2m| / m``."""
    d = graph.degrees
    two_m = graph.total_weight
    return np.abs(graph.self_weights - d * d / two_m) / graph.m


@dataclass(frozen=True)
class PenaltyContext:
    """Threshold ``tau``, global multiplier ``lam`` and per-vertex weights."""

    tau: int
    lam: float
    lambda_v: np.ndarray

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError("tau must be non-negative")
        if self.lam < 0:
            raise ValueError("penalty multiplier must be non-negative")

    @classmethod
    def for_graph(cls, graph: WeightedGraph, tau: int, lam: float) -> "PenaltyContext":
        _require_weight(graph)
        return cls(int(tau), float(lam), penalty_weights(graph))


def _require_weight(graph: WeightedGraph) -> None:
    if not graph.total_weight > 0:
        raise ValueError("modularity is undefined on a graph with zero total weight")


def modularity(graph: WeightedGraph, assignment) -> float:
    """Newman modularity of ``assignment``, diagonal terms included.

    Computed per community as ``(W_in(c) - D(c)^2 / 2m) / 2m`` where
    ``W_in`` is the ordered-pair internal weight and ``D`` the summed degree.
    """
    _require_weight(graph)
    p = graph.vertex_count
    x = check_assignment(assignment, p)
    W = graph.weights
    rows = np.repeat(np.arange(p), np.diff(W.indptr))
    same = x[rows] == x[W.indices]
    row_in = np.bincount(rows[same], weights=W.data[same], minlength=p)
    k = int(x.max()) + 1
    w_in = np.bincount(x, weights=row_in, minlength=k)
    deg = np.bincount(x, weights=graph.degrees, minlength=k)
    two_m = graph.total_weight
    terms = w_in - deg * (deg / two_m)
    # fsum is order independent, so relabelling communities changes nothing
    return math.fsum(terms.tolist()) / two_m


def community_volumes(volumes: VertexVolumes, assignment) -> np.ndarray:
    """``F(v, x)`` for every vertex at once."""
    x = check_assignment(assignment, len(volumes))
    totals = np.zeros(len(volumes), dtype=np.int64)
    np.add.at(totals, x, volumes.volumes)
    return totals[x]


def community_volume(volumes: VertexVolumes, assignment, v: int) -> int:
    """Total volume of the community containing ``v``."""
    x = check_assignment(assignment, len(volumes))
    if not 0 <= v < len(x):
        raise IndexError(f"vertex {v} out of range")
    return int(volumes.volumes[x == x[v]].sum())


def infeasibility(volumes: VertexVolumes, assignment, tau: int) -> int:
    """1 if some community has volume at most ``tau``, else 0."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    F = community_volumes(volumes, assignment)
    if F.size == 0:
        return 0
    return int(F.min() <= tau)


def is_feasible(volumes: VertexVolumes, assignment, tau: int) -> bool:
    return infeasibility(volumes, assignment, tau) == 0


def chi(volumes: VertexVolumes, assignment, v: int, tau: int) -> int:
    """Combined penalty indicator of vertex ``v``.

    ``1{F(v,x) <= tau}`` plus, when the assignment is infeasible, a second
    unit if ``v`` is special and its community would still exceed ``tau``
    without it (its volume is surplus and could rescue a violating
    community elsewhere).
    """
    x = check_assignment(assignment, len(volumes))
    if not 0 <= v < len(x):
        raise IndexError(f"vertex {v} out of range")
    F = community_volumes(volumes, x)
    f_v = int(volumes.volumes[v])
    violating = int(F[v] <= tau)
    infeasible = int(F.min() <= tau)
    surplus = int(f_v > 0 and F[v] - f_v > tau)
    return violating + infeasible * surplus


def external_field(graph: WeightedGraph, volumes: VertexVolumes, assignment, ctx: PenaltyContext) -> float:
    """``-(lam / m) * sum_v |W_vv - d_v^2/2m| * 1{F(v,x) <= tau}``."""
    if ctx.lam == 0:
        return 0.0
    F = community_volumes(volumes, assignment)
    d = graph.degrees
    raw = np.abs(graph.self_weights - d * d / graph.total_weight)
    return float(-ctx.lam / graph.m * raw[F <= ctx.tau].sum())


def hamiltonian(graph: WeightedGraph, volumes: VertexVolumes, assignment, ctx: PenaltyContext) -> float:
    """Modularity plus the constraint penalty (external field)."""
    return modularity(graph, assignment) + external_field(graph, volumes, assignment, ctx)


def conditional_log_weight(
    graph: WeightedGraph,
    volumes: VertexVolumes,
    assignment,
    v: int,
    candidate_label: int,
    ctx: PenaltyContext,
    theta: float,
) -> float:
    """Unnormalised log-probability of giving ``v`` the label ``candidate_label``.

    ``(theta/m) * [sum_{u != v, x_u = c} (W_uv - d_u d_v / 2m)
    - lam * |W_vv - d_v^2/2m| * chi(v, x')]`` with ``x'`` equal to ``x``
    except ``x'_v = c``.  Only labels currently in use are valid candidates.
    """
    _require_weight(graph)
    x = check_assignment(assignment, graph.vertex_count)
    if not 0 <= v < len(x):
        raise IndexError(f"vertex {v} out of range")
    if candidate_label not in set(x.tolist()):
        raise ValueError(f"label {candidate_label} is not in use")
    if theta <= 0:
        raise ValueError("inverse temperature must be positive")
    two_m = graph.total_weight
    d = graph.degrees
    members = np.flatnonzero(x == candidate_label)
    members = members[members != v]
    row = graph.weights.getrow(v).toarray().ravel()
    interaction = float(np.sum(row[members] - d[members] * d[v] / two_m))
    penalty = 0.0
    if ctx.lam:
        moved = x.copy()
        moved[v] = candidate_label
        raw = abs(graph.self_weights[v] - d[v] * d[v] / two_m)
        penalty = ctx.lam * raw * chi(volumes, moved, v, ctx.tau)
    return theta / graph.m * (interaction - penalty)
