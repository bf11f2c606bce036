"""Partition counting and exhaustive optimisation oracles for small graphs.

Counts are exact Python integers.  ``set_partitions`` enumerates restricted
growth strings in lexicographic order, which also fixes the tie-breaking of
:func:`brute_force_optimum` (the first maximiser wins).
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .graph import VertexVolumes, WeightedGraph

MAX_BRUTE_FORCE = 12
# sqrt(2 pi) / (2 log 2) and e log 2
RATIO_CONSTANT_LOWER = math.sqrt(2 * math.pi) / (2 * math.log(2))
RATIO_CONSTANT_UPPER = math.e * math.log(2)


@lru_cache(maxsize=None)
def _stirling_row(n: int) -> tuple[int, ...]:
    if n == 0:
        return (1,)
    prev = _stirling_row(n - 1)
    row = [0] * (n + 1)
    for k in range(1, n + 1):
        row[k] = (k * prev[k] if k < len(prev) else 0) + prev[k - 1]
    return tuple(row)


def stirling2(n: int, k: int) -> int:
    """Stirling number of the second kind via ``S(n,k) = k S(n-1,k) + S(n-1,k-1)``."""
    if n < 0 or k < 0:
        raise ValueError("n and k must be non-negative")
    if k > n:
        return 0
    if n > 2000:
        raise ValueError("n too large for the cached recurrence")
    for i in range(0, n, 200):
        # build the cache bottom-up to keep recursion shallow
        _stirling_row(i)
    return _stirling_row(n)[k]


def stirling2_explicit(n: int, k: int) -> int:
    """Alternating-sum form ``(1/k!) sum_j (-1)^(k-j) C(k,j) j^n``."""
    if n < 0 or k < 0:
        raise ValueError("n and k must be non-negative")
    total = sum((-1) ** (k - j) * math.comb(k, j) * j ** n for j in range(k + 1))
    return total // math.factorial(k)


def bell(n: int) -> int:
    return sum(stirling2(n, k) for k in range(n + 1))


def ordered_bell(r: int) -> int:
    """Number of ordered set partitions, ``sum_k S(r,k) k!``."""
    if r < 0:
        raise ValueError("r must be non-negative")
    if r == 0:
        return 1
    return sum(stirling2(r, k) * math.factorial(k) for k in range(1, r + 1))


def ordered_bell_approx(r: int) -> float:
    """Large-``r`` approximation ``r! / (2 (log 2)^(r+1))``."""
    return math.factorial(r) / (2 * math.log(2) ** (r + 1))


def count_feasible_paper(p: int, r: int) -> int:
    """``sum_{k=1}^{r} S(p-r,k) S(r,k) k!`` evaluated as written.

    This counts pairings of a partition of the non-special vertices with an
    equally long partition of the special ones, so every block holds both
    kinds.  It undercounts assignments whose blocks merely need one special
    vertex; see :func:`count_feasible_exact`.
    """
    _check_pr(p, r)
    return sum(stirling2(p - r, k) * stirling2(r, k) * math.factorial(k) for k in range(1, r + 1))


def count_feasible_exact(p: int, r: int) -> int:
    """Partitions of ``p`` vertices, ``r`` special, with a special vertex in every block.

    Partition the specials into ``k`` blocks, then send each non-special to
    one of them: ``sum_k S(r,k) k^(p-r)``.
    """
    _check_pr(p, r)
    return sum(stirling2(r, k) * k ** (p - r) for k in range(0, r + 1))


def _check_pr(p: int, r: int) -> None:
    if not 0 <= r <= p:
        raise ValueError(f"need 0 <= r <= p, got p={p}, r={r}")


def set_partitions(p: int) -> np.ndarray:
    """All set partitions of ``p`` items as restricted growth strings.

    Row ``i`` is a label vector with ``x[0] = 0`` and
    ``x[j] <= max(x[:j]) + 1``; rows are in lexicographic order.
    """
    if p < 0:
        raise ValueError("p must be non-negative")
    if p == 0:
        return np.zeros((1, 0), dtype=np.int8)
    rows = np.zeros((1, 1), dtype=np.int8)
    top = np.zeros(1, dtype=np.int8)
    for _ in range(1, p):
        reps = top.astype(np.int64) + 2
        idx = np.repeat(np.arange(len(rows)), reps)
        # position within each run: 0 .. top+1
        starts = np.cumsum(reps) - reps
        nxt = (np.arange(len(idx)) - np.repeat(starts, reps)).astype(np.int8)
        rows = np.column_stack([rows[idx], nxt])
        top = np.maximum(top[idx], nxt)
    return rows


def count_feasible_enumerated(p: int, r: int) -> int:
    """Count partitions with a special vertex in every block by enumeration.

    The first ``r`` vertices are taken as the special ones.
    """
    _check_pr(p, r)
    if r == 0:
        return int(p == 0)
    parts = set_partitions(p)
    n_blocks = parts.max(axis=1).astype(np.int64) + 1
    special_blocks = np.zeros((len(parts), p), dtype=bool)
    np.put_along_axis(special_blocks, parts[:, :r].astype(np.int64), True, axis=1)
    return int(np.sum(special_blocks.sum(axis=1) == n_blocks))


def _modularity_batch(W: np.ndarray, d: np.ndarray, parts: np.ndarray, two_m: float) -> np.ndarray:
    # per community c: internal ordered-pair weight minus D_c^2 / 2m
    p = W.shape[0]
    out = np.empty(len(parts))
    step = max(1, 1_000_000 // max(1, p * p * p))
    eye = np.eye(p, dtype=W.dtype)
    for lo in range(0, len(parts), step):
        chunk = parts[lo:lo + step].astype(np.int64)
        member = eye[chunk]  # (n, vertex, community) one-hot
        w_in = np.einsum("nuc,uv,nvc->nc", member, W, member)
        deg = member.transpose(0, 2, 1) @ d
        out[lo:lo + step] = (w_in - deg * (deg / two_m)).sum(axis=1) / two_m
    return out


def brute_force_optimum(
    graph: WeightedGraph, volumes: VertexVolumes | None, tau: int = 0, constrained: bool = False
) -> tuple[np.ndarray | None, float | None]:
    """Exhaustive maximiser of modularity over all set partitions.

    With ``constrained`` only partitions whose every community has volume
    above ``tau`` count; ``(None, None)`` is returned when there is none.
    Ties go to the lexicographically first restricted growth string.
    """
    p = graph.vertex_count
    if p > MAX_BRUTE_FORCE:
        raise ValueError(f"exhaustive search is limited to {MAX_BRUTE_FORCE} vertices, got {p}")
    if not graph.total_weight > 0:
        raise ValueError("modularity is undefined on a graph with zero total weight")
    parts = set_partitions(p)
    if constrained:
        if volumes is None or len(volumes) != p:
            raise ValueError("constrained search needs one volume per vertex")
        ok = feasible_mask(parts, volumes.volumes, tau)
        parts = parts[ok]
        if len(parts) == 0:
            return None, None
    W = graph.to_dense()
    q = _modularity_batch(W, graph.degrees, parts, graph.total_weight)
    i = int(np.argmax(q))
    return parts[i].astype(np.int64), float(q[i])


def feasible_mask(parts: np.ndarray, f: np.ndarray, tau: int) -> np.ndarray:
    """Which label rows give every used community a volume above ``tau``."""
    parts = np.asarray(parts, dtype=np.int64)
    n, p = parts.shape
    totals = np.zeros((n, p), dtype=np.int64)
    np.add.at(totals, (np.repeat(np.arange(n), p), parts.ravel()), np.tile(np.asarray(f, dtype=np.int64), n))
    used = np.zeros((n, p), dtype=bool)
    used[np.repeat(np.arange(n), p), parts.ravel()] = True
    return np.all(~used | (totals > tau), axis=1)


def feasible_fraction(volumes: VertexVolumes, tau: int) -> float:
    """Share of all set partitions that are feasible at ``tau``."""
    parts = set_partitions(len(volumes))
    return float(feasible_mask(parts, volumes.volumes, tau).mean())


def feasible_count_upper_bound(p: int, r: int) -> int:
    """``S(p-r, r)`` times the ordered Bell number of ``r`` (meant for ``r << p``)."""
    _check_pr(p, r)
    return stirling2(p - r, r) * ordered_bell(r)


def feasible_count_asymptotic(p: int, r: int) -> float:
    """Large-``p`` size estimate ``r^(p-r) / (2 (log 2)^(r+1))``."""
    _check_pr(p, r)
    return r ** (p - r) / (2 * math.log(2) ** (r + 1))


def feasible_share_asymptotic(r: int) -> tuple[float, float]:
    """Estimated share of distinct partitions that are feasible.

    Returns ``r! r^-r / (2 (log 2)^(r+1))`` and its Stirling-formula form
    ``1.808 * sqrt(r) / 1.884^r``.
    """
    if r < 1:
        raise ValueError("r must be positive")
    direct = math.exp(math.lgamma(r + 1) - r * math.log(r)) / (2 * math.log(2) ** (r + 1))
    stirling_form = RATIO_CONSTANT_LOWER * math.sqrt(r) / RATIO_CONSTANT_UPPER ** r
    return direct, stirling_form
