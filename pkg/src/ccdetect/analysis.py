"""Comparisons between two assignments of the same vertex set.

Everything is computed from the contingency table of the two labelings, so
the cost is linear in ``p`` plus the number of community pairs that share a
vertex; no loop over vertex pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import VertexVolumes


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 1 or a.shape != b.shape:
        raise ValueError(f"assignments must be vectors of equal length, got {a.shape} and {b.shape}")
    _, a = np.unique(a, return_inverse=True)
    _, b = np.unique(b, return_inverse=True)
    return a.ravel(), b.ravel()


def _contingency(a: np.ndarray, b: np.ndarray) -> sp.coo_matrix:
    n = np.ones(len(a), dtype=np.int64)
    table = sp.coo_matrix((n, (a, b)), shape=(a.max() + 1, b.max() + 1)).tocsr()
    table.sum_duplicates()
    return table


def jaccard_per_vertex(a, b) -> np.ndarray:
    """Jaccard index between the community of ``v`` in ``a`` and in ``b``, per vertex."""
    a, b = _pair(a, b)
    if a.size == 0:
        return np.zeros(0)
    table = _contingency(a, b)
    size_a = np.bincount(a)
    size_b = np.bincount(b)
    inter = np.asarray(table[a, b]).ravel().astype(float)
    return inter / (size_a[a] + size_b[b] - inter)


def _pairs(n: np.ndarray) -> int:
    n = np.asarray(n, dtype=np.int64)
    return int(np.sum(n * (n - 1) // 2))


def pair_comembership_classes(a, b) -> tuple[int, int, int]:
    """Counts of vertex pairs together in both, only in ``a`` and only in ``b``."""
    a, b = _pair(a, b)
    if a.size == 0:
        return 0, 0, 0
    both = _pairs(_contingency(a, b).data)
    in_a = _pairs(np.bincount(a))
    in_b = _pairs(np.bincount(b))
    return both, in_a - both, in_b - both


def community_volume_summary(volumes: VertexVolumes, assignment, tau: int | None = None):
    """Sorted volume totals of the communities in use.

    With ``tau`` also returns the fraction of communities whose total is at
    most ``tau``.
    """
    x = np.asarray(assignment)
    if x.shape != (len(volumes),):
        raise ValueError("assignment and volumes differ in length")
    _, inv = np.unique(x, return_inverse=True)
    totals = np.sort(np.bincount(inv.ravel(), weights=volumes.volumes).astype(np.int64))
    if tau is None:
        return totals
    return totals, float(np.mean(totals <= tau))


def overlap_edges(a, b) -> list[tuple[int, int, int]]:
    """``(label in a, label in b, shared vertices)`` for every overlapping pair."""
    a_raw = np.asarray(a)
    b_raw = np.asarray(b)
    ua = np.unique(a_raw)
    ub = np.unique(b_raw)
    ai, bi = _pair(a_raw, b_raw)
    table = _contingency(ai, bi).tocoo()
    order = np.lexsort((table.col, table.row))
    return [(ua[table.row[i]].item(), ub[table.col[i]].item(), int(table.data[i])) for i in order]


def mean_community_size(assignment) -> float:
    x = np.asarray(assignment)
    return len(x) / len(np.unique(x))


@dataclass
class ComparisonReport:
    jaccard: np.ndarray
    pair_classes: tuple[int, int, int]
    volume_cdf: tuple[np.ndarray, np.ndarray] | None
    overlap_edges: list[tuple[int, int, int]]
    community_counts: tuple[int, int]
    mean_sizes: tuple[float, float]
    fraction_at_most_tau: tuple[float, float] | None = None
    tau: int | None = None


def compare(a, b, volumes: VertexVolumes | None = None, tau: int | None = None) -> ComparisonReport:
    """Jaccard stability, pair classes, volume distributions and overlaps of ``a`` vs ``b``."""
    jac = jaccard_per_vertex(a, b)
    classes = pair_comembership_classes(a, b)
    cdf = None
    frac = None
    if volumes is not None:
        if tau is None:
            cdf = (community_volume_summary(volumes, a), community_volume_summary(volumes, b))
        else:
            ta, fa = community_volume_summary(volumes, a, tau)
            tb, fb = community_volume_summary(volumes, b, tau)
            cdf = (ta, tb)
            frac = (fa, fb)
    counts = (len(np.unique(a)), len(np.unique(b)))
    return ComparisonReport(
        jaccard=jac,
        pair_classes=classes,
        volume_cdf=cdf,
        overlap_edges=overlap_edges(a, b),
        community_counts=counts,
        mean_sizes=(mean_community_size(a), mean_community_size(b)),
        fraction_at_most_tau=frac,
        tau=tau,
    )
