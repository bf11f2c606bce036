"""Weighted undirected graphs, vertex volumes and the folding (coarsening) step.

A graph is stored as a symmetric CSR matrix.  Self-loop weight ``W[v, v]``
enters the degree of ``v`` once, so ``d_u = sum_v W[u, v]`` is simply the row
sum and ``2m`` is the sum of all degrees.

Folding contracts every community of an assignment into a single vertex.  The
folded self-weight is the full ordered-pair sum over the community (each
internal edge counted twice, original self-loops once), which is what keeps
modularity and feasibility unchanged between ``(G, x)`` and
``(G_fold, singletons)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp


def _row_sums(matrix: sp.csr_matrix) -> np.ndarray:
    # bincount accumulates sequentially; modularity() relies on the same
    # routine so that the one-community case cancels exactly
    rows = np.repeat(np.arange(matrix.shape[0]), np.diff(matrix.indptr))
    return np.bincount(rows, weights=matrix.data, minlength=matrix.shape[0])


def _sequential_sum(values: np.ndarray) -> float:
    return float(np.bincount(np.zeros(len(values), dtype=np.intp), weights=values, minlength=1)[0])


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


class LocalView(NamedTuple):
    neighbours: list[list[int]]
    neighbour_weights: list[list[float]]
    degrees: list[float]
    self_weights: list[float]
    # |W_vv - d_v^2 / 2m|, the penalty weight before the 1/m factor
    penalty_raw: list[float]


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Symmetric, non-negatively weighted graph on vertices ``0 .. p-1``.

    Use :func:`build_graph` or :meth:`from_matrix` rather than the raw
    constructor; they validate the input and compute degrees.
    """

    weights: sp.csr_matrix
    degrees: np.ndarray
    total_weight: float

    @classmethod
    def from_matrix(cls, matrix, total_weight: float | None = None) -> "WeightedGraph":
        W = sp.csr_matrix(matrix, dtype=float)
        if W.shape[0] != W.shape[1]:
            raise ValueError(f"adjacency matrix must be square, got {W.shape}")
        if W.shape[0] == 0:
            raise ValueError("graph must have at least one vertex")
        W.sum_duplicates()
        W.eliminate_zeros()
        W.sort_indices()
        if W.nnz and W.data.min() < 0:
            raise ValueError("edge weights must be non-negative")
        if W.nnz and not np.all(np.isfinite(W.data)):
            raise ValueError("edge weights must be finite")
        if (W != W.T).nnz:
            raise ValueError("adjacency matrix must be symmetric")
        W.data.setflags(write=False)
        degrees = _freeze(_row_sums(W))
        if total_weight is None:
            total_weight = _sequential_sum(degrees)
        return cls(W, degrees, float(total_weight))

    @property
    def vertex_count(self) -> int:
        return self.weights.shape[0]

    @property
    def m(self) -> float:
        """Half the total weight (the edge count of an unweighted graph)."""
        return self.total_weight / 2.0

    @cached_property
    def self_weights(self) -> np.ndarray:
        return _freeze(self.weights.diagonal().astype(float))

    @cached_property
    def adjacency(self) -> tuple[list[list[int]], list[list[float]]]:
        """Per-vertex neighbour indices and weights, self-loops excluded.

        Plain Python lists: the sampler walks them one vertex at a time and
        list indexing is much cheaper than numpy scalar access there.
        """
        W = self.weights
        idx: list[list[int]] = []
        wts: list[list[float]] = []
        for v in range(self.vertex_count):
            lo, hi = W.indptr[v], W.indptr[v + 1]
            cols = W.indices[lo:hi]
            data = W.data[lo:hi]
            keep = cols != v
            idx.append(cols[keep].tolist())
            wts.append(data[keep].tolist())
        return idx, wts

    @cached_property
    def local_view(self) -> "LocalView":
        """Plain-list copies of the per-vertex quantities the sampler reads."""
        idx, wts = self.adjacency
        d = self.degrees
        raw = np.abs(self.self_weights - d * d / self.total_weight) if self.total_weight > 0 else np.zeros_like(d)
        return LocalView(idx, wts, d.tolist(), self.self_weights.tolist(), raw.tolist())

    def edges(self) -> list[tuple[int, int, float]]:
        """Upper-triangular ``(u, v, w)`` triples, self-loops included."""
        upper = sp.triu(self.weights, format="coo")
        order = np.lexsort((upper.col, upper.row))
        return [(int(upper.row[i]), int(upper.col[i]), float(upper.data[i])) for i in order]

    def to_dense(self) -> np.ndarray:
        return self.weights.toarray()


@dataclass(frozen=True, eq=False)
class VertexVolumes:
    """Non-negative integer volume ``f(v)`` per vertex.

    Vertices with positive volume form the special set.
    """

    volumes: np.ndarray

    def __post_init__(self):
        vols = np.asarray(self.volumes)
        if vols.ndim != 1:
            raise ValueError("volumes must be a 1-d vector")
        if vols.size and not np.issubdtype(vols.dtype, np.integer):
            if not np.all(vols == np.floor(vols)):
                raise ValueError("volumes must be integers")
        vols = vols.astype(np.int64)
        if vols.size and vols.min() < 0:
            raise ValueError("volumes must be non-negative")
        object.__setattr__(self, "volumes", _freeze(vols))

    @classmethod
    def zeros(cls, p: int) -> "VertexVolumes":
        return cls(np.zeros(p, dtype=np.int64))

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, int], p: int) -> "VertexVolumes":
        vols = np.zeros(p, dtype=np.int64)
        for v, f in mapping.items():
            if not 0 <= v < p:
                raise ValueError(f"volume given for vertex {v} outside 0..{p - 1}")
            vols[v] = f
        return cls(vols)

    def __len__(self) -> int:
        return len(self.volumes)

    @cached_property
    def special_set(self) -> np.ndarray:
        return _freeze(np.flatnonzero(self.volumes > 0))

    @property
    def total(self) -> int:
        return int(self.volumes.sum())

    @cached_property
    def as_list(self) -> list[int]:
        return self.volumes.tolist()


@dataclass(frozen=True, eq=False)
class FoldMap:
    """Record of one folding step.

    ``parent[u]`` is the folded vertex that original vertex ``u`` was
    contracted into; ``folded_label_of_original_label`` maps each community
    label of the folded assignment to that index.
    """

    parent: np.ndarray
    folded_label_of_original_label: dict[int, int] = field(default_factory=dict)

    @property
    def folded_count(self) -> int:
        return len(self.folded_label_of_original_label)

    def unfold(self, folded_labels: Sequence[int]) -> np.ndarray:
        """Pull a labelling of the folded vertices back to the original ones."""
        return np.asarray(folded_labels)[self.parent]

    def then(self, later: "FoldMap") -> "FoldMap":
        """Compose with a fold applied to this fold's output graph."""
        parent = later.parent[self.parent]
        return FoldMap(_freeze(parent.copy()), dict(later.folded_label_of_original_label))

    @classmethod
    def identity(cls, p: int) -> "FoldMap":
        return cls(_freeze(np.arange(p)), {i: i for i in range(p)})


def build_graph(edge_list: Iterable[tuple[int, int, float]], vertex_count: int) -> WeightedGraph:
    """Build a graph from ``(u, v, w)`` triples.

    Repeated pairs are summed and ``(u, v)`` is the same edge as ``(v, u)``.
    A self-loop ``(v, v, w)`` adds ``w`` to ``W[v, v]`` once.
    """
    if vertex_count <= 0:
        raise ValueError("graph must have at least one vertex")
    triples = list(edge_list)
    if triples:
        arr = np.asarray(triples, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError("edge list entries must be (u, v, w) triples")
        u = arr[:, 0]
        v = arr[:, 1]
        w = arr[:, 2]
        if np.any(u != np.floor(u)) or np.any(v != np.floor(v)):
            raise ValueError("vertex indices must be integers")
        u = u.astype(np.int64)
        v = v.astype(np.int64)
    else:
        u = v = np.zeros(0, dtype=np.int64)
        w = np.zeros(0)
    bad = (u < 0) | (u >= vertex_count) | (v < 0) | (v >= vertex_count)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise IndexError(f"edge ({u[i]}, {v[i]}) has an endpoint outside 0..{vertex_count - 1}")
    if np.any(w < 0):
        raise ValueError("edge weights must be non-negative")
    off = u != v
    rows = np.concatenate([u, v[off]])
    cols = np.concatenate([v, u[off]])
    data = np.concatenate([w, w[off]])
    W = sp.coo_matrix((data, (rows, cols)), shape=(vertex_count, vertex_count)).tocsr()
    return WeightedGraph.from_matrix(W)


def first_appearance_labels(assignment: Sequence[int]) -> np.ndarray:
    """Relabel communities ``0, 1, ...`` in order of first appearance."""
    x = np.asarray(assignment)
    if x.size == 0:
        return x.astype(np.int64)
    uniq, first, inverse = np.unique(x, return_index=True, return_inverse=True)
    rank = np.empty(len(uniq), dtype=np.int64)
    rank[np.argsort(first)] = np.arange(len(uniq))
    return rank[inverse.ravel()]


def fold(
    graph: WeightedGraph, volumes: VertexVolumes, assignment: Sequence[int]
) -> tuple[WeightedGraph, VertexVolumes, FoldMap]:
    """Contract each community of ``assignment`` into one vertex.

    Folded vertices are numbered by first appearance of their label, the
    folded weight between communities ``i`` and ``j`` is the sum of
    ``W[u, v]`` over ``u`` in ``i`` and ``v`` in ``j`` (ordered pairs), and
    folded volumes are community totals.  The folded total weight is carried
    over unchanged.
    """
    x = np.asarray(assignment)
    p = graph.vertex_count
    if x.shape != (p,):
        raise ValueError(f"assignment has length {x.size}, graph has {p} vertices")
    if len(volumes) != p:
        raise ValueError(f"volumes have length {len(volumes)}, graph has {p} vertices")
    parent = first_appearance_labels(x)
    k = int(parent.max()) + 1
    label_of = {}
    for label, idx in zip(x.tolist(), parent.tolist()):
        label_of.setdefault(int(label), int(idx))
    P = sp.csr_matrix((np.ones(p), (np.arange(p), parent)), shape=(p, k))
    W_fold = (P.T @ graph.weights @ P).tocsr()
    folded = WeightedGraph.from_matrix(W_fold, total_weight=graph.total_weight)
    vols = np.zeros(k, dtype=np.int64)
    np.add.at(vols, parent, volumes.volumes)
    return folded, VertexVolumes(vols), FoldMap(_freeze(parent), label_of)
