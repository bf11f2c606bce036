"""Planted-partition test instances with special (positive-volume) vertices."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .graph import VertexVolumes, WeightedGraph, build_graph


@dataclass(frozen=True)
class PlantedSpec:
    """Block sizes, edge probabilities, weight bounds and volume quotas.

    ``specials[b]`` vertices of block ``b`` (its first ones) get a volume
    drawn uniformly from ``volume_range``; all others get 0.  Weights of
    present edges are uniform integers in ``weight_range``.
    """

    sizes: tuple[int, ...]
    p_in: float
    p_out: float
    weight_range: tuple[int, int] = (1, 1)
    specials: tuple[int, ...] = ()
    volume_range: tuple[int, int] = (1, 1)
    seed: int = 0

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        object.__setattr__(self, "sizes", sizes)
        if not sizes or min(sizes) < 1:
            raise ValueError("need at least one block and every block must be non-empty")
        if not 0 <= self.p_out < self.p_in <= 1:
            raise ValueError("need 0 <= p_out < p_in <= 1")
        lo, hi = self.weight_range
        if not 0 < lo <= hi:
            raise ValueError("weight_range must satisfy 0 < low <= high")
        specials = tuple(int(s) for s in self.specials) or (0,) * len(sizes)
        object.__setattr__(self, "specials", specials)
        if len(specials) != len(sizes):
            raise ValueError("one special-vertex quota per block is required")
        if any(not 0 <= s <= n for s, n in zip(specials, sizes)):
            raise ValueError("special quota must lie between 0 and the block size")
        vlo, vhi = self.volume_range
        if not 0 < vlo <= vhi:
            raise ValueError("volume_range must satisfy 0 < low <= high")

    @property
    def vertex_count(self) -> int:
        return sum(self.sizes)

    @classmethod
    def from_dict(cls, data: Mapping) -> "PlantedSpec":
        """Build from a JSON-style mapping; ``blocks`` + ``block_size`` may replace ``sizes``."""
        data = dict(data)
        if "sizes" not in data:
            if "blocks" not in data or "block_size" not in data:
                raise ValueError("spec needs 'sizes' or both 'blocks' and 'block_size'")
            data["sizes"] = [int(data.pop("block_size"))] * int(data.pop("blocks"))
        known = {"sizes", "p_in", "p_out", "weight_range", "specials", "volume_range", "seed"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown spec keys: {sorted(unknown)}")
        for key in ("weight_range", "volume_range"):
            if key in data:
                data[key] = tuple(int(v) for v in data[key])
        if "specials" in data:
            specials = data["specials"]
            data["specials"] = (int(specials),) * len(data["sizes"]) if np.isscalar(specials) else tuple(specials)
        try:
            return cls(**{k: (tuple(v) if k == "sizes" else v) for k, v in data.items()})
        except TypeError as err:
            raise ValueError(str(err)) from None


def generate(spec: PlantedSpec) -> tuple[WeightedGraph, VertexVolumes, np.ndarray]:
    """Draw a graph, volumes and the planted assignment."""
    rng = np.random.default_rng(spec.seed)
    sizes = np.asarray(spec.sizes)
    p = int(sizes.sum())
    truth = np.repeat(np.arange(len(sizes)), sizes)
    iu, ju = np.triu_indices(p, k=1)
    prob = np.where(truth[iu] == truth[ju], spec.p_in, spec.p_out)
    present = rng.random(len(iu)) < prob
    lo, hi = spec.weight_range
    w = rng.integers(lo, hi + 1, size=int(present.sum()))
    edges = zip(iu[present].tolist(), ju[present].tolist(), w.astype(float).tolist())
    graph = build_graph(edges, p)

    f = np.zeros(p, dtype=np.int64)
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    vlo, vhi = spec.volume_range
    for start, quota in zip(starts, spec.specials):
        if quota:
            f[start:start + quota] = rng.integers(vlo, vhi + 1, size=quota)
    return graph, VertexVolumes(f), truth


def disjoint_cliques(sizes: Sequence[int]) -> PlantedSpec:
    return PlantedSpec(tuple(sizes), 1.0, 0.0)
