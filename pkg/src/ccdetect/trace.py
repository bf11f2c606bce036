"""Per-sweep records of a chain and the best states it traversed."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np


class SweepRecord(NamedTuple):
    round: int
    sweep: int
    theta: float
    lam: float
    modularity: float
    hamiltonian: float
    infeasible: int
    n_communities: int


@dataclass
class BestState:
    modularity: float
    round: int
    sweep: int
    assignment: np.ndarray


@dataclass
class ChainTrace:
    """Sample path of one chain.

    ``records[i]`` describes ``snapshots[i]``, an assignment on the original
    vertex set.  Sweep 0 of round 1 is the initial (singleton) state.
    ``hamiltonian`` is evaluated on the graph the chain was sampling at the
    time, i.e. on the folded graph in later rounds.
    """

    records: list[SweepRecord] = field(default_factory=list)
    snapshots: list[np.ndarray] = field(default_factory=list)
    best_feasible: BestState | None = None
    best_overall: BestState | None = None
    fold_rounds: list[int] = field(default_factory=list)
    last: np.ndarray | None = None

    def append(self, record: SweepRecord, snapshot: np.ndarray, keep_snapshot: bool = True) -> None:
        self.records.append(record)
        self.last = snapshot
        if keep_snapshot:
            self.snapshots.append(snapshot)
        q = record.modularity
        # strict comparison: the earliest maximiser is kept
        if self.best_overall is None or q > self.best_overall.modularity:
            self.best_overall = BestState(q, record.round, record.sweep, snapshot)
        if not record.infeasible and (self.best_feasible is None or q > self.best_feasible.modularity):
            self.best_feasible = BestState(q, record.round, record.sweep, snapshot)

    @property
    def final(self) -> np.ndarray:
        return self.last

    @property
    def final_record(self) -> SweepRecord:
        return self.records[-1]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])
