"""Modularity-based community detection with a minimum-volume constraint per community."""

from .graph import FoldMap, VertexVolumes, WeightedGraph, build_graph, fold
from .objective import (
    PenaltyContext,
    chi,
    community_volume,
    conditional_log_weight,
    hamiltonian,
    infeasibility,
    is_feasible,
    modularity,
)
from .optimizer import EnsembleConfig, PenaltySchedule, constrained_optimize, default_tau, run_ensemble
from .sampler import CoolingSchedule, SweepState, local_optimize, resample_vertex

__version__ = "0.1.0"
