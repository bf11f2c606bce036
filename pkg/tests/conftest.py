import numpy as np
import pytest
from hypothesis import strategies as st

from ccdetect.graph import VertexVolumes, build_graph

BARBELL = [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0), (3, 4, 1.0), (3, 5, 1.0), (4, 5, 1.0), (2, 3, 1.0)]
TRIANGLE = [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)]


@pytest.fixture
def barbell():
    return build_graph(BARBELL, 6)


@pytest.fixture
def triangle():
    return build_graph(TRIANGLE, 3)


def random_graph(rng, p, density=0.5, low=1, high=3, self_loops=False):
    """Random integer-weighted graph with at least one edge."""
    while True:
        iu, ju = np.triu_indices(p, 0 if self_loops else 1)
        keep = rng.random(len(iu)) < density
        if keep.any():
            w = rng.integers(low, high + 1, size=int(keep.sum())).astype(float)
            return build_graph(zip(iu[keep].tolist(), ju[keep].tolist(), w.tolist()), p)


def random_volumes(rng, p, n_special, high=9):
    f = np.zeros(p, dtype=np.int64)
    f[rng.choice(p, n_special, replace=False)] = rng.integers(1, high + 1, size=n_special)
    return VertexVolumes(f)


@st.composite
def graphs(draw, min_p=1, max_p=7, self_loops=True):
    """Hypothesis strategy: (graph, dense integer matrix) with positive total weight."""
    p = draw(st.integers(min_p, max_p))
    pairs = [(u, v) for u in range(p) for v in range(u if self_loops else u + 1, p)]
    if not pairs:
        pairs = [(0, 0)]
    weights = draw(st.lists(st.integers(0, 3), min_size=len(pairs), max_size=len(pairs)))
    if not any(weights):
        weights[draw(st.integers(0, len(pairs) - 1))] = 1
    edges = [(u, v, float(w)) for (u, v), w in zip(pairs, weights) if w]
    g = build_graph(edges, p)
    return g, g.to_dense().astype(int)


@st.composite
def assignments(draw, p):
    return np.array(draw(st.lists(st.integers(0, p - 1), min_size=p, max_size=p)), dtype=np.int64)


@st.composite
def instances(draw, min_p=1, max_p=7):
    g, W = draw(graphs(min_p, max_p))
    p = g.vertex_count
    x = draw(assignments(p))
    f = np.array(draw(st.lists(st.integers(0, 6), min_size=p, max_size=p)), dtype=np.int64)
    tau = draw(st.integers(0, 12))
    return g, W, VertexVolumes(f), x, tau


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
