"""Text formats: edge lists, volumes, assignments, traces, summaries, reports.

Floats are written with 17 significant digits so they read back bit for bit.
Every writer goes through :func:`atomic_write` (temporary file, then rename),
so a failure never leaves a half-written artifact behind.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .analysis import ComparisonReport
from .graph import VertexVolumes, WeightedGraph

ASSIGNMENT_HEADER = ["vertex", "label"]
TRACE_HEADER = ["chain", "round", "sweep", "theta", "lambda", "modularity", "hamiltonian", "feasible", "n_communities"]


class ParseError(ValueError):
    """Malformed input file; carries the path and line number."""

    def __init__(self, path, line: int | None, message: str):
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line


def fmt(x: float) -> str:
    return "%.17g" % x


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _data_lines(path):
    try:
        with open(path) as fh:
            for n, line in enumerate(fh, 1):
                text = line.split("#", 1)[0].strip()
                if text:
                    yield n, text.split()
    except OSError as err:
        raise ParseError(path, None, err.strerror or str(err)) from None


def _int(path, n, token, what):
    try:
        value = int(token)
    except ValueError:
        raise ParseError(path, n, f"{what} {token!r} is not an integer") from None
    if value < 0:
        raise ParseError(path, n, f"{what} {token!r} is negative")
    return value


def read_edge_list(path) -> tuple[list[tuple[int, int, float]], int]:
    """``u v w`` lines (``w`` optional, default 1).  Returns triples and ``max index + 1``."""
    triples = []
    top = -1
    for n, parts in _data_lines(path):
        if len(parts) not in (2, 3):
            raise ParseError(path, n, f"expected 'u v w', got {len(parts)} fields")
        u = _int(path, n, parts[0], "vertex")
        v = _int(path, n, parts[1], "vertex")
        try:
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError:
            raise ParseError(path, n, f"weight {parts[2]!r} is not a number") from None
        if not np.isfinite(w) or w < 0:
            raise ParseError(path, n, f"weight {parts[2]!r} must be finite and non-negative")
        triples.append((u, v, w))
        top = max(top, u, v)
    return triples, top + 1


def read_volume_map(path) -> dict[int, int]:
    """``v f`` lines; repeated vertices are an error."""
    out: dict[int, int] = {}
    for n, parts in _data_lines(path):
        if len(parts) != 2:
            raise ParseError(path, n, f"expected 'v f', got {len(parts)} fields")
        v = _int(path, n, parts[0], "vertex")
        if v in out:
            raise ParseError(path, n, f"vertex {v} listed twice")
        out[v] = _int(path, n, parts[1], "volume")
    return out


def read_volumes(path, p: int) -> VertexVolumes:
    mapping = read_volume_map(path)
    try:
        return VertexVolumes.from_mapping(mapping, p)
    except ValueError as err:
        raise ParseError(path, None, str(err)) from None


def format_edge_list(graph: WeightedGraph) -> str:
    lines = [f"# {graph.vertex_count} vertices"]
    lines += [f"{u} {v} {fmt(w)}" for u, v, w in graph.edges()]
    return "\n".join(lines) + "\n"


def format_volumes(volumes: VertexVolumes) -> str:
    return "".join(f"{v} {volumes.volumes[v]}\n" for v in volumes.special_set)


def write_edge_list(path, graph: WeightedGraph) -> None:
    atomic_write(path, format_edge_list(graph))


def write_volumes(path, volumes: VertexVolumes) -> None:
    atomic_write(path, format_volumes(volumes))


def format_assignment(x) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ASSIGNMENT_HEADER)
    w.writerows(enumerate(np.asarray(x).tolist()))
    return buf.getvalue()


def write_assignment(path, x) -> None:
    atomic_write(path, format_assignment(x))


def read_assignment(path) -> np.ndarray:
    """Read a ``vertex,label`` CSV; vertices must be exactly ``0 .. p-1``."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as err:
        raise ParseError(path, None, err.strerror or str(err)) from None
    if not rows or [c.strip() for c in rows[0]] != ASSIGNMENT_HEADER:
        raise ParseError(path, 1, "missing 'vertex,label' header")
    labels = {}
    for n, row in enumerate(rows[1:], 2):
        if not row:
            continue
        if len(row) != 2:
            raise ParseError(path, n, "expected two fields")
        v = _int(path, n, row[0], "vertex")
        if v in labels:
            raise ParseError(path, n, f"vertex {v} listed twice")
        labels[v] = _int(path, n, row[1], "label")
    p = len(labels)
    if sorted(labels) != list(range(p)):
        raise ParseError(path, None, "vertices must be exactly 0..p-1")
    return np.array([labels[v] for v in range(p)], dtype=np.int64)


def format_trace(rows: Iterable[tuple[int, object]]) -> str:
    """``rows`` yields ``(chain id, SweepRecord)`` pairs."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for chain, r in rows:
        w.writerow([
            chain, r.round, r.sweep, fmt(r.theta), fmt(r.lam), fmt(r.modularity),
            fmt(r.hamiltonian), int(not r.infeasible), r.n_communities,
        ])
    return buf.getvalue()


def write_trace(path, rows) -> None:
    atomic_write(path, format_trace(rows))


def read_trace(path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TRACE_HEADER:
            raise ParseError(path, 1, "unexpected trace header")
        out = []
        for row in reader:
            out.append({
                "chain": int(row["chain"]),
                "round": int(row["round"]),
                "sweep": int(row["sweep"]),
                "theta": float(row["theta"]),
                "lambda": float(row["lambda"]),
                "modularity": float(row["modularity"]),
                "hamiltonian": float(row["hamiltonian"]),
                "feasible": int(row["feasible"]),
                "n_communities": int(row["n_communities"]),
            })
    return out


def _value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return fmt(float(v))
    if isinstance(v, (list, tuple, np.ndarray)):
        return " ".join(_value(x) for x in v)
    return str(v)


def format_summary(items: Mapping[str, object]) -> str:
    """``key = value`` lines in the given key order."""
    return "".join(f"{k} = {_value(v)}\n" for k, v in items.items())


def write_summary(path, items: Mapping[str, object]) -> None:
    atomic_write(path, format_summary(items))


def read_summary(path) -> dict[str, str]:
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        key, sep, value = line.partition(" = ")
        if not sep:
            raise ParseError(path, n, "expected 'key = value'")
        out[key.strip()] = value.strip()
    return out


def format_report(report: ComparisonReport) -> str:
    both, only_a, only_b = report.pair_classes
    items: dict[str, object] = {
        "communities_a": report.community_counts[0],
        "communities_b": report.community_counts[1],
        "mean_size_a": report.mean_sizes[0],
        "mean_size_b": report.mean_sizes[1],
        "pairs_both": both,
        "pairs_only_a": only_a,
        "pairs_only_b": only_b,
        "jaccard_mean": float(np.mean(report.jaccard)) if report.jaccard.size else float("nan"),
        "jaccard_min": float(np.min(report.jaccard)) if report.jaccard.size else float("nan"),
    }
    if report.tau is not None:
        items["tau"] = report.tau
    if report.fraction_at_most_tau is not None:
        items["fraction_at_most_tau_a"] = report.fraction_at_most_tau[0]
        items["fraction_at_most_tau_b"] = report.fraction_at_most_tau[1]
    if report.volume_cdf is not None:
        items["volumes_a"] = [int(v) for v in report.volume_cdf[0]]
        items["volumes_b"] = [int(v) for v in report.volume_cdf[1]]
    text = format_summary(items)
    text += "\n[jaccard]\nvertex,jaccard\n" + "".join(f"{v},{fmt(j)}\n" for v, j in enumerate(report.jaccard))
    text += "\n[overlap]\nlabel_a,label_b,shared\n" + "".join(f"{a},{b},{n}\n" for a, b, n in report.overlap_edges)
    return text


def write_report(path, report: ComparisonReport) -> None:
    atomic_write(path, format_report(report))
