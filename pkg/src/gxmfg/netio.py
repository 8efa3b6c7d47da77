"""Edge-list ingestion and persistence of solver and evaluation outputs.

Formats
-------
Edge lists
    Whitespace-separated, one edge per line, first two tokens are node ids;
    further tokens (weights, timestamps) are ignored.  Lines starting with a
    comment prefix (``%`` or ``#`` by default) and blank lines are skipped.
Field tables
    CSV with header ``series,t,state_0,...,state_{X-1}``, one row per
    ``(series, t)``.
Traces
    CSV with header ``iteration,exploitability``.
Reports
    A single JSON object.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graphex import SampledGraph, graph_from_edges
from .solver import PolicyBundle


class EdgeListError(ValueError):
    """Malformed or empty edge-list input."""


@dataclass(frozen=True)
class EdgeListSource:
    path: str | os.PathLike
    comment_prefixes: tuple[str, ...] = ("%", "#")


def load_edge_list(src: EdgeListSource | str | os.PathLike) -> SampledGraph:
    """Read an edge list into a simple undirected graph.

    Node ids are mapped to ``0..N-1`` in order of first appearance.  Multiple,
    reversed and self-loop edges collapse to simple undirected edges, and nodes
    left without edges are dropped.
    """
    if not isinstance(src, EdgeListSource):
        src = EdgeListSource(src)
    path = Path(src.path)
    index: dict[str, int] = {}
    seen: set[tuple[int, int]] = set()
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise EdgeListError(f"{path}: {exc.strerror or exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith(src.comment_prefixes):
                continue
            tokens = stripped.split()
            if len(tokens) < 2:
                raise EdgeListError(f"{path}:{lineno}: expected at least two node ids, got {stripped!r}")
            a = index.setdefault(tokens[0], len(index))
            b = index.setdefault(tokens[1], len(index))
            if a != b:
                seen.add((a, b) if a < b else (b, a))
    if not seen:
        raise EdgeListError(f"{path}: no edges")
    edges = np.array(sorted(seen), dtype=np.int64)
    return graph_from_edges(len(index), edges)


def write_edge_list(graph: SampledGraph, path) -> Path:
    """Dump ``graph`` so that :func:`load_edge_list` reproduces it exactly.

    Every node is first declared by a self-loop line ``v v``; loaders drop
    self-loops, but the declarations pin first-appearance order to the node
    index.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"% {graph.num_nodes} nodes {graph.num_edges} edges\n")
        fh.writelines(f"{v} {v}\n" for v in range(graph.num_nodes))
        fh.writelines(f"{i} {j}\n" for i, j in graph.edges.tolist())
    return path


def _fmt(x: float) -> str:
    return repr(float(x))


def write_fields(fields: dict, path) -> Path:
    """Write ``{series: (T + 1, X) array}`` as a long CSV table."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    widths = {np.asarray(v).shape[-1] for v in fields.values()}
    if len(widths) > 1:
        raise ValueError(f"series disagree on the number of states: {sorted(widths)}")
    n_states = widths.pop() if widths else 0
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["series", "t"] + [f"state_{x}" for x in range(n_states)])
            for name, rows in fields.items():
                for t, row in enumerate(np.asarray(rows, dtype=float)):
                    w.writerow([name, t] + [_fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write fields to {path}: {exc}") from exc
    return path


def read_fields(path) -> dict[str, np.ndarray]:
    rows: dict[str, list] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        for rec in reader:
            rows.setdefault(rec[0], []).append((int(rec[1]), [float(v) for v in rec[2:]]))
    return {name: np.array([v for _, v in sorted(r)]) for name, r in rows.items()}


def write_trace(trace, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "exploitability"])
        w.writerows([i, _fmt(v)] for i, v in enumerate(trace))
    return path


def read_trace(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        return np.array([float(rec[1]) for rec in reader])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_report(report: dict, path) -> Path:
    """Write ``report`` as indented JSON (numpy values converted)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(_jsonable(report), fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
    return path


def read_report(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def solution_fields(solution) -> dict[str, np.ndarray]:
    """Named series of a solution: core average, every core class and every periphery degree."""
    out = {"core": solution.core_field.average()}
    for i, rows in enumerate(solution.core_field.values):
        out[f"core_class_{i}"] = rows
    for k in range(1, solution.periphery_field.k_max + 1):
        out[f"degree_{k}"] = solution.periphery_field.degree(k)
    return out


def save_policy(bundle, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays = {"core": bundle.core, "omd_accumulator": bundle.omd_accumulator}
    if bundle.periphery is not None:
        arrays["periphery"] = bundle.periphery
    np.savez_compressed(path, **arrays)
    return path


def load_policy(path) -> PolicyBundle:
    with np.load(path) as data:
        periphery = data["periphery"] if "periphery" in data.files else None
        return PolicyBundle(data["core"], data["omd_accumulator"], periphery)
