"""Dependency-graph constructions: star, lattice and r-chain motifs, the
homogeneous weight scaling relative to p_bar, network connectedness scores,
and edge-list CSV import/export.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import ChangepointState, DependencyGraph, IngestionError, InvalidStateError


def build_star(L: int) -> DependencyGraph:
    """Star over series 0..L-1 with the centre at index 0, unit weights."""
    if L < 2:
        raise InvalidStateError("a star needs at least 2 nodes")
    return DependencyGraph.from_edges(L, [(0, j, 1.0) for j in range(1, L)])


def build_lattice(l1: int, l2: int) -> DependencyGraph:
    """l1 x l2 lattice in row-major order; edges join cells at Manhattan
    distance 1. Node i sits at (row, col) = divmod(i, l2)."""
    if l1 < 1 or l2 < 1:
        raise InvalidStateError("lattice sides must be at least 1")
    edges = []
    for r in range(l1):
        for c in range(l2):
            i = r * l2 + c
            if c + 1 < l2:
                edges.append((i, i + 1, 1.0))
            if r + 1 < l1:
                edges.append((i, i + l2, 1.0))
    return DependencyGraph.from_edges(l1 * l2, edges)


def build_rchain(L: int, r: int) -> DependencyGraph:
    """Band graph joining series whose index difference is at most r."""
    if L < 2:
        raise InvalidStateError("a chain needs at least 2 nodes")
    if r < 1:
        raise InvalidStateError("bandwidth must be at least 1")
    edges = [(i, j, 1.0) for i in range(L) for j in range(i + 1, min(i + r, L - 1) + 1)]
    return DependencyGraph.from_edges(L, edges)


def scale_weights(
    graph: DependencyGraph, p_bar: float, lambda_s: float, degree_mode: str = "max"
) -> DependencyGraph:
    """Set every edge weight to lambda_s * |p_bar| / n, with n the maximum or
    the mean node degree of the graph."""
    if lambda_s < 0:
        raise InvalidStateError("lambda_s must be nonnegative")
    if degree_mode == "max":
        n = float(graph.max_degree())
    elif degree_mode == "mean":
        n = graph.mean_degree()
    else:
        raise InvalidStateError(f"unknown degree mode {degree_mode!r}")
    if n == 0:
        raise InvalidStateError("graph has no edges to scale")
    lam = lambda_s * abs(p_bar) / n
    w = np.where(graph.weights > 0, lam, 0.0)
    return DependencyGraph(w)


@dataclass(frozen=True)
class ConnectednessScores:
    """Per-changepoint scores c[i] (aligned with estimates) and per-series
    totals m[i]."""

    c: tuple[tuple[float, ...], ...]
    m: tuple[float, ...]


def connectedness_scores(
    graph: DependencyGraph, estimates: ChangepointState, varpi: float
) -> ConnectednessScores:
    """Network connectedness of estimated changepoints.

    For changepoint j of series i, count the neighbours of i that have some
    changepoint within varpi time units; the score is (count + 1) divided by
    (degree + 1), so isolated nodes score 1 and the per-series total m_i lies
    in [0, k_i].
    """
    if varpi < 0:
        raise InvalidStateError("varpi must be nonnegative")
    if estimates.L != graph.L:
        raise InvalidStateError("estimates and graph disagree on L")
    c_rows = []
    m_vals = []
    for i, tau in enumerate(estimates.taus):
        deg = int(graph.degrees[i])
        row = []
        for t in tau:
            near = 0
            for j, _ in graph.adjacency[i]:
                if any(abs(t - tj) <= varpi for tj in estimates.taus[j]):
                    near += 1
            row.append((near + 1) / (deg + 1))
        c_rows.append(tuple(row))
        m_vals.append(float(sum(row)))
    return ConnectednessScores(tuple(c_rows), tuple(m_vals))


def write_graph_csv(graph: DependencyGraph, path: str | Path) -> None:
    """Edge list with 1-based indices, one row per undirected edge (i < j)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "weight"])
        for a, b, w in graph.edges:
            writer.writerow([a + 1, b + 1, repr(w)])


def read_graph_csv(path: str | Path, L: int | None = None) -> DependencyGraph:
    """Inverse of :func:`write_graph_csv`. When L is omitted it is inferred
    from the largest index, so trailing isolated nodes need an explicit L."""
    edges: list[tuple[int, int, float]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != ["i", "j", "weight"]:
            raise IngestionError(f"{path}: expected header i,j,weight")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                i, j, w = int(row[0]), int(row[1]), float(row[2])
            except (ValueError, IndexError) as exc:
                raise IngestionError(f"{path}: row {lineno}: {exc}") from None
            if i < 1 or j < 1:
                raise IngestionError(f"{path}: row {lineno}: indices are 1-based")
            if not i < j:
                raise IngestionError(f"{path}: row {lineno}: edges must satisfy i < j")
            if w <= 0:
                raise IngestionError(f"{path}: row {lineno}: edge weight must be positive")
            edges.append((i - 1, j - 1, w))
    if L is None:
        L = max((max(i, j) for i, j, _ in edges), default=-1) + 1
    if L < 1:
        raise IngestionError(f"{path}: empty edge list and no explicit node count")
    return DependencyGraph.from_edges(L, edges)
