"""Connectivity graph of axial lines and local integration."""
from __future__ import annotations

from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .geometry import segments_cross

INTEGRATION_CAP = 100.0
METRICS = ("connectivity", "total_depth_r", "mean_depth_r", "integration_r")


@dataclass(eq=False)
class SyntaxGraph:
    graph: nx.Graph
    metrics: dict = field(default_factory=dict)  # metric name -> {node: value}
    meta: dict = field(default_factory=dict)

    @property
    def nodes(self) -> list:
        return sorted(self.graph.nodes)

    @property
    def edges(self) -> list:
        return sorted(tuple(sorted(e)) for e in self.graph.edges)


def _chords(m) -> np.ndarray:
    if hasattr(m, "array"):
        return np.asarray(m.array, dtype=float).reshape(-1, 4)
    rows = [c.as_array() if hasattr(c, "as_array") else np.asarray(c, float) for c in m]
    return np.array(rows, dtype=float).reshape(-1, 4)


def build_syntax_graph(m) -> SyntaxGraph:
    """Nodes are line indices; an edge joins every pair of intersecting lines.

    ``m`` is an axial map, or any sequence of chords / ``(x0, y0, x1, y1)`` rows.
    """
    arr = _chords(m)
    G = nx.Graph()
    G.add_nodes_from(range(len(arr)))
    if len(arr) > 1:
        hit = np.triu(segments_cross(arr, arr), k=1)
        G.add_edges_from(zip(*map(lambda a: a.tolist(), np.nonzero(hit))))
    sg = SyntaxGraph(G)
    sg.metrics["connectivity"] = {n: G.degree(n) for n in G.nodes}
    return sg


def local_integration(g: SyntaxGraph, radius: int = 3, cap: float = INTEGRATION_CAP) -> dict:
    """Radius-limited integration per node.

    Over the ``k`` nodes within ``radius`` steps of node ``i`` (``i``
    included), mean depth is ``MD = total depth / (k - 1)`` and relative
    asymmetry ``RA = 2 (MD - 1) / (k - 2)``.  Integration is ``1 / RA``,
    ``cap`` when ``RA`` vanishes, and 0 when ``k < 3``.
    """
    if radius < 1:
        raise ValueError("radius must be >= 1")
    G = g.graph
    total, mean, integ = {}, {}, {}
    for n in G.nodes:
        depth = nx.single_source_shortest_path_length(G, n, cutoff=radius)
        k = len(depth)
        td = sum(depth.values())
        total[n] = td
        if k < 3:
            mean[n] = float(td / (k - 1)) if k > 1 else 0.0
            integ[n] = 0.0
            continue
        md = td / (k - 1)
        ra = 2.0 * (md - 1.0) / (k - 2)
        mean[n] = float(md)
        integ[n] = float(cap) if ra <= 1e-12 else min(float(cap), 1.0 / ra)
    g.metrics["total_depth_r"] = total
    g.metrics["mean_depth_r"] = mean
    g.metrics["integration_r"] = integ
    g.meta.update({"radius": radius, "integration_cap": cap})
    return integ


def rank_lines(g: SyntaxGraph, metric: str = "integration_r") -> list:
    """``(line id, value)`` pairs, highest first; ties by line id."""
    if metric not in g.metrics:
        if metric == "integration_r":
            local_integration(g)
        else:
            raise KeyError(f"metric {metric!r} not computed")
    vals = g.metrics[metric]
    return sorted(vals.items(), key=lambda kv: (-kv[1], kv[0]))
