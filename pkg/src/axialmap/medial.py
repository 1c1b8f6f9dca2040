"""Approximate Blum medial axis from a Voronoi diagram of boundary samples.

Every kept Voronoi vertex remembers the boundary points it was built from
(its *generators*); bucket formation walks those associations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import Voronoi, cKDTree

from .geometry import Point2, point_segment_distance, points_in_open_space
from .openspace import OpenSpace

DEFAULT_SAMPLE_CAP = 2_000_000
EPS_REL = 1e-3


class StepTooSmall(ValueError):
    pass


class EmptyGraph(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BoundarySamples:
    points: np.ndarray      # (n, 2)
    feature: np.ndarray     # (n,) 0 = outer, 1.. = holes
    edge: np.ndarray        # (n,) global edge id the sample was cut from
    t: np.ndarray           # (n,) parameter along that edge
    index: np.ndarray       # (n,) position within its ring's sample sequence
    ring_count: np.ndarray  # samples per feature

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        for f, p in zip(self.feature, self.points):
            yield int(f), Point2(float(p[0]), float(p[1]))


def sample_boundary(s: OpenSpace, step: float, cap: int = DEFAULT_SAMPLE_CAP) -> BoundarySamples:
    """Sample every ring edge at arc-length spacing no larger than ``step``.

    Ring vertices are always samples.
    """
    if not (step > 0 and math.isfinite(step)):
        raise StepTooSmall(f"step must be positive, got {step!r}")
    E = s.edges
    lens = np.hypot(E[:, 2] - E[:, 0], E[:, 3] - E[:, 1])
    counts = np.maximum(1, np.ceil(lens / step - 1e-9)).astype(np.int64)
    total = int(counts.sum())
    if total > cap:
        raise StepTooSmall(f"step {step:g} needs {total} samples (cap {cap})")
    edge = np.repeat(np.arange(len(E)), counts)
    starts = np.repeat(np.cumsum(counts) - counts, counts)
    j = np.arange(total) - starts
    t = j / counts[edge]
    pts = E[edge, :2] + t[:, None] * (E[edge, 2:] - E[edge, :2])
    feature = s.edge_feature[edge]
    ring_count = np.bincount(feature, minlength=len(s.rings))
    ring_start = np.concatenate([[0], np.cumsum(ring_count)[:-1]])
    index = np.arange(total) - ring_start[feature]
    return BoundarySamples(pts, feature, edge, t, index, ring_count)


@dataclass(frozen=True)
class MedialVertex:
    position: Point2
    clearance: float
    generators: tuple  # ((feature id, Point2), ...)


@dataclass(frozen=True, eq=False)
class MedialAxisGraph:
    positions: np.ndarray   # (v, 2)
    clearance: np.ndarray   # (v,)
    gen_points: np.ndarray  # (v, 3, 2), NaN padded
    gen_feature: np.ndarray  # (v, 3), -1 padded
    gen_edge: np.ndarray    # (v, 3) global edge ids, -1 padded
    gen_t: np.ndarray       # (v, 3) parameter along gen_edge
    edges: np.ndarray       # (e, 2) vertex index pairs
    feature_count: int
    step: float

    def __len__(self):
        return len(self.positions)

    @cached_property
    def vertices(self) -> list:
        out = []
        for i in range(len(self.positions)):
            gens = tuple(
                (int(f), Point2(float(p[0]), float(p[1])))
                for f, p in zip(self.gen_feature[i], self.gen_points[i]) if f >= 0
            )
            out.append(MedialVertex(Point2(*map(float, self.positions[i])), float(self.clearance[i]), gens))
        return out

    @cached_property
    def tree(self) -> cKDTree:
        return cKDTree(self.positions)

    @cached_property
    def degree(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=len(self.positions))

    @cached_property
    def segments(self) -> np.ndarray:
        """Edges as (e, 4) coordinate rows."""
        return np.hstack([self.positions[self.edges[:, 0]], self.positions[self.edges[:, 1]]])

    def gen_count(self) -> np.ndarray:
        return (self.gen_feature >= 0).sum(axis=1)


def compute_medial_axis(s: OpenSpace, step: Optional[float] = None,
                        cap: int = DEFAULT_SAMPLE_CAP) -> MedialAxisGraph:
    """Sampled-Voronoi medial axis of ``s`` at boundary spacing ``step``.

    A Voronoi ridge survives when both its vertices lie in open space and it
    separates samples of different features, or samples of one feature at
    least two sample positions apart.  Vertex positions are then refined so
    they sit at equal distance from their generating edges, and leaf spurs
    shorter than ``step`` are pruned.
    """
    step = float(step) if step is not None else s.clearance / 3.0
    smp = sample_boundary(s, step, cap)
    P = smp.points
    vor = Voronoi(P)
    rp = vor.ridge_points
    rv = np.array(vor.ridge_vertices, dtype=np.int64)
    fa, fb = smp.feature[rp[:, 0]], smp.feature[rp[:, 1]]
    gap = np.abs(smp.index[rp[:, 0]] - smp.index[rp[:, 1]])
    gap = np.minimum(gap, smp.ring_count[fa] - gap)
    bounded = (rv >= 0).all(axis=1)
    keep = bounded & ((fa != fb) | (gap >= 2))

    V = vor.vertices
    cand = np.unique(rv[keep])
    inside_v = np.zeros(len(V), dtype=bool)
    inside_v[cand] = points_in_open_space(V[cand], s)
    keep &= np.where(bounded, inside_v[np.maximum(rv[:, 0], 0)] & inside_v[np.maximum(rv[:, 1], 0)], False)
    mids = 0.5 * (V[rv[keep, 0]] + V[rv[keep, 1]])
    ok_mid = points_in_open_space(mids, s)
    kept = np.flatnonzero(keep)[ok_mid]

    # generators: the input points of every ridge around a vertex
    gens: dict[int, set] = {}
    used = set(rv[kept].ravel().tolist())
    for r in np.flatnonzero(bounded):
        a, b = rv[r]
        if a in used:
            gens.setdefault(int(a), set()).update(rp[r].tolist())
        if b in used:
            gens.setdefault(int(b), set()).update(rp[r].tolist())

    # merge coincident Voronoi vertices (cocircular samples)
    used_ids = np.array(sorted(used), dtype=np.int64)
    rep = {int(v): int(v) for v in used_ids}
    if len(used_ids) > 1:
        tree = cKDTree(V[used_ids])
        tol = 1e-7 * max(step, s.eps * 1e3)
        parent = np.arange(len(used_ids))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for i, j in sorted(tree.query_pairs(tol)):
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
        for k, v in enumerate(used_ids):
            rep[int(v)] = int(used_ids[find(k)])
    merged_gens: dict[int, set] = {}
    for v in used_ids:
        merged_gens.setdefault(rep[int(v)], set()).update(gens.get(int(v), ()))

    reps = np.array(sorted(merged_gens), dtype=np.int64)
    pos = V[reps].copy()
    gen_lists = [sorted(merged_gens[int(v)]) for v in reps]
    pos, gp, gf, ge, gt = _refine(s, smp, pos, gen_lists, step)

    # edges in representative index space
    rmap = {int(v): k for k, v in enumerate(reps)}
    ea = np.array([rmap[rep[int(a)]] for a in rv[kept, 0]], dtype=np.int64)
    eb = np.array([rmap[rep[int(b)]] for b in rv[kept, 1]], dtype=np.int64)
    E = np.unique(np.sort(np.stack([ea, eb], axis=1), axis=1), axis=0) if len(ea) else np.zeros((0, 2), np.int64)
    E = E[E[:, 0] != E[:, 1]]
    # refinement may push a few edges across a ring corner
    if len(E):
        mids = 0.5 * (pos[E[:, 0]] + pos[E[:, 1]])
        E = E[points_in_open_space(mids, s)]

    E = _prune_spurs(pos, E, step)
    E = _drop_fragments(pos, E, step)
    alive = np.unique(E.ravel())
    order = alive[np.lexsort((np.round(pos[alive, 1], 9), np.round(pos[alive, 0], 9)))]
    remap = -np.ones(len(pos), dtype=np.int64)
    remap[order] = np.arange(len(order))
    E = np.sort(remap[E], axis=1)
    E = E[np.lexsort((E[:, 1], E[:, 0]))]
    dist, _ = point_segment_distance(pos[order], s.edges) if len(order) else (np.zeros((0, 1)), None)
    clearance = dist.min(axis=1) if len(order) else np.zeros(0)
    return MedialAxisGraph(
        positions=pos[order], clearance=clearance, gen_points=gp[order], gen_feature=gf[order],
        gen_edge=ge[order], gen_t=gt[order], edges=E, feature_count=len(s.rings), step=step,
    )


def _refine(s: OpenSpace, smp: BoundarySamples, pos: np.ndarray, gen_lists: list, step: float):
    """Move each vertex onto the equidistance locus of its generator edges.

    Generators become the feet of the perpendiculars on those edges.  A
    vertex whose refinement fails (diverges, or another edge turns out to
    be closer) keeps its Voronoi position and sample generators.
    """
    n = len(pos)
    E = s.edges
    off = s.edge_offset
    site = -np.ones((n, 3), dtype=np.int64)
    sample_of = -np.ones((n, 3), dtype=np.int64)
    for i, g in enumerate(gen_lists):
        g = np.asarray(g, dtype=np.int64)
        edges_i = []
        samples_i = []
        for k in g:
            e = int(smp.edge[k])
            f = int(smp.feature[k])
            cands = [e]
            if smp.t[k] == 0.0:
                lo, hi = off[f], off[f + 1]
                cands.append(hi - 1 if e == lo else e - 1)
            if len(cands) > 1:
                d, _ = point_segment_distance(pos[i], E[cands])
                e = cands[int(np.argmin(d[0]))]
            if e not in edges_i:
                edges_i.append(e)
                samples_i.append(int(k))
        if len(edges_i) > 3:
            pick = _spread3(pos[i], smp.points[samples_i])
            edges_i = [edges_i[j] for j in pick]
            samples_i = [samples_i[j] for j in pick]
        site[i, :len(edges_i)] = edges_i
        sample_of[i, :len(samples_i)] = samples_i

    k_sites = (site >= 0).sum(axis=1)
    x = pos.copy()
    safe = np.where(site >= 0, site, 0)
    for _ in range(12):
        d, foot = _site_dist(x, E, safe)
        g = (x[:, None, :] - foot) / np.maximum(d, 1e-300)[..., None]
        delta = np.zeros_like(x)
        two = k_sites == 2
        if two.any():
            J = g[two, 1] - g[two, 0]
            r = d[two, 1] - d[two, 0]
            nn = np.maximum((J * J).sum(axis=1), 1e-300)
            delta[two] = -(r / nn)[:, None] * J
        three = k_sites >= 3
        if three.any():
            J = np.stack([g[three, 1] - g[three, 0], g[three, 2] - g[three, 0]], axis=1)
            r = np.stack([d[three, 1] - d[three, 0], d[three, 2] - d[three, 0]], axis=1)
            delta[three] = -np.einsum("nij,nj->ni", np.linalg.pinv(J), r)
        x = x + delta
        if np.abs(delta).max(initial=0.0) < 1e-13 * s.diameter:
            break

    d, foot = _site_dist(x, E, safe)
    valid_site = site >= 0
    dsite = np.where(valid_site, d, np.nan)
    spread = np.nanmax(dsite, axis=1) - np.nanmin(dsite, axis=1)
    dmin_all, _ = point_segment_distance(x, E)
    nearest = dmin_all.min(axis=1)
    ok = (k_sites >= 2) & (np.linalg.norm(x - pos, axis=1) <= step) \
        & (spread <= 1e-6 * np.maximum(np.nanmin(dsite, axis=1), 1e-300)) \
        & (nearest >= np.nanmin(dsite, axis=1) * (1 - 1e-6))
    ok &= points_in_open_space(x, s)

    out_pos = np.where(ok[:, None], x, pos)
    gp = np.full((n, 3, 2), np.nan)
    gf = -np.ones((n, 3), dtype=np.int64)
    ge = -np.ones((n, 3), dtype=np.int64)
    gt = np.zeros((n, 3))
    Ed = E[safe]
    seg = Ed[..., 2:] - Ed[..., :2]
    ll = np.maximum((seg * seg).sum(-1), 1e-300)
    tt_ref = np.clip(((foot - Ed[..., :2]) * seg).sum(-1) / ll, 0, 1)
    for i in range(n):
        for j in range(3):
            if site[i, j] < 0:
                continue
            e = int(site[i, j])
            if ok[i]:
                gp[i, j] = foot[i, j]
                gt[i, j] = tt_ref[i, j]
                ge[i, j] = e
            else:
                k = sample_of[i, j]
                gp[i, j] = smp.points[k]
                ge[i, j] = int(smp.edge[k])
                gt[i, j] = float(smp.t[k])
            gf[i, j] = int(s.edge_feature[e])
    return out_pos, gp, gf, ge, gt


def _site_dist(x: np.ndarray, E: np.ndarray, site: np.ndarray):
    Ed = E[site]                      # (n, 3, 4)
    a = Ed[..., :2]
    seg = Ed[..., 2:] - a
    ll = np.maximum((seg * seg).sum(-1), 1e-300)
    t = np.clip(((x[:, None, :] - a) * seg).sum(-1) / ll, 0.0, 1.0)
    foot = a + t[..., None] * seg
    d = np.linalg.norm(x[:, None, :] - foot, axis=-1)
    return d, foot


def _spread3(center: np.ndarray, pts: np.ndarray) -> list:
    """Indices of three points spread as evenly as possible around ``center``."""
    ang = np.arctan2(pts[:, 1] - center[1], pts[:, 0] - center[0])
    chosen = [0]
    while len(chosen) < 3:
        gaps = []
        for k in range(len(pts)):
            if k in chosen:
                gaps.append(-1.0)
                continue
            dd = np.abs(np.angle(np.exp(1j * (ang[k] - ang[chosen]))))
            gaps.append(float(dd.min()))
        chosen.append(int(np.argmax(gaps)))
    return chosen


def _adjacency(n: int, E: np.ndarray) -> list:
    adj = [[] for _ in range(n)]
    for a, b in E:
        adj[a].append(b)
        adj[b].append(a)
    return adj


def _prune_spurs(pos: np.ndarray, E: np.ndarray, step: float) -> np.ndarray:
    """Remove leaf chains shorter than ``step`` that hang off a branch vertex."""
    if len(E) == 0:
        return E
    n = len(pos)
    adj = _adjacency(n, E)
    deg = np.array([len(a) for a in adj])
    dead_edges = set()
    for leaf in np.flatnonzero(deg == 1):
        chain = [int(leaf)]
        prev, cur = -1, int(leaf)
        length = 0.0
        while True:
            nxt = [v for v in adj[cur] if v != prev]
            if len(nxt) != 1:
                break
            length += float(np.hypot(*(pos[nxt[0]] - pos[cur])))
            prev, cur = cur, nxt[0]
            chain.append(cur)
            if deg[cur] != 2:
                break
        if deg[cur] >= 3 and length < step:
            for u, v in zip(chain[:-1], chain[1:]):
                dead_edges.add((min(u, v), max(u, v)))
    if not dead_edges:
        return E
    mask = np.array([(int(a), int(b)) not in dead_edges for a, b in E])
    return E[mask]


def _drop_fragments(pos: np.ndarray, E: np.ndarray, step: float) -> np.ndarray:
    """Drop connected pieces whose total length is below one sample step."""
    if len(E) == 0:
        return E
    n = len(pos)
    A = coo_matrix((np.ones(len(E)), (E[:, 0], E[:, 1])), shape=(n, n))
    _, lab = connected_components(A, directed=False)
    lens = np.hypot(*(pos[E[:, 0]] - pos[E[:, 1]]).T)
    total = np.bincount(lab[E[:, 0]], weights=lens, minlength=lab.max() + 1)
    return E[total[lab[E[:, 0]]] >= step]


def nearest_medial_vertex(p, g: MedialAxisGraph) -> MedialVertex:
    """Closest medial vertex to ``p``; ties go to the lowest index."""
    return g.vertices[nearest_vertex_index(p, g)]


def nearest_vertex_index(p, g: MedialAxisGraph) -> int:
    if len(g) == 0:
        raise EmptyGraph("medial graph has no vertices")
    q = np.asarray(tuple(p), dtype=float)
    d, _ = g.tree.query(q)
    hits = g.tree.query_ball_point(q, d * (1 + 1e-12) + 1e-15)
    return int(min(hits)) if hits else int(g.tree.query(q)[1])


def medial_chains(g: MedialAxisGraph) -> list:
    """Vertex chains between branch points / leaves (degree-2 runs merged)."""
    n = len(g)
    adj = _adjacency(n, g.edges)
    deg = g.degree
    seen = set()
    chains = []

    def key(u, v):
        return (u, v) if u < v else (v, u)

    for start in range(n):
        if deg[start] == 2:
            continue
        for nb in adj[start]:
            if key(start, nb) in seen:
                continue
            chain = [start, nb]
            seen.add(key(start, nb))
            prev, cur = start, nb
            while deg[cur] == 2:
                nxt = adj[cur][0] if adj[cur][0] != prev else adj[cur][1]
                if key(cur, nxt) in seen:
                    break
                seen.add(key(cur, nxt))
                chain.append(nxt)
                prev, cur = cur, nxt
            chains.append(chain)
    # pure cycles of degree-2 vertices
    for a, b in g.edges:
        if key(int(a), int(b)) in seen:
            continue
        chain = [int(a), int(b)]
        seen.add(key(int(a), int(b)))
        prev, cur = int(a), int(b)
        while cur != int(a):
            nxt = adj[cur][0] if adj[cur][0] != prev else adj[cur][1]
            if key(cur, nxt) in seen:
                break
            seen.add(key(cur, nxt))
            chain.append(nxt)
            prev, cur = cur, nxt
        chains.append(chain)
    return chains


def medial_segment_lengths(g: MedialAxisGraph) -> list:
    """Length of every medial segment, degree-2 chains merged into one."""
    out = []
    for chain in medial_chains(g):
        pts = g.positions[chain]
        out.append(float(np.hypot(*np.diff(pts, axis=0).T).sum()))
    return out
