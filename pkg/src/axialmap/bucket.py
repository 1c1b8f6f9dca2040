"""Bucket polygons: the part of open space a single ray stands for.

A bucket is chained from boundary points associated with the ray through
the medial axis.  Each medial vertex whose clearance disk the ray crosses
contributes its generators; the chord's two end points come first and
last.  Points are split by side of the ray, ordered along the ray axis,
and linked into a ring, walking the boundary around short corners so the
ring hugs the walls.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import shapely

from .geometry import point_segment_distance, segments_cross
from .isovist import Ray
from .medial import MedialAxisGraph
from .openspace import OpenSpace

THETA = 0.98
# a boundary arc is walked when it is at most this many times the straight gap
ARC_RATIO = 2.0


class AssociationFailure(RuntimeError):
    """The ray crosses the medial axis far from every medial vertex."""


@dataclass(frozen=True, eq=False)
class Bucket:
    ring: np.ndarray    # (k, 2), not closed
    ray_id: int
    chain: np.ndarray   # (m, 2) source points in chain order: e1, side A, e2, side B
    polygon: shapely.Polygon  # the ring plus any holes it encloses
    fallback: bool = False


def _ring_positions(s: OpenSpace, feature: np.ndarray, edge: np.ndarray, t: np.ndarray) -> np.ndarray:
    out = np.empty(len(feature))
    for f in np.unique(feature):
        m = feature == f
        cum = s.ring_cumlen[f]
        e = edge[m] - s.edge_offset[f]
        out[m] = cum[e] + t[m] * (cum[e + 1] - cum[e])
    return out


def _locate_on_boundary(s: OpenSpace, P: np.ndarray):
    """Feature, global edge and parameter of the boundary edge closest to each point."""
    d, t = point_segment_distance(P, s.edges)
    e = d.argmin(axis=1)
    return s.edge_feature[e], e, t[np.arange(len(P)), e]


def associated_vertices(r: Ray, g: MedialAxisGraph) -> np.ndarray:
    """Medial vertices whose clearance disk the ray's chord passes through."""
    c = r.as_array()
    d, _ = point_segment_distance(g.positions, c)
    hit = d[:, 0] <= g.clearance * (1 + 1e-9) + 1e-12
    near = []
    for p in (c[:2], c[2:]):
        near.append(int(g.tree.query(p)[1]))
    idx = set(np.flatnonzero(hit).tolist()) | set(near)
    return np.array(sorted(idx), dtype=np.int64)


def cut_points(r: Ray, g: MedialAxisGraph) -> np.ndarray:
    """Points where the ray crosses medial edges."""
    c = r.as_array().reshape(1, 4)
    seg = g.segments
    if len(seg) == 0:
        return np.zeros((0, 2))
    hit = segments_cross(c, seg)[0]
    if not hit.any():
        return np.zeros((0, 2))
    S = seg[hit]
    p, rr = c[0, :2], c[0, 2:] - c[0, :2]
    q, u = S[:, :2], S[:, 2:] - S[:, :2]
    den = rr[0] * u[:, 1] - rr[1] * u[:, 0]
    qp = q - p
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (qp[:, 0] * u[:, 1] - qp[:, 1] * u[:, 0]) / den
    # parallel overlaps: take the medial edge midpoint
    pts = np.where(np.isfinite(t)[:, None] & (np.abs(den) > 1e-15)[:, None],
                   p + np.clip(t, 0, 1)[:, None] * rr, 0.5 * (S[:, :2] + S[:, 2:]))
    return pts


def bucket_formation(r: Ray, s: OpenSpace, g: MedialAxisGraph) -> Bucket:
    """Bucket polygon of ray ``r``."""
    c = r.as_array()
    a, b = c[:2], c[2:]
    L = float(np.hypot(*(b - a)))
    u = (b - a) / L
    step = g.step

    cuts = cut_points(r, g)
    if len(cuts):
        dist, _ = g.tree.query(cuts)
        bad = dist > 2 * step
        if bad.any():
            x = cuts[int(np.argmax(bad))]
            raise AssociationFailure(
                f"ray {r.id}: cut point ({x[0]:.6g}, {x[1]:.6g}) has no medial vertex within {2 * step:.4g}")

    verts = associated_vertices(r, g)
    gp = g.gen_points[verts].reshape(-1, 2)
    gf = g.gen_feature[verts].ravel()
    ge = g.gen_edge[verts].ravel()
    gt = g.gen_t[verts].ravel()
    ok = gf >= 0
    gp, gf, ge, gt = gp[ok], gf[ok], ge[ok], gt[ok]
    if len(gp):
        key = np.round(gp / max(s.eps * 100, 1e-12)).astype(np.int64)
        _, first = np.unique(key, axis=0, return_index=True)
        first = np.sort(first)
        gp, gf, ge, gt = gp[first], gf[first], ge[first], gt[first]

    proj = (gp - a) @ u
    side = (gp - a) @ np.array([-u[1], u[0]])
    tol = max(s.eps, 1e-9 * L)
    pos = _ring_positions(s, gf, ge, gt) if len(gp) else np.zeros(0)

    ef, ee, et = _locate_on_boundary(s, np.vstack([a, b]))
    epos = _ring_positions(s, ef, ee, et)

    seq_a = _order_side(proj, gf, pos, side > tol, ascending=True, s=s)
    seq_b = _order_side(proj, gf, pos, side < -tol, ascending=False, s=s)

    # chain as (point, feature, ring position)
    chain = [(a, int(ef[0]), float(epos[0]))]
    chain += [(gp[i], int(gf[i]), float(pos[i])) for i in seq_a]
    chain.append((b, int(ef[1]), float(epos[1])))
    chain += [(gp[i], int(gf[i]), float(pos[i])) for i in seq_b]

    ring = _walk_chain(chain, s)
    chain_pts = np.array([p for p, _, _ in chain])
    poly = shapely.Polygon(ring) if len(ring) >= 3 else shapely.Polygon()
    fallback = False
    if not poly.is_valid or poly.area <= 0:
        fallback = True
        poly = shapely.MultiPoint(chain_pts).convex_hull
    poly = _clip_to_open_space(poly, s, c, step)
    ring_out = np.asarray(poly.exterior.coords)[:-1]
    shapely.prepare(poly)
    return Bucket(ring=ring_out, ray_id=r.id, chain=chain_pts, polygon=poly, fallback=fallback)


def _order_side(proj, feature, pos, mask, ascending: bool, s: OpenSpace) -> list:
    """Indices of one side's points in chain order.

    Points are ordered by projection on the ray axis; within a run of
    consecutive points on the same ring they follow the ring itself,
    against its orientation, which is the direction the chain travels.
    """
    idx = np.flatnonzero(mask)
    if len(idx) == 0:
        return []
    order = idx[np.argsort(proj[idx] if ascending else -proj[idx], kind="stable")]
    out = []
    k = 0
    while k < len(order):
        j = k
        while j + 1 < len(order) and feature[order[j + 1]] == feature[order[k]]:
            j += 1
        run = order[k:j + 1]
        if len(run) > 1:
            run = _ring_sorted_desc(run, pos, s.ring_cumlen[feature[run[0]]][-1])
        out.extend(int(i) for i in run)
        k = j + 1
    return out


def _ring_sorted_desc(run: np.ndarray, pos: np.ndarray, perimeter: float) -> np.ndarray:
    q = pos[run]
    o = np.argsort(q, kind="stable")
    qs = q[o]
    gaps = np.diff(np.concatenate([qs, [qs[0] + perimeter]]))
    cut = int(np.argmax(gaps))
    asc = np.concatenate([o[cut + 1:], o[:cut + 1]])
    return run[asc[::-1]]


def _walk_chain(chain: list, s: OpenSpace) -> np.ndarray:
    """Link chain points, inserting ring corners along short boundary arcs."""
    out = []
    n = len(chain)
    for k in range(n):
        p, f, q = chain[k]
        out.append(p)
        p2, f2, q2 = chain[(k + 1) % n]
        if f != f2:
            continue
        cum = s.ring_cumlen[f]
        per = cum[-1]
        arc = (q - q2) % per
        gap = float(np.hypot(*(p - p2)))
        if arc <= 1e-12 or arc > ARC_RATIO * gap + 1e-12:
            continue
        ring = s.rings[f]
        # ring vertices strictly inside the arc from q down to q2
        rel = (q - cum[:-1]) % per
        inside = np.flatnonzero((rel > 1e-12) & (rel < arc - 1e-12))
        if len(inside):
            inside = inside[np.argsort(rel[inside])]
            out.extend(ring[inside])
    pts = np.array(out)
    # drop consecutive duplicates
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.any(np.abs(np.diff(pts, axis=0)) > 1e-12, axis=1)
    pts = pts[keep]
    if len(pts) > 1 and np.all(np.abs(pts[0] - pts[-1]) <= 1e-12):
        pts = pts[:-1]
    return pts


def _clip_to_open_space(poly, s: OpenSpace, chord: np.ndarray, step: float) -> shapely.Polygon:
    """Intersect with open space and keep the part carrying the chord."""
    line = shapely.LineString(chord.reshape(2, 2))
    clipped = shapely.intersection(poly, s.polygon)
    parts = [p for p in shapely.get_parts(clipped) if isinstance(p, shapely.Polygon) and p.area > 0]
    if parts:
        best = max(parts, key=lambda p: (shapely.intersection(p, line).length, p.area))
        if shapely.intersection(best, line).length > 0:
            return shapely.Polygon(best.exterior.coords, [h.coords for h in best.interiors])
    # degenerate: a thin strip around the chord
    return shapely.intersection(line.buffer(step / 2, cap_style="flat"), s.polygon).buffer(0)


def fraction_inside(chords: np.ndarray, region) -> np.ndarray:
    """Length fraction of each chord (rows ``x0, y0, x1, y1``) inside ``region``."""
    chords = np.asarray(chords, dtype=float).reshape(-1, 4)
    if region is None or len(chords) == 0:
        return np.zeros(len(chords))
    lines = shapely.linestrings(chords.reshape(-1, 2, 2))
    inside = shapely.length(shapely.intersection(lines, region))
    return inside / np.hypot(chords[:, 2] - chords[:, 0], chords[:, 3] - chords[:, 1])


def ray_in_bucket(candidate: Ray, b: Bucket, theta: float = THETA) -> bool:
    """True iff at least ``theta`` of the candidate's length lies in the bucket."""
    if not (0 < theta <= 1):
        raise ValueError(f"theta must be in (0, 1], got {theta!r}")
    return bool(fraction_inside(candidate.as_array(), b.polygon)[0] >= theta - 1e-12)
