"""Planar primitives and the ray-clipping index.

All predicates share one coincidence tolerance per scene,
``eps = 1e-9 * diameter`` (see :func:`scene_eps`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

import numpy as np
import shapely

if TYPE_CHECKING:  # pragma: no cover
    from .openspace import OpenSpace

EPS_SCALE = 1e-9


class GeometryError(Exception):
    """Base class for geometric precondition failures."""


class OriginOutside(GeometryError):
    """A ray origin or fan vantage point is not inside open space."""


class DegenerateScene(GeometryError):
    """Features touch (clearance at or below the coincidence tolerance)."""


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite coordinate ({self.x}, {self.y})")

    def __iter__(self):
        yield self.x
        yield self.y

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class Chord:
    a: Point2
    b: Point2

    def __post_init__(self):
        if not isinstance(self.a, Point2):
            object.__setattr__(self, "a", Point2(*map(float, self.a)))
        if not isinstance(self.b, Point2):
            object.__setattr__(self, "b", Point2(*map(float, self.b)))
        if self.length <= 1e-12 * max(1.0, abs(self.a.x), abs(self.a.y)):
            raise ValueError("degenerate chord: endpoints coincide")

    @property
    def length(self) -> float:
        return math.hypot(self.b.x - self.a.x, self.b.y - self.a.y)

    def as_array(self) -> np.ndarray:
        return np.array([self.a.x, self.a.y, self.b.x, self.b.y])

    @classmethod
    def from_array(cls, row) -> "Chord":
        return cls(Point2(float(row[0]), float(row[1])), Point2(float(row[2]), float(row[3])))


def scene_eps(diameter: float) -> float:
    return EPS_SCALE * diameter


def direction_vector(angle_deg):
    """Unit direction(s) for angles in degrees; exact on multiples of 90."""
    ang = np.atleast_1d(np.asarray(angle_deg, dtype=float))
    rad = np.radians(ang)
    c, s = np.cos(rad), np.sin(rad)
    quarter = np.isclose(np.mod(ang, 90.0), 0.0, atol=1e-12) | np.isclose(np.mod(ang, 90.0), 90.0, atol=1e-12)
    if quarter.any():
        k = np.round(ang[quarter] / 90.0).astype(int) % 4
        c[quarter] = np.array([1.0, 0.0, -1.0, 0.0])[k]
        s[quarter] = np.array([0.0, 1.0, 0.0, -1.0])[k]
    return np.stack([c, s], axis=-1)


# --------------------------------------------------------------------------
# segment predicates
# --------------------------------------------------------------------------

def segment_intersection(s1: Chord, s2: Chord, eps: float = 1e-12) -> Optional[Point2]:
    """Intersection of two closed segments.

    Proper crossings and touches (within ``eps``) return the contact point.
    Collinear overlaps return the midpoint of the shared sub-segment.
    """
    p = s1.a.as_array()
    r = s1.b.as_array() - p
    q = s2.a.as_array()
    u = s2.b.as_array() - q
    denom = _cross(r, u)
    qp = q - p
    len_r = math.hypot(*r)
    len_u = math.hypot(*u)
    if abs(denom) <= eps * max(len_r, len_u):
        # parallel; collinear iff q lies on the line through s1
        if abs(_cross(qp, r)) > eps * len_r:
            return None
        rr = float(r @ r)
        t0 = float(qp @ r) / rr
        t1 = t0 + float(u @ r) / rr
        lo, hi = max(0.0, min(t0, t1)), min(1.0, max(t0, t1))
        tol = eps / len_r
        if lo > hi + tol:
            return None
        mid = 0.5 * (lo + hi)
        return Point2(*(p + mid * r))
    t = _cross(qp, u) / denom
    w = _cross(qp, r) / denom
    tol_t = eps / len_r
    tol_w = eps / len_u
    if -tol_t <= t <= 1 + tol_t and -tol_w <= w <= 1 + tol_w:
        t = min(max(t, 0.0), 1.0)
        return Point2(*(p + t * r))
    return None


def _cross(a, b) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


def segments_cross(A: np.ndarray, B: np.ndarray, eps: float = 1e-12) -> np.ndarray:
    """Boolean matrix ``M[i, j]``: segment ``A[i]`` meets segment ``B[j]``.

    ``A`` is (n, 4) and ``B`` is (m, 4) as ``x0, y0, x1, y1`` rows.  Agrees with
    :func:`segment_intersection` being present, collinear overlaps included.
    """
    A = np.asarray(A, dtype=float).reshape(-1, 4)
    B = np.asarray(B, dtype=float).reshape(-1, 4)
    px, py = A[:, 0:1], A[:, 1:2]
    rx, ry = A[:, 2:3] - px, A[:, 3:4] - py
    qx, qy = B[None, :, 0], B[None, :, 1]
    ux, uy = B[None, :, 2] - qx, B[None, :, 3] - qy
    len_r = np.hypot(rx, ry)
    len_u = np.hypot(ux, uy)
    denom = rx * uy - ry * ux
    qpx, qpy = qx - px, qy - py
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (qpx * uy - qpy * ux) / denom
        w = (qpx * ry - qpy * rx) / denom
        tol_t = eps / len_r
        tol_w = eps / len_u
        proper = (t >= -tol_t) & (t <= 1 + tol_t) & (w >= -tol_w) & (w <= 1 + tol_w)
        parallel = np.abs(denom) <= eps * np.maximum(len_r, len_u)
        collinear = parallel & (np.abs(qpx * ry - qpy * rx) <= eps * len_r)
        rr = rx * rx + ry * ry
        t0 = (qpx * rx + qpy * ry) / rr
        t1 = t0 + (ux * rx + uy * ry) / rr
        lo = np.maximum(0.0, np.minimum(t0, t1))
        hi = np.minimum(1.0, np.maximum(t0, t1))
        overlap = lo <= hi + tol_t
    return np.where(parallel, collinear & overlap, proper)


def point_segment_distance(P: np.ndarray, E: np.ndarray):
    """Distances from points ``P`` (n, 2) to segments ``E`` (m, 4).

    Returns ``(dist, foot_t)`` both shaped (n, m); ``foot_t`` is the clamped
    parameter of the closest point along each segment.
    """
    P = np.asarray(P, dtype=float).reshape(-1, 2)
    E = np.asarray(E, dtype=float).reshape(-1, 4)
    ax, ay = E[None, :, 0], E[None, :, 1]
    dx, dy = E[None, :, 2] - ax, E[None, :, 3] - ay
    px, py = P[:, 0:1], P[:, 1:2]
    dd = dx * dx + dy * dy
    with np.errstate(divide="ignore", invalid="ignore"):
        t = ((px - ax) * dx + (py - ay) * dy) / dd
    t = np.clip(np.nan_to_num(t), 0.0, 1.0)
    cx = ax + t * dx - px
    cy = ay + t * dy - py
    return np.hypot(cx, cy), t


# --------------------------------------------------------------------------
# ray clipping
# --------------------------------------------------------------------------

def _hit_params(ox: float, oy: float, dirs: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Ray-line parameters ``t`` where each direction's line meets each edge.

    Returns a (k, m) array with NaN where there is no hit.  Every entry is a
    pure elementwise function of (origin, direction, edge), so evaluating on
    a subset of edges reproduces the exhaustive values bit for bit.
    """
    dx = dirs[:, 0:1]
    dy = dirs[:, 1:2]
    ax = edges[None, :, 0] - ox
    ay = edges[None, :, 1] - oy
    ex = edges[None, :, 2] - edges[None, :, 0]
    ey = edges[None, :, 3] - edges[None, :, 1]
    denom = dx * ey - dy * ex
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (ax * ey - ay * ex) / denom
        u = (ax * dy - ay * dx) / denom
    ok = (np.abs(denom) > 1e-15) & (u >= -1e-12) & (u <= 1.0 + 1e-12)
    return np.where(ok, t, np.nan)


def _clip_params(t: np.ndarray, tmin: float):
    fwd = np.where(t > tmin, t, np.inf).min(axis=-1)
    back = np.where(t < -tmin, t, -np.inf).max(axis=-1)
    return fwd, back


class BruteForceIndex:
    """Exhaustive edge scan; the reference every other index must match."""

    def __init__(self, edges: np.ndarray):
        self.edges = np.ascontiguousarray(edges, dtype=float).reshape(-1, 4)

    def clip_params(self, origin, direction, tmin: float):
        t = _hit_params(origin[0], origin[1], np.asarray(direction, float).reshape(1, 2), self.edges)
        fwd, back = _clip_params(t, tmin)
        return float(fwd[0]), float(back[0])


class GridIndex:
    """Uniform grid over edge bounding boxes with 2D-DDA traversal.

    Each edge is registered in every cell its bounding box overlaps, so a
    traversal that visits the cells along a ray sees every edge the ray can
    hit inside them.  Hit parameters come from the same arithmetic as
    :class:`BruteForceIndex`, which makes results identical.
    """

    def __init__(self, edges: np.ndarray, cells_per_edge: float = 1.0):
        self.edges = np.ascontiguousarray(edges, dtype=float).reshape(-1, 4)
        lo = np.minimum(self.edges[:, :2], self.edges[:, 2:]).min(axis=0)
        hi = np.maximum(self.edges[:, :2], self.edges[:, 2:]).max(axis=0)
        span = np.maximum(hi - lo, 1e-12)
        n = max(1, int(math.sqrt(len(self.edges) * cells_per_edge)))
        self.shape = (n, n)
        pad = span * 1e-9
        self.lo = lo - pad
        self.cell = (span + 2 * pad) / n
        self.cells: dict[tuple[int, int], list[int]] = {}
        e_lo = np.minimum(self.edges[:, :2], self.edges[:, 2:])
        e_hi = np.maximum(self.edges[:, :2], self.edges[:, 2:])
        c_lo = np.clip(np.floor((e_lo - self.lo) / self.cell).astype(int), 0, n - 1)
        c_hi = np.clip(np.floor((e_hi - self.lo) / self.cell).astype(int), 0, n - 1)
        for k in range(len(self.edges)):
            for i in range(c_lo[k, 0], c_hi[k, 0] + 1):
                for j in range(c_lo[k, 1], c_hi[k, 1] + 1):
                    self.cells.setdefault((i, j), []).append(k)

    def _walk(self, origin, d, tmin):
        """Nearest hit parameter along +d from origin (inf if none)."""
        nx, ny = self.shape
        rel = (np.asarray(origin, float) - self.lo) / self.cell
        i, j = int(math.floor(rel[0])), int(math.floor(rel[1]))
        dx, dy = float(d[0]), float(d[1])
        step_i = 1 if dx > 0 else -1
        step_j = 1 if dy > 0 else -1
        inf = math.inf
        if dx != 0:
            nxt = (i + (1 if dx > 0 else 0)) * self.cell[0] + self.lo[0]
            t_max_x = (nxt - origin[0]) / dx
            t_dx = self.cell[0] / abs(dx)
        else:
            t_max_x, t_dx = inf, inf
        if dy != 0:
            nxt = (j + (1 if dy > 0 else 0)) * self.cell[1] + self.lo[1]
            t_max_y = (nxt - origin[1]) / dy
            t_dy = self.cell[1] / abs(dy)
        else:
            t_max_y, t_dy = inf, inf
        seen: set[int] = set()
        best = inf
        dvec = np.array([[dx, dy]])
        while True:
            if 0 <= i < nx and 0 <= j < ny:
                fresh = [k for k in self.cells.get((i, j), ()) if k not in seen]
                if fresh:
                    seen.update(fresh)
                    t = _hit_params(origin[0], origin[1], dvec, self.edges[fresh])
                    fwd, _ = _clip_params(t, tmin)
                    best = min(best, float(fwd[0]))
            t_exit = min(t_max_x, t_max_y)
            if best <= t_exit:
                return best
            if t_max_x < t_max_y:
                i += step_i
                t_max_x += t_dx
            else:
                j += step_j
                t_max_y += t_dy
            if (i < 0 and step_i < 0) or (i >= nx and step_i > 0) or \
               (j < 0 and step_j < 0) or (j >= ny and step_j > 0):
                return best

    def clip_params(self, origin, direction, tmin: float):
        d = np.asarray(direction, float).reshape(2)
        fwd = self._walk(origin, d, tmin)
        back = -self._walk(origin, -d, tmin)
        return fwd, back


def build_index(s: "OpenSpace", kind: str = "grid"):
    if kind == "grid":
        return GridIndex(s.edges)
    if kind == "brute":
        return BruteForceIndex(s.edges)
    raise ValueError(f"unknown index kind {kind!r}")


def point_in_open_space(p, s: "OpenSpace") -> bool:
    """True iff ``p`` is inside the outer ring and outside every hole.

    Points on a ring (within the scene tolerance) count as inside.
    """
    return bool(points_in_open_space(np.asarray(tuple(p), dtype=float).reshape(1, 2), s)[0])


def points_in_open_space(P: np.ndarray, s: "OpenSpace") -> np.ndarray:
    P = np.asarray(P, dtype=float).reshape(-1, 2)
    inside = shapely.contains_xy(s.polygon, P[:, 0], P[:, 1])
    if not inside.all():
        rest = ~inside
        pts = shapely.points(P[rest])
        inside[rest] = shapely.distance(s.polygon.boundary, pts) <= s.eps
    return inside


def clip_ray(origin, direction: float, s: "OpenSpace", idx=None) -> Chord:
    """Maximal chord through ``origin`` along ``direction`` (degrees).

    The chord extends both ways until the first hole or outer-boundary edge.
    """
    o = np.asarray(tuple(origin), dtype=float)
    if not point_in_open_space(o, s):
        raise OriginOutside(f"origin {tuple(o)} is not in open space")
    idx = idx if idx is not None else s.index
    d = direction_vector(direction)[0]
    fwd, back = idx.clip_params(o, d, s.eps * 1e-3)
    if not (math.isfinite(fwd) and math.isfinite(back)):
        raise OriginOutside(f"ray from {tuple(o)} escapes the scene")
    return Chord(Point2(*(o + back * d)), Point2(*(o + fwd * d)))


def fan_chords(origin, angles_deg: np.ndarray, edges: np.ndarray, tmin: float) -> np.ndarray:
    """Vectorised exhaustive clipping of a fan; rows are ``x0, y0, x1, y1``."""
    o = np.asarray(origin, dtype=float)
    dirs = direction_vector(angles_deg)
    t = _hit_params(o[0], o[1], dirs, edges)
    fwd, back = _clip_params(t, tmin)
    a = o + back[:, None] * dirs
    b = o + fwd[:, None] * dirs
    return np.hstack([a, b])


def min_clearance(s: "OpenSpace") -> float:
    """Smallest edge-to-edge gap between distinct features.

    With no holes this is the minimum width of the outer ring: the smallest
    distance between two of its edges that share no vertex.
    """
    if s.holes:
        rings = [shapely.LinearRing(s.outer)] + [shapely.LinearRing(h) for h in s.holes]
        best = math.inf
        for i in range(1, len(rings)):
            d = shapely.distance(rings[i], rings[:i])
            best = min(best, float(np.min(d)))
    else:
        best = _ring_min_width(s.outer)
    if best <= s.eps:
        raise DegenerateScene(f"features touch (clearance {best:g})")
    return best


def _ring_min_width(ring: np.ndarray) -> float:
    n = len(ring)
    segs = np.hstack([ring, np.roll(ring, -1, axis=0)])
    lines = shapely.linestrings(segs.reshape(-1, 2, 2))
    d = shapely.distance(lines[:, None], lines[None, :])
    i, j = np.indices((n, n))
    gap = np.abs(i - j)
    adjacent = (gap <= 1) | (gap == n - 1)
    d = np.where(adjacent, np.inf, d)
    return float(d.min())
