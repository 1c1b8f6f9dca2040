"""Reduce a ray set to an axial map.

Every strategy shares one engine: select a ray as a line, form its bucket,
merge it into the accumulated bucket region, and delete every remaining
ray that lies (by length fraction) inside that region.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import shapely

from .bucket import THETA, Bucket, bucket_formation, fraction_inside
from .geometry import Chord, Point2, _clip_params, _hit_params, clip_ray, point_in_open_space, segments_cross
from .isovist import EPS_LEN, Ray, RaySet, _ChordStore, _pick_ridge, compute_fans, isovist_ridge
from .medial import MedialAxisGraph
from .openspace import OpenSpace

STRATEGIES = ("global", "local", "recursive_local")


class SeedOutside(ValueError):
    pass


@dataclass(eq=False)
class AxialMap:
    lines: list
    strategy: str
    scene: OpenSpace
    provenance: list = field(default_factory=list)
    buckets: list = field(default_factory=list)
    fallbacks: int = 0

    def __len__(self):
        return len(self.lines)

    @property
    def array(self) -> np.ndarray:
        if not self.lines:
            return np.zeros((0, 4))
        return np.array([r.as_array() for r in self.lines])

    @property
    def lengths(self) -> list:
        return [r.length for r in self.lines]


class _Engine:
    def __init__(self, rs: RaySet, s: OpenSpace, g: MedialAxisGraph, theta: float = THETA):
        if not (0 < theta <= 1):
            raise ValueError(f"theta must be in (0, 1], got {theta!r}")
        self.rays = list(rs.rays)
        self.s, self.g, self.theta = s, g, theta
        self.arr = rs.array if len(rs) else np.zeros((0, 4))
        self.length = rs.lengths if len(rs) else np.zeros(0)
        self.alive = np.ones(len(self.rays), dtype=bool)
        self.geoms = shapely.linestrings(self.arr.reshape(-1, 2, 2)) if len(self.rays) else np.array([])
        self.tree = shapely.STRtree(self.geoms)
        self.region = None
        self.lines: list = []
        self.selected: list = []
        self.provenance: list = []
        self.buckets: list = []
        self.fallbacks = 0
        self.tie = 1e-9 * s.diameter

    def best(self, cand: np.ndarray) -> int:
        """Longest candidate; ties → more crossings with lines so far, then lowest id."""
        L = self.length[cand]
        top = cand[L >= L.max() - self.tie]
        if len(top) > 1 and self.selected:
            cross = segments_cross(self.arr[top], self.arr[self.selected]).sum(axis=1)
            top = top[cross == cross.max()]
        return int(top.min())

    def select(self, i: int) -> Bucket:
        self.alive[i] = False
        self.selected.append(i)
        self.lines.append(self.rays[i])
        b = bucket_formation(self.rays[i], self.s, self.g)
        self.fallbacks += int(b.fallback)
        self.buckets.append(b)
        self.region = b.polygon if self.region is None else shapely.union(self.region, b.polygon)
        shapely.prepare(self.region)
        hits = self.tree.query(b.polygon)
        hits = hits[self.alive[hits]]
        deleted = []
        if len(hits):
            frac = fraction_inside(self.arr[hits], self.region)
            gone = hits[frac >= self.theta - 1e-12]
            self.alive[gone] = False
            deleted = sorted(int(self.rays[k].id) for k in gone)
        self.provenance.append(deleted)
        return b

    def crossing(self, i: int) -> np.ndarray:
        alive = np.flatnonzero(self.alive)
        if len(alive) == 0:
            return alive
        near = self.tree.query(self.geoms[i])
        near = near[self.alive[near]]
        if len(near) == 0:
            return near
        return near[segments_cross(self.arr[i:i + 1], self.arr[near])[0]]

    def cleanup(self) -> None:
        """Drop lines already held by the union of the other lines' buckets.

        Latest selections are tried first.  A line is kept if dropping it
        would split the intersection graph of the remaining lines.
        """
        k = len(self.lines)
        keep = np.ones(k, dtype=bool)
        arr = self.arr[self.selected]
        for i in range(k - 1, -1, -1):
            others = np.flatnonzero(keep)
            others = others[others != i]
            if len(others) == 0:
                continue
            region = shapely.union_all([self.buckets[j].polygon for j in others])
            if fraction_inside(arr[i], region)[0] < self.theta - 1e-12:
                continue
            if _components(arr[keep]) < _components(arr[others]):
                continue
            keep[i] = False
            # rays the dropped line deleted stay deleted: the others cover them
            j = int(others[np.argmin(np.abs(others - i))])
            self.provenance[j] = sorted(self.provenance[j] + self.provenance[i] + [self.lines[i].id])
        self.lines = [x for x, kp in zip(self.lines, keep) if kp]
        self.selected = [x for x, kp in zip(self.selected, keep) if kp]
        self.provenance = [x for x, kp in zip(self.provenance, keep) if kp]
        self.buckets = [x for x, kp in zip(self.buckets, keep) if kp]

    def result(self, strategy: str) -> AxialMap:
        self.cleanup()
        return AxialMap(list(self.lines), strategy, self.s, self.provenance, self.buckets, self.fallbacks)


def _components(arr: np.ndarray) -> int:
    """Connected components of the intersection graph of chords ``arr``."""
    from scipy.sparse.csgraph import connected_components

    if len(arr) == 0:
        return 0
    A = segments_cross(arr, arr)
    return int(connected_components(A, directed=False)[0])


def reduce_global(rs: RaySet, s: OpenSpace, g: MedialAxisGraph, theta: float = THETA) -> AxialMap:
    """Repeatedly take the longest surviving ray and delete what its bucket covers."""
    if len(rs) == 0:
        raise ValueError("empty ray set")
    eng = _Engine(rs, s, g, theta)
    while eng.alive.any():
        eng.select(eng.best(np.flatnonzero(eng.alive)))
    return eng.result("global")


def reduce_local(rs: RaySet, s: OpenSpace, g: MedialAxisGraph, theta: float = THETA) -> AxialMap:
    """Depth-first variant: each next line must cross the current one.

    When no surviving ray crosses any line on the stack, the search restarts
    from the longest survivor.
    """
    if len(rs) == 0:
        raise ValueError("empty ray set")
    eng = _Engine(rs, s, g, theta)
    while eng.alive.any():
        start = eng.best(np.flatnonzero(eng.alive))
        eng.select(start)
        stack = [start]
        while stack:
            cand = eng.crossing(stack[-1])
            if len(cand) == 0:
                stack.pop()
                continue
            nxt = eng.best(cand)
            eng.select(nxt)
            stack.append(nxt)
    return eng.result("local")


def _default_seed(s: OpenSpace, g: MedialAxisGraph, angular_step: float, eps_len: float) -> Ray:
    c = s.polygon.centroid
    p = np.array([c.x, c.y])
    if not point_in_open_space(p, s):
        p = g.positions[int(g.tree.query(p)[1])]
    return isovist_ridge(p, s, None, angular_step, eps_len)


def _seed_ray(seed, s: OpenSpace) -> Ray:
    c = seed if isinstance(seed, Chord) else Chord.from_array(np.asarray(seed, dtype=float).ravel())
    arr = c.as_array()
    mid = 0.5 * (arr[:2] + arr[2:])
    inside = shapely.covers(s.polygon, shapely.LineString(arr.reshape(2, 2)))
    if not inside:
        # tolerate endpoints on the boundary within the scene tolerance
        inside = point_in_open_space(arr[:2], s) and point_in_open_space(arr[2:], s) \
            and shapely.covers(s.polygon.buffer(s.eps), shapely.LineString(arr.reshape(2, 2)))
    if not inside:
        raise SeedOutside("seed line leaves open space")
    ang = math.degrees(math.atan2(arr[3] - arr[1], arr[2] - arr[0]))
    ext = clip_ray(mid, ang, s)
    return Ray(ext, Point2(*mid), ext.length, -1)


def generate_local(s: OpenSpace, seed=None, g: Optional[MedialAxisGraph] = None,
                   angular_step: float = 1.0, theta: float = THETA, eps_len: float = EPS_LEN,
                   max_rays: Optional[int] = None, threads: Optional[int] = None) -> AxialMap:
    """Grow an axial map outward from one line, then clean it with a global pass.

    Ridges are computed at points spaced a third of the clearance apart along
    the current ray; the longest becomes a line, its bucket joins the
    accumulated region, and every surviving ridge is explored in turn.
    """
    from .medial import compute_medial_axis

    g = g if g is not None else compute_medial_axis(s)
    cur = _seed_ray(seed, s) if seed is not None else _default_seed(s, g, angular_step, eps_len)
    spacing = s.clearance / 3.0
    max_rays = max_rays or max(200, 20 * len(g))
    store = _ChordStore(tol=s.eps * 10)
    seen = _ChordStore(tol=s.eps * 10)
    lines: list = []
    region = None

    def ridges_along(row: np.ndarray) -> np.ndarray:
        L = float(np.hypot(row[2] - row[0], row[3] - row[1]))
        n = max(1, int(math.floor(L / spacing)))
        ts = (np.arange(n) + 0.5) / n
        pts = row[:2] + ts[:, None] * (row[2:] - row[:2])
        ctx = np.array([r.as_array() for r in lines]).reshape(-1, 4)
        out = []
        for f in compute_fans(pts, s, angular_step, threads):
            f = f[np.all(np.isfinite(f), axis=1)]
            if region is not None and len(f):
                # the dominant direction among what the buckets do not hold yet
                f = f[_fraction_sampled(f, region) < theta]
            if len(f):
                out.append(f[_pick_ridge(f, ctx, eps_len)])
        return np.array(out).reshape(-1, 4)

    def fresh(rows: np.ndarray) -> np.ndarray:
        if region is not None and len(rows):
            rows = rows[fraction_inside(rows, region) < theta - 1e-12]
        return np.array([r for r in rows if store.find(r) < 0]).reshape(-1, 4)

    stack = [cur.as_array()]
    processed = 0
    while stack and processed < max_rays:
        row = stack.pop()
        if seen.find(row) >= 0:
            continue
        seen.add(row)
        processed += 1
        if region is not None and fraction_inside(row, region)[0] >= theta - 1e-12:
            continue
        ridges = fresh(np.vstack([row, ridges_along(row)]))
        if len(ridges) == 0:
            continue
        lens = np.hypot(ridges[:, 2] - ridges[:, 0], ridges[:, 3] - ridges[:, 1])
        order = np.argsort(-lens, kind="stable")
        top = ridges[order[0]]
        store.add(top)
        seen.add(top)
        c = Chord.from_array(top)
        ray = Ray(c, Point2(*(0.5 * (top[:2] + top[2:]))), c.length, len(lines))
        lines.append(ray)
        b = bucket_formation(ray, s, g)
        region = b.polygon if region is None else shapely.union(region, b.polygon)
        shapely.prepare(region)
        # branches off the new line, now that its own bucket is excluded
        rest = fresh(np.vstack([ridges[order[1:]], ridges_along(top)]))
        # shortest pushed first so the longest is explored next
        for k in np.argsort(np.hypot(rest[:, 2] - rest[:, 0], rest[:, 3] - rest[:, 1]), kind="stable"):
            stack.append(rest[k])
    rs = RaySet(lines, s, {"angular_step": angular_step, "eps_len": eps_len})
    m = reduce_global(rs, s, g, theta)
    m.strategy = "recursive_local"
    return m


def _fraction_sampled(chords: np.ndarray, region, k: int = 48) -> np.ndarray:
    """Approximate length fraction inside ``region`` from ``k`` midpoints per chord."""
    ts = (np.arange(k) + 0.5) / k
    P = chords[:, None, :2] + ts[None, :, None] * (chords[:, None, 2:] - chords[:, None, :2])
    inside = shapely.contains_xy(region, P[..., 0].ravel(), P[..., 1].ravel())
    return inside.reshape(len(chords), k).mean(axis=1)


# --------------------------------------------------------------------------
# surveillance
# --------------------------------------------------------------------------

def sample_open_space(s: OpenSpace, n: int = 10_000, seed: int = 0) -> np.ndarray:
    """Uniform random points in open space (rejection sampling, fixed seed)."""
    rng = np.random.default_rng(seed)
    lo, hi = s.outer.min(axis=0), s.outer.max(axis=0)
    out = []
    got = 0
    frac = max(s.polygon.area / float(np.prod(hi - lo)), 1e-3)
    while got < n:
        k = int((n - got) / frac * 1.2) + 16
        P = lo + rng.random((k, 2)) * (hi - lo)
        P = P[shapely.contains_xy(s.polygon, P[:, 0], P[:, 1])]
        out.append(P)
        got += len(P)
    return np.vstack(out)[:n]


def visibility_polygon(p, s: OpenSpace) -> shapely.Polygon:
    """Exact visibility polygon of ``p`` (rays at every ring vertex, nudged both ways)."""
    o = np.asarray(p, dtype=float)
    V = np.vstack(s.rings)
    ang = np.arctan2(V[:, 1] - o[1], V[:, 0] - o[0])
    da = 1e-7
    ang = np.unique(np.concatenate([ang - da, ang, ang + da]))
    dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    t = _hit_params(o[0], o[1], dirs, s.edges)
    fwd, _ = _clip_params(t, s.eps * 1e-3)
    fwd = np.where(np.isfinite(fwd), fwd, 0.0)
    pts = o + fwd[:, None] * dirs
    poly = shapely.Polygon(pts)
    if not poly.is_valid:
        poly = poly.buffer(0)
    return poly


def surveillance_mask(points: np.ndarray, lines: np.ndarray, s: OpenSpace, rounds: int = 3) -> np.ndarray:
    """For each point, whether some line is visible from it.

    Fast path: the perpendicular foot on one of the nearest lines is in
    unobstructed sight.  Otherwise the point's exact visibility polygon is
    intersected with every line.
    """
    P = np.asarray(points, dtype=float).reshape(-1, 2)
    Lr = np.asarray(lines, dtype=float).reshape(-1, 4)
    seen = np.zeros(len(P), dtype=bool)
    if len(Lr) == 0 or len(P) == 0:
        return seen
    a = Lr[None, :, :2]
    d = Lr[None, :, 2:] - a
    dd = (d * d).sum(-1)
    t = np.clip(((P[:, None, :] - a) * d).sum(-1) / dd, 0, 1)
    foot = a + t[..., None] * d
    dist = np.linalg.norm(foot - P[:, None, :], axis=-1)
    order = np.argsort(dist, axis=1)
    poly = s.polygon
    for k in range(min(rounds, len(Lr))):
        todo = np.flatnonzero(~seen)
        if len(todo) == 0:
            break
        q = foot[todo, order[todo, k]]
        segs = np.stack([P[todo], q], axis=1)
        zero = np.all(np.abs(segs[:, 0] - segs[:, 1]) < 1e-12, axis=1)
        ok = np.zeros(len(todo), dtype=bool)
        ok[zero] = True
        if (~zero).any():
            ok[~zero] = shapely.covers(poly, shapely.linestrings(segs[~zero]))
        seen[todo[ok]] = True
    geoms = shapely.linestrings(Lr.reshape(-1, 2, 2))
    for i in np.flatnonzero(~seen):
        vis = visibility_polygon(P[i], s)
        seen[i] = bool(shapely.intersects(vis, geoms).any())
    return seen


def detect_concave_gaps(m: AxialMap, s: OpenSpace, n_samples: int = 10_000, seed: int = 0) -> list:
    """Sampled open-space points that no axial line can see."""
    P = sample_open_space(s, n_samples, seed)
    seen = surveillance_mask(P, m.array, s)
    return [Point2(float(x), float(y)) for x, y in P[~seen]]
