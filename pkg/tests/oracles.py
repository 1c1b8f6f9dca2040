"""Independent reference computations used by the tests.

Nothing here calls the package's ray clipping, index, medial or reduction
code; scenes are read only through their ring coordinates.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import shapely
from scipy.optimize import Bounds, LinearConstraint, milp


def scene_edges(rings) -> np.ndarray:
    out = []
    for r in rings:
        r = np.asarray(r, dtype=float)
        out.append(np.hstack([r, np.roll(r, -1, axis=0)]))
    return np.vstack(out)


def scene_polygon(rings) -> shapely.Polygon:
    return shapely.Polygon(rings[0], [list(map(tuple, h)) for h in rings[1:]])


def free_distance(P: np.ndarray, dirs: np.ndarray, E: np.ndarray) -> np.ndarray:
    """Distance from each point along each unit direction to the first boundary hit.

    Brute force over all edges; returns (n_points, n_dirs).
    """
    P = np.asarray(P, dtype=float)
    out = np.full((len(P), len(dirs)), np.inf)
    a, b = E[:, :2], E[:, 2:] - E[:, :2]
    for k, d in enumerate(dirs):
        den = d[0] * b[:, 1] - d[1] * b[:, 0]  # (m,)
        ok = np.abs(den) > 1e-15
        w = a[None, :, :] - P[:, None, :]  # (n, m, 2)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (w[..., 0] * b[:, 1] - w[..., 1] * b[:, 0]) / den
            u = (w[..., 0] * d[1] - w[..., 1] * d[0]) / den
        hit = ok & (u >= -1e-12) & (u <= 1 + 1e-12) & (t > 1e-9)
        out[:, k] = np.where(hit, t, np.inf).min(axis=1)
    return out


def raster_cells(rings, cell: float) -> np.ndarray:
    poly = scene_polygon(rings)
    x0, y0, x1, y1 = poly.bounds
    xs = np.arange(x0 + cell / 2, x1, cell)
    ys = np.arange(y0 + cell / 2, y1, cell)
    X, Y = np.meshgrid(xs, ys)
    P = np.column_stack([X.ravel(), Y.ravel()])
    inside = shapely.contains_xy(poly, P[:, 0], P[:, 1])
    return P[inside]


@dataclass
class CoverResult:
    count: int
    exact: bool
    n_candidates: int
    n_cells: int
    uncovered: int
    chosen: np.ndarray


def min_line_cover(rings, width: float, angle_step: float = 1.0, stride: int = 3,
                   min_parallel: float = 0.5) -> CoverResult:
    """Minimum number of chords covering a rasterized open space.

    A cell is covered by a chord when its perpendicular foot lies on the
    chord, the perpendicular path is unobstructed, and the chord through
    the cell parallel to it is at least ``min_parallel`` times as long.
    Candidates are every fan chord (``angle_step`` degrees) through one
    cell center per ``stride`` x ``stride`` block, deduplicated by coverage
    set.  ``exact`` is true when the MILP solver proves optimality.
    """
    E = scene_edges(rings)
    cell = width / 6.0
    C = raster_cells(rings, cell)
    n_ang = int(round(180.0 / angle_step))
    ang = np.deg2rad(np.arange(n_ang) * angle_step)
    # directions a, a + 180, a + 90, a + 270 per fan angle
    d0 = np.column_stack([np.cos(ang), np.sin(ang)])
    d90 = np.column_stack([-np.sin(ang), np.cos(ang)])
    fwd, back = free_distance(C, d0, E), free_distance(C, -d0, E)
    left, right = free_distance(C, d90, E), free_distance(C, -d90, E)
    par_len = fwd + back

    # candidate chords through a subset of cells
    gx = np.floor(C / (cell * stride) + 1e-9).astype(int)
    _, first = np.unique(gx, axis=0, return_index=True)
    origins = np.sort(first)
    rows, cover = [], []
    for k in range(n_ang):
        d, n = d0[k], d90[k]
        s_c = C @ d  # position along the chord direction
        o_c = C @ n  # signed offset across it
        for i in origins:
            lo, hi = s_c[i] - back[i, k], s_c[i] + fwd[i, k]
            off = o_c[i]
            L = hi - lo
            delta = off - o_c  # offset of the chord relative to each cell
            vis = np.where(delta >= 0, delta <= left[:, k] + 1e-9, -delta <= right[:, k] + 1e-9)
            m = vis & (s_c >= lo - 1e-9) & (s_c <= hi + 1e-9) & (par_len[:, k] >= min_parallel * L - 1e-9)
            rows.append((k, i, lo, hi))
            cover.append(np.packbits(m))
    cover = np.array(cover)
    uniq, idx = np.unique(cover, axis=0, return_index=True)
    A = np.unpackbits(uniq, axis=1)[:, : len(C)].astype(bool)
    keep = A.any(axis=1)
    A, idx = A[keep], idx[keep]
    covered = A.any(axis=0)
    A = A[:, covered]
    chosen, exact = _solve(A)
    chords = []
    for j in chosen:
        k, i, lo, hi = rows[idx[j]]
        d = d0[k]
        foot = C[i] - (C[i] @ d) * d
        chords.append(np.concatenate([foot + lo * d, foot + hi * d]))
    return CoverResult(len(chosen), exact, len(A), len(C), int((~covered).sum()), np.array(chords))


def _greedy(A: np.ndarray) -> list:
    left = np.ones(A.shape[1], dtype=bool)
    chosen = []
    while left.any():
        j = int(np.argmax(A[:, left].sum(axis=1)))
        chosen.append(j)
        left &= ~A[j]
    return chosen


def _solve(A: np.ndarray, time_limit: float = 600.0):
    """Minimum set cover with an optimality certificate.

    The LP relaxation bounds the optimum from below; when its ceiling
    equals the greedy count the greedy cover is optimal.  Otherwise an
    exact MILP is attempted.  Returns (chosen columns, proven optimal).
    """
    from scipy import sparse
    from scipy.optimize import linprog

    n = A.shape[0]
    M = sparse.csr_matrix(A.T.astype(np.float64))
    greedy = _greedy(A)
    lp = linprog(np.ones(n), A_ub=-M, b_ub=-np.ones(A.shape[1]), bounds=(0, 1), method="highs")
    if lp.status == 0 and np.ceil(lp.fun - 1e-7) >= len(greedy):
        return greedy, True
    res = milp(np.ones(n), constraints=LinearConstraint(M, lb=np.ones(A.shape[1]), ub=np.inf),
               integrality=np.ones(n), bounds=Bounds(0, 1), options={"time_limit": time_limit})
    if res.status == 0:
        return [j for j in range(n) if res.x[j] > 0.5], True
    return greedy, False


def fan_max_fine(p, rings, step: float = 0.01):
    """Longest chord through ``p`` over a fine fan; returns (angle_deg, length)."""
    E = scene_edges(rings)
    ang = np.arange(0.0, 180.0, step)
    r = np.deg2rad(ang)
    d = np.column_stack([np.cos(r), np.sin(r)])
    P = np.asarray([p], dtype=float)
    L = free_distance(P, d, E)[0] + free_distance(P, -d, E)[0]
    k = int(np.argmax(L))
    return float(ang[k]), float(L[k]), ang, L


def raster_skeleton(rings, n: int = 1000) -> np.ndarray:
    """Skeleton pixel centers of the open space rasterized to ``n`` x ``n``."""
    from skimage.morphology import medial_axis

    poly = scene_polygon(rings)
    x0, y0, x1, y1 = poly.bounds
    h = max(x1 - x0, y1 - y0) / n
    xs = x0 + (np.arange(n) + 0.5) * h
    ys = y0 + (np.arange(n) + 0.5) * h
    X, Y = np.meshgrid(xs, ys)
    mask = shapely.contains_xy(poly, X, Y)
    sk = medial_axis(mask)
    return np.column_stack([X[sk], Y[sk]])


def densify(segments: np.ndarray, h: float) -> np.ndarray:
    pts = []
    for x1, y1, x2, y2 in np.asarray(segments, dtype=float).reshape(-1, 4):
        k = max(2, int(np.ceil(np.hypot(x2 - x1, y2 - y1) / h)) + 1)
        t = np.linspace(0, 1, k)[:, None]
        pts.append(np.column_stack([x1 + t[:, 0] * (x2 - x1), y1 + t[:, 0] * (y2 - y1)]))
    return np.vstack(pts) if pts else np.zeros((0, 2))


def hausdorff(A: np.ndarray, B: np.ndarray) -> float:
    from scipy.spatial import cKDTree

    return float(max(cKDTree(B).query(A)[0].max(), cKDTree(A).query(B)[0].max()))
