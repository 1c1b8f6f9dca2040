"""Isovist ray fans, ridges, and the pre-reduction ray set."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .geometry import Chord, OriginOutside, Point2, fan_chords, point_in_open_space, segments_cross
from .medial import EmptyGraph, MedialAxisGraph
from .openspace import OpenSpace

EPS_LEN = 0.02


@dataclass(frozen=True)
class Ray:
    chord: Chord
    origin: Point2
    length: float
    id: int

    def as_array(self) -> np.ndarray:
        return self.chord.as_array()


@dataclass(eq=False)
class RaySet:
    rays: list
    scene: OpenSpace
    params: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.rays)

    def __iter__(self):
        return iter(self.rays)

    def __getitem__(self, i):
        return self.rays[i]

    @cached_property
    def array(self) -> np.ndarray:
        if not self.rays:
            return np.zeros((0, 4))
        return np.array([r.as_array() for r in self.rays])

    @cached_property
    def lengths(self) -> np.ndarray:
        return np.array([r.length for r in self.rays])


def _check_step(angular_step: float) -> int:
    k = 180.0 / angular_step
    if not (angular_step > 0 and abs(k - round(k)) < 1e-9):
        raise ValueError(f"angular step {angular_step!r} must divide 180")
    return int(round(k))


def fan_angles(angular_step: float = 1.0) -> np.ndarray:
    return np.arange(_check_step(angular_step)) * float(angular_step)


def _fan(p, s: OpenSpace, angles: np.ndarray) -> np.ndarray:
    return fan_chords(np.asarray(tuple(p), dtype=float), angles, s.edges, s.eps * 1e-3)


def ray_fan(p, s: OpenSpace, angular_step: float = 1.0) -> list:
    """Maximal chord through ``p`` for each undirected direction of the fan."""
    angles = fan_angles(angular_step)
    if not point_in_open_space(p, s):
        raise OriginOutside(f"origin {tuple(p)} is not in open space")
    return [Chord.from_array(row) for row in _fan(p, s, angles)]


def _near_band(chords: np.ndarray, eps_len: float) -> np.ndarray:
    L = np.hypot(chords[:, 2] - chords[:, 0], chords[:, 3] - chords[:, 1])
    L = np.where(np.isfinite(L), L, -np.inf)
    return np.flatnonzero(L >= (1.0 - eps_len) * L.max()), L


def _crossings(cands: np.ndarray, context: Optional[np.ndarray]) -> np.ndarray:
    if context is None or len(context) == 0:
        return np.zeros(len(cands), dtype=np.int64)
    lo = np.minimum(cands[:, :2], cands[:, 2:]).min(axis=0)
    hi = np.maximum(cands[:, :2], cands[:, 2:]).max(axis=0)
    c_lo = np.minimum(context[:, :2], context[:, 2:])
    c_hi = np.maximum(context[:, :2], context[:, 2:])
    near = np.all((c_lo <= hi) & (c_hi >= lo), axis=1)
    if not near.any():
        return np.zeros(len(cands), dtype=np.int64)
    return segments_cross(cands, context[near]).sum(axis=1)


def _cyclic_runs(idx: np.ndarray, n: int) -> list:
    """Split sorted fan indices into runs of neighbours, wrapping at ``n``."""
    cuts = np.flatnonzero(np.diff(idx) != 1) + 1
    runs = np.split(idx, cuts)
    if len(runs) > 1 and runs[0][0] == 0 and runs[-1][-1] == n - 1:
        runs = [np.concatenate([runs[-1], runs[0]])] + runs[1:-1]
    return runs


def _pick_ridge(chords: np.ndarray, context, eps_len: float) -> int:
    """Index of the ridge within a fan (fan order = ascending angle).

    Near-longest chords that cross the most context rays form angular runs;
    the ridge is the middle chord of the run holding the longest chord,
    the axis of that visibility lobe.  Equal runs go to the smallest angle.
    """
    band, L = _near_band(chords, eps_len)
    if len(band) == 1:
        return int(band[0])
    cross = _crossings(chords[band], context)
    best = band[cross == cross.max()]
    runs = _cyclic_runs(best, len(chords))
    peak = np.array([L[r].max() for r in runs])
    top = [r for r, m in zip(runs, peak) if m >= peak.max() * (1 - 1e-9)]
    return int(min(r[(len(r) - 1) // 2] for r in top))


def isovist_ridge(p, s: OpenSpace, context=None, angular_step: float = 1.0,
                  eps_len: float = EPS_LEN) -> Ray:
    """Dominant chord through ``p``.

    Among fan chords at least ``(1 - eps_len)`` times the longest, the one
    crossing the most ``context`` rays wins; remaining ties go to the
    smallest direction angle.
    """
    angles = fan_angles(angular_step)
    if not point_in_open_space(p, s):
        raise OriginOutside(f"origin {tuple(p)} is not in open space")
    chords = _fan(p, s, angles)
    ctx = _context_array(context)
    k = _pick_ridge(chords, ctx, eps_len)
    c = Chord.from_array(chords[k])
    return Ray(c, Point2(*map(float, tuple(p))), c.length, -1)


def _context_array(context) -> Optional[np.ndarray]:
    if context is None:
        return None
    if isinstance(context, RaySet):
        return context.array
    if isinstance(context, np.ndarray):
        return context.reshape(-1, 4)
    rows = [c.as_array() if hasattr(c, "as_array") else np.asarray(c, float) for c in context]
    return np.array(rows).reshape(-1, 4)


def thread_count() -> int:
    env = os.environ.get("AXIAL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, min(4, os.cpu_count() or 1))


def compute_fans(points: np.ndarray, s: OpenSpace, angular_step: float = 1.0,
                 threads: Optional[int] = None) -> list:
    """Fans for many origins; parallel over origins, order preserved."""
    angles = fan_angles(angular_step)
    s.edges  # warm cached property before threads touch it
    threads = threads or thread_count()
    if threads == 1 or len(points) < 64:
        return [_fan(p, s, angles) for p in points]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(lambda p: _fan(p, s, angles), points))


class _ChordStore:
    """Growing chord list with tolerance-based duplicate detection."""

    def __init__(self, tol: float, capacity: int = 256):
        self.tol = tol
        self.data = np.zeros((capacity, 4))
        self.n = 0

    @staticmethod
    def canonical(c: np.ndarray) -> np.ndarray:
        a, b = c[:2], c[2:]
        if (b[0], b[1]) < (a[0], a[1]):
            return np.concatenate([b, a])
        return c

    def find(self, c: np.ndarray) -> int:
        if self.n == 0:
            return -1
        cc = self.canonical(c)
        d = np.abs(self.data[:self.n] - cc).max(axis=1)
        hit = np.flatnonzero(d <= self.tol)
        if len(hit):
            return int(hit[0])
        # same chord stored with its endpoints swapped by rounding
        d2 = np.abs(self.data[:self.n] - np.concatenate([cc[2:], cc[:2]])).max(axis=1)
        hit = np.flatnonzero(d2 <= self.tol)
        return int(hit[0]) if len(hit) else -1

    def add(self, c: np.ndarray) -> int:
        if self.n == len(self.data):
            self.data = np.vstack([self.data, np.zeros_like(self.data)])
        self.data[self.n] = self.canonical(c)
        self.n += 1
        return self.n - 1

    @property
    def array(self) -> np.ndarray:
        return self.data[:self.n]


def generate_ray_set_global(s: OpenSpace, g: MedialAxisGraph, angular_step: float = 1.0,
                            eps_len: float = EPS_LEN, threads: Optional[int] = None) -> RaySet:
    """One ridge per medial vertex, in vertex-index order.

    Fans are computed in parallel; selection runs sequentially because each
    ridge's tie-break depends on the rays chosen before it.
    """
    if len(g) == 0:
        raise EmptyGraph("medial graph has no vertices")
    fans = compute_fans(g.positions, s, angular_step, threads)
    return _rays_from_fans(s, g.positions, fans, eps_len, angular_step)


def _rays_from_fans(s: OpenSpace, origins: np.ndarray, fans: Sequence[np.ndarray], eps_len: float,
                    angular_step: float, store: Optional[_ChordStore] = None) -> RaySet:
    store = store or _ChordStore(tol=s.eps * 10)
    rays = []
    for p, chords in zip(origins, fans):
        k = _pick_ridge(chords, store.array, eps_len)
        row = chords[k]
        if not np.all(np.isfinite(row)):
            continue
        if store.find(row) >= 0:
            continue
        store.add(row)
        c = Chord.from_array(row)
        rays.append(Ray(c, Point2(float(p[0]), float(p[1])), c.length, len(rays)))
    return RaySet(rays, s, {"angular_step": angular_step, "eps_len": eps_len})
