"""Open-space scenes: an outer ring with holes (buildings or street blocks).

Scenes come from GeoJSON / WKT documents or from the synthetic generators
in :func:`synth_scene`.  Rings are stored without the closing vertex, outer
counterclockwise and holes clockwise.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
import shapely
import shapely.wkt
from scipy import ndimage

from .geometry import DegenerateScene, build_index, min_clearance, scene_eps


class ParseError(ValueError):
    pass


class ValidationError(ValueError):
    """A scene invariant failed; ``code`` names it, ``feature`` locates it."""

    def __init__(self, code: str, feature: Optional[int] = None, detail: str = ""):
        self.code = code
        self.feature = feature
        where = f" (feature {feature})" if feature is not None else ""
        super().__init__(f"{code}{where}{': ' + detail if detail else ''}")


class InvalidSpec(ValueError):
    pass


def _as_ring(coords) -> np.ndarray:
    ring = np.asarray(coords, dtype=float)
    if ring.ndim != 2 or ring.shape[1] < 2:
        raise ParseError("ring must be a list of coordinate pairs")
    ring = ring[:, :2]
    if len(ring) > 1 and np.array_equal(ring[0], ring[-1]):
        ring = ring[:-1]
    # drop repeated consecutive vertices
    keep = np.ones(len(ring), dtype=bool)
    keep[1:] = np.any(ring[1:] != ring[:-1], axis=1)
    return ring[keep]


def _signed_area(ring: np.ndarray) -> float:
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _orient(ring: np.ndarray, ccw: bool) -> np.ndarray:
    if (_signed_area(ring) > 0) != ccw:
        ring = ring[::-1].copy()
    return ring


@dataclass(frozen=True, eq=False)
class OpenSpace:
    outer: np.ndarray
    holes: tuple = ()
    name: str = "scene"

    def __post_init__(self):
        object.__setattr__(self, "outer", _orient(_as_ring(self.outer), ccw=True))
        object.__setattr__(self, "holes", tuple(_orient(_as_ring(h), ccw=False) for h in self.holes))

    @property
    def rings(self) -> list:
        """Rings indexed by feature id: 0 is the outer ring, holes follow."""
        return [self.outer, *self.holes]

    @cached_property
    def polygon(self) -> shapely.Polygon:
        poly = shapely.Polygon(self.outer, list(self.holes))
        shapely.prepare(poly)
        return poly

    @cached_property
    def edges(self) -> np.ndarray:
        return np.vstack([np.hstack([r, np.roll(r, -1, axis=0)]) for r in self.rings])

    @cached_property
    def edge_feature(self) -> np.ndarray:
        return np.concatenate([np.full(len(r), k) for k, r in enumerate(self.rings)])

    @cached_property
    def edge_offset(self) -> np.ndarray:
        """Index of each ring's first edge inside :attr:`edges`."""
        return np.cumsum([0] + [len(r) for r in self.rings])

    @cached_property
    def ring_cumlen(self) -> list:
        """Per ring, cumulative arc length at each vertex (length n + 1)."""
        out = []
        for r in self.rings:
            seg = np.hypot(*(np.roll(r, -1, axis=0) - r).T)
            out.append(np.concatenate([[0.0], np.cumsum(seg)]))
        return out

    @cached_property
    def diameter(self) -> float:
        lo, hi = self.outer.min(axis=0), self.outer.max(axis=0)
        return float(np.hypot(*(hi - lo)))

    @property
    def eps(self) -> float:
        return scene_eps(self.diameter)

    @cached_property
    def index(self):
        return build_index(self, "grid")

    @cached_property
    def clearance(self) -> float:
        return min_clearance(self)

    def ring_position(self, feature: int, edge: int, t: float) -> float:
        """Arc-length parameter of the point ``t`` along ring edge ``edge``."""
        cum = self.ring_cumlen[feature]
        return float(cum[edge] + t * (cum[edge + 1] - cum[edge]))

    def to_geojson(self) -> dict:
        rings = [np.vstack([r, r[:1]]).tolist() for r in self.rings]
        return {
            "type": "Feature",
            "properties": {"name": self.name},
            "geometry": {"type": "Polygon", "coordinates": rings},
        }


# --------------------------------------------------------------------------
# validation and loading
# --------------------------------------------------------------------------

def validate(s: OpenSpace, check_connected: bool = True) -> OpenSpace:
    for k, ring in enumerate(s.rings):
        if len(ring) < 3:
            raise ValidationError("too_few_vertices", k)
        if not np.isfinite(ring).all():
            raise ValidationError("non_finite", k)
        lr = shapely.LinearRing(ring)
        if not lr.is_simple or abs(_signed_area(ring)) <= s.eps ** 2:
            raise ValidationError("not_simple", k)
    outer = shapely.Polygon(s.outer)
    hole_polys = [shapely.Polygon(h) for h in s.holes]
    for k, hp in enumerate(hole_polys, start=1):
        if not outer.contains(hp) or outer.boundary.distance(hp) <= s.eps:
            raise ValidationError("hole_outside", k)
    if hole_polys:
        tree = shapely.STRtree(hole_polys)
        for k, hp in enumerate(hole_polys):
            for j in tree.query(hp, predicate="dwithin", distance=s.eps):
                if j != k:
                    raise ValidationError("holes_overlap", k + 1, f"touches feature {j + 1}")
    if check_connected and not connectivity_check(s):
        raise ValidationError("disconnected")
    return s


def load_open_space(document, format: str = "geojson", name: Optional[str] = None) -> OpenSpace:
    """Parse and validate a GeoJSON or WKT polygon-with-holes."""
    if isinstance(document, (bytes, bytearray)):
        document = document.decode("utf-8")
    if format == "geojson":
        rings, props = _geojson_rings(document)
        name = name or props.get("name") or "scene"
    elif format == "wkt":
        try:
            geom = shapely.wkt.loads(document)
        except Exception as exc:  # shapely raises a GEOS-specific error type
            raise ParseError(f"bad WKT: {exc}") from exc
        if geom.geom_type == "MultiPolygon" and len(geom.geoms) == 1:
            geom = geom.geoms[0]
        if geom.geom_type != "Polygon":
            raise ParseError(f"expected POLYGON, got {geom.geom_type}")
        rings = [np.asarray(geom.exterior.coords)] + [np.asarray(r.coords) for r in geom.interiors]
        name = name or "scene"
    else:
        raise ParseError(f"unknown format {format!r}")
    if not rings:
        raise ParseError("no polygon rings")
    return validate(OpenSpace(rings[0], tuple(rings[1:]), name))


def _geojson_rings(text: str):
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad JSON: {exc}") from exc
    props = {}
    if isinstance(obj, dict) and obj.get("type") == "FeatureCollection":
        feats = obj.get("features") or []
        polys = [f for f in feats if (f.get("geometry") or {}).get("type") in ("Polygon", "MultiPolygon")]
        if len(polys) != 1:
            raise ParseError(f"expected exactly one polygon feature, found {len(polys)}")
        obj = polys[0]
    if isinstance(obj, dict) and obj.get("type") == "Feature":
        props = obj.get("properties") or {}
        obj = obj.get("geometry")
    if not isinstance(obj, dict):
        raise ParseError("not a GeoJSON geometry")
    kind = obj.get("type")
    coords = obj.get("coordinates")
    if kind == "MultiPolygon":
        if not coords or len(coords) != 1:
            raise ValidationError("disconnected", None, "MultiPolygon with several parts")
        coords = coords[0]
    elif kind != "Polygon":
        raise ParseError(f"expected Polygon, got {kind}")
    try:
        return [_as_ring(r) for r in coords], props
    except (TypeError, ValueError) as exc:
        raise ParseError(f"bad coordinates: {exc}") from exc


def connectivity_check(s: OpenSpace, sample_n: int = 4_000_000) -> bool:
    """Rasterised flood fill at a third of the minimum clearance.

    ``sample_n`` caps the raster size; the cell grows when the cap is hit.
    True iff at least 99.9% of open cells fall in one 4-connected component.
    """
    try:
        res = min_clearance(s) / 3.0
    except DegenerateScene:
        res = s.diameter / 300.0
    lo, hi = s.outer.min(axis=0), s.outer.max(axis=0)
    span = hi - lo
    while (span[0] / res + 1) * (span[1] / res + 1) > sample_n:
        res *= 1.5
    xs = np.arange(lo[0] + res / 2, hi[0], res)
    ys = np.arange(lo[1] + res / 2, hi[1], res)
    X, Y = np.meshgrid(xs, ys)
    poly = shapely.Polygon(s.outer, list(s.holes))
    open_ = shapely.contains_xy(poly, X, Y)
    total = int(open_.sum())
    if total == 0:
        return False
    labels, n = ndimage.label(open_)
    if n <= 1:
        return True
    sizes = np.bincount(labels.ravel())[1:]
    return sizes.max() >= 0.999 * total


# --------------------------------------------------------------------------
# synthetic scenes
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SceneSpec:
    """Synthetic scene recipe.

    kinds and their parameters:

    * ``rectangle``: width, height
    * ``t_shape``: arm, width
    * ``grid_blocks``: rows, cols, block, street
    * ``irregular_city``: n_blocks, rng_seed
    * ``u_hole``: a rectangular yard holding one hook-shaped (concave) hole
    * ``notched_rectangle``: width, height, depth, notch_width
    """

    kind: str
    params: dict = field(default_factory=dict)

    def label(self) -> str:
        args = ",".join(f"{k}={v}" for k, v in self.params.items())
        return f"{self.kind}({args})"


def _box(x0, y0, x1, y1) -> np.ndarray:
    return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], dtype=float)


def _positive(**kw):
    for k, v in kw.items():
        if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
            raise InvalidSpec(f"{k} must be > 0, got {v!r}")


def synth_scene(spec: SceneSpec) -> OpenSpace:
    p = dict(spec.params)
    kind = spec.kind
    if kind == "rectangle":
        w, h = p.get("width", 10.0), p.get("height", 4.0)
        _positive(width=w, height=h)
        s = OpenSpace(_box(0, 0, w, h), (), f"rect:{_fmt(w)}x{_fmt(h)}")
    elif kind == "t_shape":
        arm, width = p.get("arm", 10.0), p.get("width", 2.0)
        _positive(arm=arm, width=width)
        L = 2 * arm + width
        outer = np.array([
            [arm, 0], [arm + width, 0], [arm + width, arm], [L, arm],
            [L, arm + width], [0, arm + width], [0, arm], [arm, arm],
        ], dtype=float)
        s = OpenSpace(outer, (), f"t:{_fmt(arm)}x{_fmt(width)}")
    elif kind == "grid_blocks":
        rows, cols = p.get("rows", 2), p.get("cols", 2)
        block, street = p.get("block", 8.0), p.get("street", 4.0)
        if not (isinstance(rows, int) and isinstance(cols, int) and rows > 0 and cols > 0):
            raise InvalidSpec("rows and cols must be positive integers")
        _positive(block=block, street=street)
        pitch = block + street
        margin = street / 2.0
        holes = []
        for r in range(rows):
            for c in range(cols):
                x0 = margin + c * pitch
                y0 = margin + r * pitch
                holes.append(_box(x0, y0, x0 + block, y0 + block))
        s = OpenSpace(_box(0, 0, cols * pitch, rows * pitch), tuple(holes), f"grid:{rows}x{cols}")
    elif kind == "irregular_city":
        n, seed = p.get("n_blocks", 40), p.get("rng_seed", 7)
        if not (isinstance(n, int) and n > 0):
            raise InvalidSpec("n_blocks must be a positive integer")
        s = _irregular_city(n, int(seed))
    elif kind == "u_hole":
        s = _u_hole_scene(**p)
    elif kind == "notched_rectangle":
        w, h = p.get("width", 10.0), p.get("height", 4.0)
        depth, nw = p.get("depth", 0.5), p.get("notch_width", 1.0)
        _positive(width=w, height=h, depth=depth, notch_width=nw)
        if nw >= w:
            raise InvalidSpec("notch wider than rectangle")
        x0 = (w - nw) / 2.0
        outer = np.array([[0, 0], [w, 0], [w, h], [x0 + nw, h], [x0 + nw, h + depth],
                          [x0, h + depth], [x0, h], [0, h]], dtype=float)
        s = OpenSpace(outer, (), f"notch:{_fmt(w)}x{_fmt(h)}d{_fmt(depth)}")
    else:
        raise InvalidSpec(f"unknown scene kind {kind!r}")
    return validate(s)


def _fmt(v) -> str:
    return f"{v:g}"


def _u_hole_scene(width: float = 40.0, height: float = 30.0) -> OpenSpace:
    """A yard with one hook-shaped hole whose pocket opens through a slit.

    The pocket behind the lips cannot be seen from the yard around it, which
    makes it the canonical case for :func:`axialmap.reduce.detect_concave_gaps`.
    """
    _positive(width=width, height=height)
    cx, cy = width / 2.0, height / 2.0
    # hole outline: outer 16 x 14 box with a 10 x 8 pocket and a 2-wide slit on top
    hole = np.array([
        [-8, -7], [8, -7], [8, 7], [1, 7], [1, 5], [5, 5], [5, -3], [-5, -3],
        [-5, 5], [-1, 5], [-1, 7], [-8, 7],
    ], dtype=float) + [cx, cy]
    return OpenSpace(_box(0, 0, width, height), (hole,), "u_hole")


def _irregular_city(n_blocks: int, seed: int) -> OpenSpace:
    """Irregular street network with a few straight avenues.

    Blocks are laid out in rows separated by long streets.  Within a row,
    block widths are drawn afresh, so cross streets are staggered from one
    row to the next and their sightlines stay short.  Two avenues run
    straight through every row and one wider street crosses the city.
    Non-avenue block sides get small jogs and skews, and every block stays
    a convex quadrilateral.  The mix gives a long-tailed spread of line
    lengths.
    """
    rng = np.random.default_rng(seed)
    rows = max(1, int(round(math.sqrt(n_blocks / 1.6))))
    per_row = [n_blocks // rows + (1 if r < n_blocks % rows else 0) for r in range(rows)]
    street, avenue = 4.0, 7.0
    widest = max(per_row)
    n_av = 2 if widest >= 4 else 0
    width = widest * 13.0 + (widest - n_av + 1) * street + n_av * avenue
    # avenue strips [a, a + avenue]
    av_left = []
    if n_av:
        for frac in (rng.uniform(0.30, 0.38), rng.uniform(0.62, 0.70)):
            av_left.append(frac * width - avenue / 2)
    block_h = rng.uniform(10.0, 16.0, size=rows)
    avenue_row = int(rng.integers(1, rows)) if rows > 1 else -1
    gy = [street] + [avenue if k == avenue_row else street for k in range(1, rows)] + [street]
    ys = np.cumsum([0.0] + [gy[k] + block_h[k] for k in range(rows)])
    height = ys[-1] + gy[-1]

    # open strips between avenues: (x start, x end, starts at avenue, ends at avenue)
    edges = [0.0] + [x for a in av_left for x in (a, a + avenue)] + [width]
    strips = [(edges[2 * k], edges[2 * k + 1], k > 0, k < len(av_left)) for k in range(len(av_left) + 1)]
    holes = []
    for r in range(rows):
        # spread this row's blocks over the strips, rotating the remainder
        n = per_row[r]
        share = [n // len(strips)] * len(strips)
        for k in range(n % len(strips)):
            share[(k + r) % len(strips)] += 1
        y0 = ys[r] + gy[r]
        y1 = y0 + block_h[r]
        jb_ok = r != avenue_row
        jt_ok = (r + 1) != avenue_row
        for (xa, xb, at_av_a, at_av_b), k in zip(strips, share):
            if k == 0:
                continue
            gaps = (k - 1) + (0 if at_av_a else 1) + (0 if at_av_b else 1)
            w = rng.uniform(0.7, 1.3, size=k)
            w = w / w.sum() * (xb - xa - gaps * street)
            x = xa + (0.0 if at_av_a else street)
            for i in range(k):
                x0, x1 = x, x + w[i]
                x = x1 + street
                left_av = at_av_a and i == 0
                right_av = at_av_b and i == k - 1
                jl = 0.0 if left_av else rng.uniform(0.0, 0.8)
                jr = 0.0 if right_av else rng.uniform(0.0, 0.8)
                jb = rng.uniform(0.0, 0.8) if jb_ok else 0.0
                jt = rng.uniform(0.0, 0.8) if jt_ok else 0.0
                sk = rng.uniform(0.0, 0.6, size=4)
                quad = np.array([
                    [x0 + jl, y0 + jb + (sk[0] if jb_ok else 0.0)],
                    [x1 - jr - (0.0 if right_av else sk[1]), y0 + jb],
                    [x1 - jr, y1 - jt - (sk[2] if jt_ok else 0.0)],
                    [x0 + jl + (0.0 if left_av else sk[3]), y1 - jt],
                ])
                holes.append(quad)
    return OpenSpace(_box(0, 0, width, height), tuple(holes), f"city:{n_blocks}s{seed}")


def parse_scene_arg(text: str) -> SceneSpec:
    """Parse CLI scene shorthands.

    ``rect:10x4``, ``t:10x2``, ``grid:2x2`` (optionally ``grid:2x2:8:4``),
    ``city:40`` (optionally ``city:40:7``), ``u``, ``notch:10x4`` (optionally
    ``notch:10x4:0.5:1`` for depth and notch width).
    """
    kind, _, rest = text.partition(":")
    parts = rest.split(":") if rest else []

    def pair(s):
        a, _, b = s.partition("x")
        return a, b

    try:
        if kind in ("rect", "rectangle"):
            w, h = pair(parts[0]) if parts else ("10", "4")
            return SceneSpec("rectangle", {"width": float(w), "height": float(h)})
        if kind in ("t", "t_shape"):
            a, w = pair(parts[0]) if parts else ("10", "2")
            return SceneSpec("t_shape", {"arm": float(a), "width": float(w)})
        if kind in ("grid", "grid_blocks"):
            r, c = pair(parts[0]) if parts else ("2", "2")
            block = float(parts[1]) if len(parts) > 1 else 8.0
            street = float(parts[2]) if len(parts) > 2 else 4.0
            return SceneSpec("grid_blocks", {"rows": int(r), "cols": int(c), "block": block, "street": street})
        if kind in ("city", "irregular_city"):
            n = int(parts[0]) if parts else 40
            seed = int(parts[1]) if len(parts) > 1 else 7
            return SceneSpec("irregular_city", {"n_blocks": n, "rng_seed": seed})
        if kind in ("u", "u_hole"):
            return SceneSpec("u_hole", {})
        if kind in ("notch", "notched_rectangle"):
            w, h = pair(parts[0]) if parts else ("10", "4")
            depth = float(parts[1]) if len(parts) > 1 else 0.5
            nw = float(parts[2]) if len(parts) > 2 else 1.0
            return SceneSpec("notched_rectangle", {"width": float(w), "height": float(h), "depth": depth,
                                                   "notch_width": nw})
    except (IndexError, ValueError) as exc:
        raise InvalidSpec(f"bad scene shorthand {text!r}") from exc
    raise InvalidSpec(f"unknown scene shorthand {text!r}")


def corpus(include_cities: bool = True) -> list:
    """Synthetic scenes used by the test and acceptance suites."""
    specs = [
        SceneSpec("rectangle", {"width": 10.0, "height": 4.0}),
        SceneSpec("t_shape", {"arm": 10.0, "width": 2.0}),
        SceneSpec("grid_blocks", {"rows": 1, "cols": 1, "block": 8.0, "street": 4.0}),
        SceneSpec("grid_blocks", {"rows": 1, "cols": 2, "block": 8.0, "street": 4.0}),
        SceneSpec("grid_blocks", {"rows": 2, "cols": 2, "block": 8.0, "street": 4.0}),
        SceneSpec("grid_blocks", {"rows": 2, "cols": 3, "block": 8.0, "street": 4.0}),
    ]
    if include_cities:
        specs += [SceneSpec("irregular_city", {"n_blocks": 40, "rng_seed": s}) for s in (7, 11, 23)]
    return specs
