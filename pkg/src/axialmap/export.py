"""GeoJSON writers and the axial-map reader.

Output is deterministic: keys are sorted and coordinates use Python's
shortest round-trip float repr, so identical runs give identical bytes.
"""
from __future__ import annotations

import json
from typing import Optional

import numpy as np

from .openspace import ParseError


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def _line(row) -> dict:
    r = [float(v) for v in row]
    return {"type": "LineString", "coordinates": [[r[0], r[1]], [r[2], r[3]]]}


def _collection(features: list, **props) -> dict:
    out = {"type": "FeatureCollection", "features": features}
    if props:
        out["properties"] = props
    return out


def map_to_geojson(m, metrics: Optional[dict] = None, meta: Optional[dict] = None) -> dict:
    """Axial lines as LineString features, optionally carrying per-line metrics."""
    feats = []
    for i, ray in enumerate(m.lines):
        props = {"id": i, "length": float(ray.length), "ray_id": int(ray.id)}
        if metrics:
            for name, vals in metrics.items():
                if i in vals:
                    props[name] = vals[i]
        feats.append({"type": "Feature", "properties": props, "geometry": _line(ray.as_array())})
    return _collection(feats, kind="axial_map", strategy=m.strategy, scene=m.scene.name, **(meta or {}))


def chords_to_geojson(rows, props: Optional[list] = None, **meta) -> dict:
    feats = []
    for i, row in enumerate(np.asarray(rows, dtype=float).reshape(-1, 4)):
        p = {"id": i}
        if props:
            p.update(props[i])
        feats.append({"type": "Feature", "properties": p, "geometry": _line(row)})
    return _collection(feats, **meta)


def medial_to_geojson(g) -> dict:
    props = [{"clearance_a": float(g.clearance[a]), "clearance_b": float(g.clearance[b])} for a, b in g.edges]
    return chords_to_geojson(g.segments, props, kind="medial_axis", step=float(g.step))


def rays_to_geojson(rs) -> dict:
    props = [{"length": float(r.length), "origin": [float(r.origin.x), float(r.origin.y)]} for r in rs]
    return chords_to_geojson(rs.array, props, kind="ray_set")


def buckets_to_geojson(buckets) -> dict:
    feats = []
    for i, b in enumerate(buckets):
        ring = [[float(x), float(y)] for x, y in b.ring]
        ring.append(ring[0])
        feats.append({
            "type": "Feature",
            "properties": {"id": i, "ray_id": int(b.ray_id), "fallback": bool(b.fallback)},
            "geometry": {"type": "Polygon", "coordinates": [ring]},
        })
    return _collection(feats, kind="buckets")


def load_axial_map(text: str):
    """Read an axial-map GeoJSON into ``(chords (n, 4), properties list)``."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad JSON: {exc}") from exc
    if not isinstance(obj, dict) or obj.get("type") != "FeatureCollection":
        raise ParseError("axial map must be a FeatureCollection")
    rows, props = [], []
    for f in obj.get("features") or []:
        geom = (f or {}).get("geometry") or {}
        if geom.get("type") != "LineString":
            raise ParseError(f"expected LineString features, got {geom.get('type')}")
        try:
            coords = np.asarray(geom["coordinates"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad coordinates: {exc}") from exc
        if coords.ndim != 2 or coords.shape[1] != 2 or len(coords) < 2 or not np.all(np.isfinite(coords)):
            raise ParseError("each line needs two finite 2D points")
        rows.append(np.concatenate([coords[0], coords[-1]]))
        props.append(dict(f.get("properties") or {}))
    return np.array(rows, dtype=float).reshape(-1, 4), props
