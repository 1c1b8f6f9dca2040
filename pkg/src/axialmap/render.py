"""SVG maps and matplotlib length-distribution figures."""
from __future__ import annotations

from typing import Optional

import numpy as np


def _fmt(v: float) -> str:
    return f"{v:.6f}".rstrip("0").rstrip(".")


def _colors(values: np.ndarray) -> list:
    from matplotlib import colormaps
    from matplotlib.colors import to_hex

    v = np.asarray(values, dtype=float)
    lo, hi = float(v.min()), float(v.max())
    t = np.zeros_like(v) if hi - lo <= 0 else (v - lo) / (hi - lo)
    cmap = colormaps["coolwarm"]  # blue = min, red = max
    return [to_hex(cmap(float(x))) for x in t]


def render_svg(scene, chords, values=None, extra: Optional[dict] = None, stroke: float = 0.0) -> str:
    """SVG of the scene rings (when given) and a set of chords.

    With ``values`` the lines are colored by min-max normalized value.
    ``extra`` maps a CSS color to further (n, 4) chord arrays drawn beneath.
    """
    rows = np.asarray(chords, dtype=float).reshape(-1, 4)
    if scene is not None:
        lo, hi = scene.outer.min(axis=0), scene.outer.max(axis=0)
    elif len(rows):
        pts = rows.reshape(-1, 2)
        lo, hi = pts.min(axis=0), pts.max(axis=0)
    else:
        lo, hi = np.zeros(2), np.ones(2)
    w, h = np.maximum(hi - lo, 1e-9)
    sw = stroke or max(w, h) / 400.0
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{_fmt(lo[0])} 0 {_fmt(w)} {_fmt(h)}" '
        f'width="{_fmt(w * 10)}" height="{_fmt(h * 10)}">',
        f"<!-- y axis flipped for screen output: transform matrix(1 0 0 -1 0 {_fmt(hi[1])}) "
        f"maps scene (x, y) to (x, {_fmt(hi[1])} - y) -->",
        f'<g transform="matrix(1 0 0 -1 0 {_fmt(hi[1])})">',
    ]
    d = []
    for ring in scene.rings if scene is not None else ():
        pts = " L ".join(f"{_fmt(x)} {_fmt(y)}" for x, y in ring)
        d.append(f"M {pts} Z")
    if d:
        out.append(f'<path d="{" ".join(d)}" fill="#f4f1ea" fill-rule="evenodd" stroke="#555" '
                   f'stroke-width="{_fmt(sw)}"/>')
    for color, arr in (extra or {}).items():
        for r in np.asarray(arr, dtype=float).reshape(-1, 4):
            out.append(f'<line x1="{_fmt(r[0])}" y1="{_fmt(r[1])}" x2="{_fmt(r[2])}" y2="{_fmt(r[3])}" '
                       f'stroke="{color}" stroke-width="{_fmt(sw * 0.6)}"/>')
    colors = _colors(values) if values is not None and len(rows) else ["#c0392b"] * len(rows)
    for r, c in zip(rows, colors):
        out.append(f'<line x1="{_fmt(r[0])}" y1="{_fmt(r[1])}" x2="{_fmt(r[2])}" y2="{_fmt(r[3])}" '
                   f'stroke="{c}" stroke-width="{_fmt(sw * 1.5)}" stroke-linecap="round"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def length_figure(report, path: str) -> str:
    """Histogram and rank-size plot of medial versus axial lengths."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    med = np.asarray(report.lengths.get("medial") or [], dtype=float)
    ax_ = np.asarray(report.lengths.get("axial") or [], dtype=float)
    fig, (h1, h2) = plt.subplots(1, 2, figsize=(9, 3.6))
    for data, label, color in ((med, "medial segments", "#4c72b0"), (ax_, "axial lines", "#c44e52")):
        if len(data):
            h1.hist(data, bins=min(30, max(5, len(data) // 3)), alpha=0.6, color=color, label=label, density=True)
            ranks = np.arange(1, len(data) + 1)
            h2.loglog(ranks, np.sort(data)[::-1], "o-", ms=3, color=color, label=label)
    h1.set_xlabel("length")
    h1.set_ylabel("density")
    h1.legend(fontsize=8)
    h2.set_xlabel("rank")
    h2.set_ylabel("length")
    h2.legend(fontsize=8)
    fig.suptitle(f"{report.scene}: {report.verdict}", fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path
