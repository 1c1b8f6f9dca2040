"""Length statistics for medial segments versus axial lines, and run reports."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy import stats as sps

HIERARCHICAL, FLAT, INCONCLUSIVE = "hierarchical", "flat", "inconclusive"
MIN_CONTRAST_N = 10


class EmptyInput(ValueError):
    pass


class InsufficientData(ValueError):
    pass


class ReportError(ValueError):
    """A report document is missing fields or has the wrong types."""


@dataclass(frozen=True)
class LengthSummary:
    n: int
    mean: float
    cv: float
    skewness: float
    top_decile_share: float

    def to_dict(self) -> dict:
        return asdict(self)


def length_summary(lengths) -> LengthSummary:
    """Moments of a length sample.

    ``cv`` uses the population standard deviation.  ``skewness`` is the
    adjusted Fisher-Pearson coefficient, reported as 0 below three values
    or for constant input.  ``top_decile_share`` is the fraction of total
    length held by the longest ``ceil(n / 10)`` items.
    """
    x = np.asarray(list(lengths), dtype=float)
    if x.size == 0:
        raise EmptyInput("no lengths")
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        raise ValueError("lengths must be finite and positive")
    n = int(x.size)
    mean = float(x.mean())
    sd = float(x.std())
    cv = sd / mean
    if n < 3 or sd <= 1e-12 * mean:
        skew = 0.0
    else:
        skew = float(sps.skew(x, bias=False))
    k = max(1, math.ceil(0.1 * n))
    top = float(np.sort(x)[::-1][:k].sum() / x.sum())
    return LengthSummary(n, mean, float(cv), skew, top)


def hierarchy_contrast(medial: LengthSummary, axial: LengthSummary) -> str:
    """Whether axial lengths are more hierarchical than medial ones.

    All three of skewness, cv and top-decile share must be strictly larger
    for the axial sample (``hierarchical``) or strictly smaller (``flat``).
    """
    if medial.n < MIN_CONTRAST_N or axial.n < MIN_CONTRAST_N:
        raise InsufficientData(f"need n >= {MIN_CONTRAST_N} (medial {medial.n}, axial {axial.n})")
    a = (axial.skewness, axial.cv, axial.top_decile_share)
    m = (medial.skewness, medial.cv, medial.top_decile_share)
    if all(x > y for x, y in zip(a, m)):
        return HIERARCHICAL
    if all(x < y for x, y in zip(a, m)):
        return FLAT
    return INCONCLUSIVE


@dataclass
class RunReport:
    scene: str
    params: dict
    timings: dict
    counts: dict
    summaries: dict
    verdict: str
    lengths: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "scene": self.scene,
            "params": self.params,
            "timings": self.timings,
            "counts": self.counts,
            "summaries": self.summaries,
            "verdict": self.verdict,
            "lengths": self.lengths,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @property
    def total_seconds(self) -> float:
        return float(sum(self.timings.values()))

    @classmethod
    def from_dict(cls, d) -> "RunReport":
        if not isinstance(d, dict):
            raise ReportError("report must be a JSON object")
        try:
            timings = {k: float(d["timings"][k]) for k in ("medial_s", "rays_s", "reduce_s")}
            counts = {k: int(d["counts"][k]) for k in ("medial_segments", "rays", "axial_lines")}
            scene = str(d["scene"])
            verdict = str(d["verdict"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ReportError(f"malformed report: {exc}") from exc
        return cls(scene, dict(d.get("params", {})), timings, counts, dict(d.get("summaries", {})),
                   verdict, dict(d.get("lengths", {})))


def run_report(scene: str, params: dict, timings: dict, medial_lengths, axial_lengths,
               ray_count: int, extra: Optional[dict] = None) -> RunReport:
    """Assemble the report of one pipeline run."""
    medial_lengths = [float(v) for v in medial_lengths]
    axial_lengths = [float(v) for v in axial_lengths]
    summaries = {}
    ms = length_summary(medial_lengths) if medial_lengths else None
    ax = length_summary(axial_lengths) if axial_lengths else None
    summaries["medial"] = ms.to_dict() if ms else None
    summaries["axial"] = ax.to_dict() if ax else None
    try:
        verdict = hierarchy_contrast(ms, ax) if ms and ax else "insufficient_data"
    except InsufficientData:
        verdict = "insufficient_data"
    params = dict(params)
    if extra:
        params.update(extra)
    return RunReport(
        scene=scene,
        params=params,
        timings={k: float(timings.get(k, 0.0)) for k in ("medial_s", "rays_s", "reduce_s")},
        counts={"medial_segments": len(medial_lengths), "rays": int(ray_count),
                "axial_lines": len(axial_lengths)},
        summaries=summaries,
        verdict=verdict,
        lengths={"medial": medial_lengths, "axial": axial_lengths},
    )
