"""End-to-end run: medial axis, ray set, reduction, with per-phase timings."""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass
from typing import Optional

from .bucket import THETA
from .isovist import EPS_LEN, RaySet, _check_step, generate_ray_set_global
from .medial import DEFAULT_SAMPLE_CAP, MedialAxisGraph, compute_medial_axis, medial_segment_lengths
from .openspace import OpenSpace
from .reduce import STRATEGIES, AxialMap, generate_local, reduce_global, reduce_local
from .stats import RunReport, run_report
from .syntax import INTEGRATION_CAP


class ConfigError(ValueError):
    pass


@dataclass
class Config:
    angular_step: float = 1.0
    theta_in_bucket: float = THETA
    epsilon_len: float = EPS_LEN
    resolution_override: Optional[float] = None
    strategy: str = "local"
    integration_radius: int = 3
    sample_cap: int = DEFAULT_SAMPLE_CAP
    seed_line: Optional[tuple] = None
    rng_seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> "Config":
        for name in ("theta_in_bucket", "epsilon_len"):
            v = getattr(self, name)
            if not (0 < v <= 1):
                raise ConfigError(f"{name} must be in (0, 1], got {v!r}")
        try:
            _check_step(self.angular_step)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {', '.join(STRATEGIES)}")
        if self.integration_radius < 1:
            raise ConfigError("integration radius must be >= 1")
        if self.resolution_override is not None and not self.resolution_override > 0:
            raise ConfigError("resolution must be > 0")
        if self.sample_cap < 1:
            raise ConfigError("sample cap must be >= 1")
        if self.seed_line is not None and len(self.seed_line) != 4:
            raise ConfigError("seed line needs four numbers")
        return self

    def echo(self) -> dict:
        d = asdict(self)
        d["seed_line"] = list(self.seed_line) if self.seed_line is not None else None
        d["integration_cap"] = INTEGRATION_CAP
        return d


@dataclass(eq=False)
class PipelineResult:
    scene: OpenSpace
    config: Config
    medial: MedialAxisGraph
    rays: Optional[RaySet]
    axial: AxialMap
    timings: dict

    def report(self) -> RunReport:
        n_rays = len(self.rays) if self.rays is not None else len(self.axial)
        r = run_report(self.scene.name, self.config.echo(), self.timings,
                       medial_segment_lengths(self.medial), self.axial.lengths, n_rays)
        r.counts["bucket_fallbacks"] = int(self.axial.fallbacks)
        return r


def run_pipeline(s: OpenSpace, cfg: Optional[Config] = None) -> PipelineResult:
    cfg = cfg or Config()
    t0 = time.perf_counter()
    step = cfg.resolution_override if cfg.resolution_override else s.clearance / 3.0
    g = compute_medial_axis(s, step, cap=cfg.sample_cap)
    t1 = time.perf_counter()
    rays = None
    if cfg.strategy == "recursive_local":
        t2 = t1
        m = generate_local(s, seed=cfg.seed_line, g=g, angular_step=cfg.angular_step,
                           theta=cfg.theta_in_bucket, eps_len=cfg.epsilon_len)
    else:
        rays = generate_ray_set_global(s, g, cfg.angular_step, cfg.epsilon_len)
        t2 = time.perf_counter()
        reducer = reduce_global if cfg.strategy == "global" else reduce_local
        m = reducer(rays, s, g, cfg.theta_in_bucket)
    t3 = time.perf_counter()
    timings = {"medial_s": t1 - t0, "rays_s": t2 - t1, "reduce_s": t3 - t2}
    return PipelineResult(s, cfg, g, rays, m, timings)
