"""Axial maps of urban open space.

Axial lines are derived from isovist ridges sampled along the medial axis
and reduced with buckets, regions of open space that a selected line
already represents.
"""
from .geometry import Chord, DegenerateScene, GeometryError, OriginOutside, Point2
from .openspace import (
    InvalidSpec,
    OpenSpace,
    ParseError,
    SceneSpec,
    ValidationError,
    corpus,
    load_open_space,
    parse_scene_arg,
    synth_scene,
)
from .medial import MedialAxisGraph, compute_medial_axis, medial_segment_lengths
from .isovist import Ray, RaySet, generate_ray_set_global, isovist_ridge, ray_fan
from .bucket import AssociationFailure, Bucket, bucket_formation, ray_in_bucket
from .reduce import AxialMap, detect_concave_gaps, generate_local, reduce_global, reduce_local
from .syntax import SyntaxGraph, build_syntax_graph, local_integration, rank_lines
from .stats import LengthSummary, RunReport, hierarchy_contrast, length_summary
from .pipeline import Config, PipelineResult, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "AssociationFailure", "AxialMap", "Bucket", "Chord", "Config", "DegenerateScene", "GeometryError",
    "InvalidSpec", "LengthSummary", "MedialAxisGraph", "OpenSpace", "OriginOutside", "ParseError",
    "PipelineResult", "Point2", "Ray", "RaySet", "RunReport", "SceneSpec", "SyntaxGraph", "ValidationError",
    "bucket_formation", "build_syntax_graph", "compute_medial_axis", "corpus", "detect_concave_gaps",
    "generate_local", "generate_ray_set_global", "hierarchy_contrast", "isovist_ridge", "length_summary",
    "load_open_space", "local_integration", "medial_segment_lengths", "parse_scene_arg", "rank_lines",
    "ray_fan", "ray_in_bucket", "reduce_global", "reduce_local", "run_pipeline", "synth_scene",
]
