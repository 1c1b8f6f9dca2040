"""Command-line entry point: ``axialmap generate | metrics | stats``.

Exit codes: 0 ok, 1 usage, 2 input error, 3 pipeline error.
"""
from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from typing import Optional

from . import export
from .bucket import AssociationFailure
from .geometry import DegenerateScene, GeometryError
from .medial import EmptyGraph, StepTooSmall
from .openspace import InvalidSpec, ParseError, ValidationError, load_open_space, parse_scene_arg, synth_scene
from .pipeline import Config, ConfigError, run_pipeline
from .reduce import STRATEGIES, SeedOutside
from .render import length_figure, render_svg
from .stats import ReportError, RunReport
from .syntax import build_syntax_graph, local_integration

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_PIPELINE = 0, 1, 2, 3

# config-file key -> Config field
_CONFIG_KEYS = {
    "angular_step": ("angular_step", float),
    "theta": ("theta_in_bucket", float),
    "theta_in_bucket": ("theta_in_bucket", float),
    "epsilon_len": ("epsilon_len", float),
    "resolution": ("resolution_override", float),
    "resolution_override": ("resolution_override", float),
    "strategy": ("strategy", str),
    "radius": ("integration_radius", int),
    "integration_radius": ("integration_radius", int),
    "sample_cap": ("sample_cap", int),
    "rng_seed": ("rng_seed", int),
    "seed_line": ("seed_line", None),
}


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _parse_seed_line(text: str) -> tuple:
    try:
        vals = tuple(float(v) for v in str(text).split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad seed line {text!r}") from exc
    if len(vals) != 4:
        raise argparse.ArgumentTypeError("seed line needs x1,y1,x2,y2")
    return vals


def read_config_file(path: str) -> dict:
    """``key = value`` lines (TOML-like, no sections); ``#`` starts a comment."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), comment_prefixes=("#",))
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_string("[config]\n" + fh.read())
    except (OSError, configparser.Error) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    out = {}
    for key, raw in cp["config"].items():
        if key not in _CONFIG_KEYS:
            raise InputError(f"unknown config key {key!r}")
        field, conv = _CONFIG_KEYS[key]
        raw = raw.strip().strip('"').strip("'")
        try:
            out[field] = _parse_seed_line(raw) if field == "seed_line" else conv(raw)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise InputError(f"bad value for {key}: {raw!r}") from exc
    return out


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="axialmap", description="Axial maps of urban open space from isovist ridges and buckets.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    g = sub.add_parser("generate", help="generate an axial map")
    g.add_argument("input", nargs="?", help="open-space polygon (GeoJSON, or WKT by .wkt extension)")
    g.add_argument("--scene", help="synthetic scene shorthand, e.g. rect:10x4, t:10x2, grid:2x2, city:40:7, u")
    g.add_argument("--out", help="axial map GeoJSON")
    g.add_argument("--svg", help="SVG render of the map")
    g.add_argument("--report", help="run report JSON")
    g.add_argument("--emit-medial", help="medial axis GeoJSON")
    g.add_argument("--emit-rays", help="pre-reduction ray set GeoJSON")
    g.add_argument("--emit-buckets", help="bucket polygons of the final lines, GeoJSON")
    g.add_argument("--strategy", choices=STRATEGIES)
    g.add_argument("--angular-step", type=float)
    g.add_argument("--theta", type=float, help="in-bucket length fraction")
    g.add_argument("--epsilon-len", type=float, help="ridge length band")
    g.add_argument("--resolution", type=float, help="boundary sample step (default clearance / 3)")
    g.add_argument("--radius", type=int, help="integration radius for the report")
    g.add_argument("--sample-cap", type=int)
    g.add_argument("--seed-line", type=_parse_seed_line, help='"x1,y1,x2,y2" seed for recursive_local')
    g.add_argument("--rng-seed", type=int, help="seed for city scenes without one and for gap sampling")
    g.add_argument("--gaps", action="store_true", help="count sampled points no line can see")
    g.add_argument("--config", help="key=value config file; flags win")

    m = sub.add_parser("metrics", help="connectivity and local integration of an axial map")
    m.add_argument("map", help="axial map GeoJSON")
    m.add_argument("--radius", type=int, default=3)
    m.add_argument("--out", help="annotated GeoJSON (default: stdout)")
    m.add_argument("--svg", help="SVG colored by integration")

    s = sub.add_parser("stats", help="tabulate run reports")
    s.add_argument("reports", nargs="+")
    s.add_argument("--figures", help="directory for length-distribution PNGs")
    return p


def _write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _load_scene(args, rng_seed: Optional[int]):
    if bool(args.input) == bool(args.scene):
        raise UsageError("give exactly one of an input file or --scene")
    if args.scene:
        try:
            spec = parse_scene_arg(args.scene)
            if spec.kind == "irregular_city" and rng_seed is not None and args.scene.count(":") < 2:
                spec.params["rng_seed"] = rng_seed
            return synth_scene(spec)
        except (InvalidSpec, ValidationError) as exc:
            raise InputError(str(exc)) from exc
    try:
        with open(args.input, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {args.input}: {exc}") from exc
    fmt = "wkt" if args.input.lower().endswith(".wkt") else "geojson"
    name = os.path.splitext(os.path.basename(args.input))[0]
    try:
        return load_open_space(text, fmt, name=None if fmt == "geojson" else name)
    except (ParseError, ValidationError, DegenerateScene) as exc:
        raise InputError(str(exc)) from exc


def _config(args) -> Config:
    values = read_config_file(args.config) if args.config else {}
    flags = {
        "angular_step": args.angular_step, "theta_in_bucket": args.theta, "epsilon_len": args.epsilon_len,
        "resolution_override": args.resolution, "strategy": args.strategy,
        "integration_radius": args.radius, "sample_cap": args.sample_cap,
        "seed_line": args.seed_line, "rng_seed": args.rng_seed,
    }
    values.update({k: v for k, v in flags.items() if v is not None})
    try:
        return Config(**values)
    except ConfigError as exc:
        raise UsageError(str(exc)) from exc


def cmd_generate(args) -> int:
    cfg = _config(args)
    s = _load_scene(args, args.rng_seed)
    try:
        s.clearance  # touching features surface here as input errors
    except DegenerateScene as exc:
        raise InputError(str(exc)) from exc
    res = run_pipeline(s, cfg)
    m = res.axial
    g = build_syntax_graph(m)
    integ = local_integration(g, cfg.integration_radius)
    metrics = {"connectivity": g.metrics["connectivity"], "integration_r": integ}
    if args.out:
        _write(args.out, export.dumps(export.map_to_geojson(m, metrics)))
    if args.svg:
        _write(args.svg, render_svg(s, m.array))
    if args.emit_medial:
        _write(args.emit_medial, export.dumps(export.medial_to_geojson(res.medial)))
    if args.emit_rays:
        if res.rays is None:
            raise UsageError("--emit-rays needs the global or local strategy")
        _write(args.emit_rays, export.dumps(export.rays_to_geojson(res.rays)))
    if args.emit_buckets:
        _write(args.emit_buckets, export.dumps(export.buckets_to_geojson(m.buckets)))
    report = res.report()
    if args.gaps:
        from .reduce import detect_concave_gaps

        report.counts["gap_points"] = len(detect_concave_gaps(m, s, seed=cfg.rng_seed))
    if args.report:
        _write(args.report, report.to_json())
    c = report.counts
    print(f"{s.name}\tmedial={c['medial_segments']}\trays={c['rays']}\tlines={c['axial_lines']}"
          f"\tseconds={report.total_seconds:.2f}")
    return EXIT_OK


def cmd_metrics(args) -> int:
    try:
        with open(args.map, encoding="utf-8") as fh:
            rows, props = export.load_axial_map(fh.read())
    except OSError as exc:
        raise InputError(f"cannot read {args.map}: {exc}") from exc
    except ParseError as exc:
        raise InputError(str(exc)) from exc
    if args.radius < 1:
        raise UsageError("radius must be >= 1")
    g = build_syntax_graph(rows)
    integ = local_integration(g, args.radius)
    for i, p in enumerate(props):
        p.pop("id", None)
        p["connectivity"] = g.metrics["connectivity"][i]
        p["integration_r"] = integ[i]
    doc = export.chords_to_geojson(rows, props, kind="axial_map", radius=args.radius,
                                   integration_cap=g.meta["integration_cap"])
    text = export.dumps(doc)
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    if args.svg:
        vals = [integ[i] for i in range(len(rows))]
        _write(args.svg, render_svg(None, rows, values=vals if vals else None))
    return EXIT_OK


def cmd_stats(args) -> int:
    if not args.reports:
        raise UsageError("stats needs at least one report")
    reports = []
    for path in args.reports:
        try:
            with open(path, encoding="utf-8") as fh:
                reports.append(RunReport.from_dict(json.load(fh)))
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc}") from exc
        except (json.JSONDecodeError, ReportError) as exc:
            raise InputError(f"{path}: {exc}") from exc
    print("scene\ttime_s\tmedial_segments\taxial_lines\tverdict")
    for r in reports:
        c = r.counts
        print(f"{r.scene}\t{r.total_seconds:.2f}\t{c['medial_segments']}\t{c['axial_lines']}\t{r.verdict}")
    if args.figures:
        os.makedirs(args.figures, exist_ok=True)
        for k, r in enumerate(reports):
            safe = "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in r.scene)
            length_figure(r, os.path.join(args.figures, f"{k:02d}_{safe}_lengths.png"))
    return EXIT_OK


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        handler = {"generate": cmd_generate, "metrics": cmd_metrics, "stats": cmd_stats}[args.command]
        return handler(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (AssociationFailure, StepTooSmall, EmptyGraph, SeedOutside, GeometryError) as exc:
        print(f"pipeline error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
