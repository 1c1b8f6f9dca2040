import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from axialmap import export
from axialmap.openspace import ParseError, load_open_space
from axialmap.pipeline import Config, ConfigError, run_pipeline
from axialmap.render import length_figure, render_svg


@pytest.fixture(scope="module")
def grid_run(scene):
    return run_pipeline(scene("grid:2x2"), Config())


def test_map_round_trip(grid_run):
    m = grid_run.axial
    text = export.dumps(export.map_to_geojson(m))
    rows, props = export.load_axial_map(text)
    assert np.array_equal(rows, m.array)
    assert [p["id"] for p in props] == list(range(len(m)))
    assert json.loads(text)["properties"]["strategy"] == "local"


@pytest.mark.parametrize("writer", ["medial", "rays"])
def test_line_layers_reload(grid_run, writer):
    doc = export.medial_to_geojson(grid_run.medial) if writer == "medial" else export.rays_to_geojson(grid_run.rays)
    rows, _ = export.load_axial_map(export.dumps(doc))
    src = grid_run.medial.segments if writer == "medial" else grid_run.rays.array
    assert np.array_equal(rows, src)


def test_buckets_reload_as_open_space(grid_run):
    doc = export.buckets_to_geojson(grid_run.axial.buckets)
    for f in doc["features"]:
        s = load_open_space(json.dumps(f["geometry"]))
        assert len(s.outer) >= 3


def test_scene_geojson_reloads(grid_run):
    s = load_open_space(json.dumps(grid_run.scene.to_geojson()))
    assert len(s.holes) == 4


@pytest.mark.parametrize("bad", ["[", "{}", '{"type":"FeatureCollection","features":[{"geometry":{"type":"Point"}}]}',
                                 '{"type":"FeatureCollection","features":[{"geometry":{"type":"LineString","coordinates":[[0,0]]}}]}'])
def test_bad_maps(bad):
    with pytest.raises(ParseError):
        export.load_axial_map(bad)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(*[st.floats(-1e6, 1e6, allow_nan=False)] * 4), max_size=12))
def test_chords_round_trip_exactly(rows):
    arr = np.array(rows, dtype=float).reshape(-1, 4)
    back, _ = export.load_axial_map(export.dumps(export.chords_to_geojson(arr)))
    assert np.array_equal(back, arr)


class TestConfig:
    def test_defaults(self):
        c = Config()
        assert (c.angular_step, c.theta_in_bucket, c.epsilon_len, c.strategy, c.integration_radius) == \
            (1.0, 0.98, 0.02, "local", 3)

    @pytest.mark.parametrize("kw", [{"theta_in_bucket": 0}, {"epsilon_len": 1.5}, {"angular_step": 7},
                                    {"strategy": "bsp"}, {"integration_radius": 0}, {"resolution_override": -1}])
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            Config(**kw)

    def test_echo_is_json(self):
        assert json.loads(json.dumps(Config(seed_line=(0, 0, 1, 1)).echo()))["seed_line"] == [0, 0, 1, 1]


class TestRender:
    def test_svg_lines_and_transform(self, grid_run):
        svg = render_svg(grid_run.scene, grid_run.axial.array)
        assert svg.count("<line ") == len(grid_run.axial)
        assert "matrix(1 0 0 -1 0 24)" in svg

    def test_colors_blue_to_red(self):
        svg = render_svg(None, np.array([[0, 0, 1, 0], [0, 1, 1, 1]]), values=[0.0, 1.0])
        assert "#3b4cc0" in svg and "#b40426" in svg

    def test_length_figure(self, grid_run, tmp_path):
        p = length_figure(grid_run.report(), str(tmp_path / "f.png"))
        assert (tmp_path / "f.png").stat().st_size > 1000 and p.endswith("f.png")
