import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from axialmap.geometry import Point2, point_segment_distance
from axialmap.medial import (
    EmptyGraph,
    MedialAxisGraph,
    StepTooSmall,
    compute_medial_axis,
    medial_chains,
    medial_segment_lengths,
    nearest_medial_vertex,
    sample_boundary,
)
from axialmap.openspace import OpenSpace
from conftest import box, square
from oracles import densify, hausdorff, raster_skeleton

CORRIDOR = OpenSpace(box(0, 0, 10, 2), (), "corridor")


class TestSampleBoundary:
    def test_square_perimeter(self):
        smp = sample_boundary(square(), 1.0)
        assert len(smp) == 40
        assert set(smp.feature.tolist()) == {0}

    def test_two_features_keep_vertices(self):
        s = square(holes=[box(4, 4, 6, 6)])
        smp = sample_boundary(s, 4 / 3)
        assert set(smp.feature.tolist()) == {0, 1}
        for ring in s.rings:
            for v in ring:
                assert np.min(np.hypot(*(smp.points - v).T)) == 0.0

    def test_zero_step(self):
        with pytest.raises(StepTooSmall):
            sample_boundary(square(), 0.0)

    def test_cap(self):
        with pytest.raises(StepTooSmall):
            sample_boundary(square(), 1e-3, cap=1000)

    def test_iter_pairs(self):
        f, p = next(iter(sample_boundary(square(), 5.0)))
        assert f == 0 and isinstance(p, Point2)


class TestComputeMedialAxis:
    def test_square_diagonals(self):
        g = compute_medial_axis(square(), 0.1)
        c = nearest_medial_vertex(Point2(5, 5), g)
        assert (c.position.x, c.position.y) == pytest.approx((5, 5))
        assert c.clearance == pytest.approx(5.0)
        # every vertex lies on a diagonal
        x, y = g.positions.T
        assert np.all(np.minimum(np.abs(x - y), np.abs(x + y - 10)) < 1e-9)

    def test_corridor_central_segment_and_spurs(self):
        g = compute_medial_axis(CORRIDOR, 0.1)
        lengths = sorted(medial_segment_lengths(g))
        assert len(lengths) == 5
        assert lengths[-1] == pytest.approx(8.0, abs=1e-9)
        spine = max(medial_chains(g), key=len)
        assert np.allclose(g.positions[spine, 1], 1.0)

    def test_square_hole_against_raster_skeleton(self):
        s = square(holes=[box(4, 4, 6, 6)])
        step = s.clearance / 3
        g = compute_medial_axis(s, step)
        sk = raster_skeleton(s.rings, 1000)
        ours = densify(g.segments, 0.01)
        assert hausdorff(ours, sk) <= 2 * step

    def test_square_hole_structure(self):
        g = compute_medial_axis(square(holes=[box(4, 4, 6, 6)]), 4 / 3)
        assert int((g.degree == 1).sum()) == 4
        assert int((g.degree == 3).sum()) == 4
        assert len(medial_segment_lengths(g)) == 8

    def test_default_step_is_third_of_clearance(self, scene):
        s = scene("grid:1x1")
        assert compute_medial_axis(s).step == pytest.approx(s.clearance / 3)

    def test_vertices_sorted_and_inside(self, scene):
        s = scene("grid:2x2")
        g = compute_medial_axis(s)
        # lexicographic order up to the refinement's sub-micro moves
        assert np.all(np.diff(g.positions[:, 0]) >= -1e-6)
        import shapely

        assert shapely.covers(s.polygon, shapely.points(g.positions)).all()

    def test_generators_equidistant(self, scene):
        s = scene("city:40:7")
        g = compute_medial_axis(s)
        d = np.hypot(*(g.gen_points - g.positions[:, None, :]).transpose(2, 0, 1))
        ok = g.gen_feature >= 0
        rel = np.abs(d - g.clearance[:, None])[ok] / g.clearance[:, None].repeat(3, 1)[ok]
        assert rel.max() < 1e-6
        # clearance equals the true distance to the boundary
        dist, _ = point_segment_distance(g.positions, s.edges)
        assert np.allclose(dist.min(axis=1), g.clearance, rtol=1e-6)

    def test_deterministic(self, scene):
        s = scene("grid:1x2")
        a, b = compute_medial_axis(s), compute_medial_axis(s)
        assert np.array_equal(a.positions, b.positions) and np.array_equal(a.edges, b.edges)


class TestQueries:
    def test_nearest_center(self):
        g = compute_medial_axis(square(), 0.5)
        v = nearest_medial_vertex(Point2(5, 5), g)
        assert (v.position.x, v.position.y) == pytest.approx((5, 5))

    def test_nearest_on_edge_is_endpoint(self):
        g = compute_medial_axis(CORRIDOR, 0.5)
        a, b = g.edges[len(g.edges) // 2]
        mid = (g.positions[a] + g.positions[b]) / 2
        v = nearest_medial_vertex(Point2(*mid), g)
        assert any(np.allclose([v.position.x, v.position.y], g.positions[k]) for k in (a, b))

    def test_nearest_in_corridor_on_central(self):
        g = compute_medial_axis(CORRIDOR, 0.1)
        v = nearest_medial_vertex(Point2(4.3, 0.4), g)
        assert v.position.y == pytest.approx(1.0)

    def test_empty_graph(self):
        g = MedialAxisGraph(np.zeros((0, 2)), np.zeros(0), np.zeros((0, 3, 2)), np.zeros((0, 3), int),
                            np.zeros((0, 3), int), np.zeros((0, 3)), np.zeros((0, 2), int), 1, 1.0)
        assert medial_segment_lengths(g) == []
        with pytest.raises(EmptyGraph):
            nearest_medial_vertex(Point2(0, 0), g)

    def test_square_segment_lengths(self):
        step = 0.1
        lengths = medial_segment_lengths(compute_medial_axis(square(), step))
        assert len(lengths) == 4
        # chains stop one half-sample short of the corner
        assert lengths == pytest.approx([math.sqrt(50)] * 4, abs=step * math.sqrt(2))

    def test_chains_partition_edges(self, scene):
        g = compute_medial_axis(scene("grid:2x2"))
        chains = medial_chains(g)
        assert sum(len(c) - 1 for c in chains) == len(g.edges)


@settings(max_examples=15, deadline=None)
@given(st.floats(4, 20), st.floats(1, 4))
def test_rectangle_medial_properties(w, h):
    s = OpenSpace(box(0, 0, w, h))
    g = compute_medial_axis(s, h / 6)
    # connected tree: |E| = |V| - 1 and total length is at least the central spine
    assert len(g.edges) == len(g) - 1
    assert sum(medial_segment_lengths(g)) >= (w - h) - 1e-9
    assert np.all(g.clearance <= h / 2 + 1e-9)
