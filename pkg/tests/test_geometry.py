import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from axialmap.geometry import (
    BruteForceIndex,
    Chord,
    DegenerateScene,
    GridIndex,
    OriginOutside,
    Point2,
    clip_ray,
    direction_vector,
    min_clearance,
    point_in_open_space,
    segment_intersection,
    segments_cross,
)
from axialmap.openspace import OpenSpace
from conftest import box, square

HOLE = box(4, 4, 6, 6)


def ch(x1, y1, x2, y2):
    return Chord(Point2(x1, y1), Point2(x2, y2))


class TestSegmentIntersection:
    def test_cross(self):
        p = segment_intersection(ch(0, 0, 2, 2), ch(0, 2, 2, 0))
        assert p == Point2(1.0, 1.0)

    def test_parallel_disjoint(self):
        assert segment_intersection(ch(0, 0, 1, 0), ch(0, 1, 1, 1)) is None

    def test_collinear_overlap_midpoint(self):
        p = segment_intersection(ch(0, 0, 4, 0), ch(1, 0, 3, 0))
        assert p.x == pytest.approx(2.0) and p.y == pytest.approx(0.0)

    def test_touching_endpoint(self):
        p = segment_intersection(ch(0, 0, 1, 0), ch(1, 0, 1, 1))
        assert p is not None and p.x == pytest.approx(1.0)

    def test_zero_length_rejected(self):
        with pytest.raises(ValueError):
            ch(1, 1, 1, 1)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            Point2(math.nan, 0.0)


coord = st.floats(-100, 100, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(coord, coord, coord, coord, coord, coord, coord, coord)
def test_intersection_symmetric_and_on_both(x1, y1, x2, y2, x3, y3, x4, y4):
    if math.hypot(x2 - x1, y2 - y1) < 1e-6 or math.hypot(x4 - x3, y4 - y3) < 1e-6:
        return
    a, b = ch(x1, y1, x2, y2), ch(x3, y3, x4, y4)
    p, q = segment_intersection(a, b), segment_intersection(b, a)
    assert (p is None) == (q is None)
    if p is not None:
        assert p.x == pytest.approx(q.x, abs=1e-6) and p.y == pytest.approx(q.y, abs=1e-6)
        for s in (a, b):
            # on the segment: distance to it is ~0
            d = np.array([s.b.x - s.a.x, s.b.y - s.a.y])
            t = np.clip(np.dot([p.x - s.a.x, p.y - s.a.y], d) / d.dot(d), 0, 1)
            foot = np.array([s.a.x, s.a.y]) + t * d
            assert np.hypot(*(foot - [p.x, p.y])) < 1e-6 * max(1.0, np.abs(d).max())
    # the matrix predicate agrees with the scalar one on proper crossings
    m = segments_cross(a.as_array()[None], b.as_array()[None])
    if m[0, 0]:
        assert p is not None


class TestPointInOpenSpace:
    def test_inside_hole(self):
        assert not point_in_open_space(Point2(5, 5), square(holes=[HOLE]))

    def test_open(self):
        assert point_in_open_space(Point2(2, 5), square(holes=[HOLE]))

    def test_outside(self):
        assert not point_in_open_space(Point2(11, 5), square(holes=[HOLE]))

    def test_boundary_counts_as_inside(self):
        assert point_in_open_space(Point2(0, 5), square())


class TestClipRay:
    def test_horizontal(self):
        c = clip_ray(Point2(5, 5), 0.0, square())
        assert np.allclose(c.as_array(), [0, 5, 10, 5])
        assert c.length == pytest.approx(10.0)

    def test_blocked_by_hole(self):
        c = clip_ray(Point2(2, 5), 0.0, square(holes=[HOLE]))
        assert np.allclose(c.as_array(), [0, 5, 4, 5])
        assert c.length == pytest.approx(4.0)

    def test_diagonal(self):
        c = clip_ray(Point2(5, 5), 45.0, square())
        assert np.allclose(c.as_array(), [0, 0, 10, 10], atol=1e-9)
        assert c.length == pytest.approx(math.sqrt(200))

    def test_origin_in_hole(self):
        with pytest.raises(OriginOutside):
            clip_ray(Point2(5, 5), 0.0, square(holes=[HOLE]))

    def test_exact_axis_directions(self):
        d = direction_vector([0, 90, 180, 270])
        assert np.array_equal(d, [[1, 0], [0, 1], [-1, 0], [0, -1]])


class TestMinClearance:
    def test_square_with_hole(self):
        assert min_clearance(square(holes=[HOLE])) == pytest.approx(4.0)

    def test_gap_between_holes(self):
        s = square(holes=[box(1, 1, 3, 3), box(3.5, 1, 5.5, 3)])
        assert min_clearance(s) == pytest.approx(0.5)

    def test_plain_square(self):
        assert min_clearance(square()) == pytest.approx(10.0)

    def test_touching_holes(self):
        s = square(holes=[box(1, 1, 3, 3), box(3, 1, 5, 3)])
        with pytest.raises(DegenerateScene):
            min_clearance(s)


def test_grid_index_matches_brute_force_on_1000_rays(scene):
    s = scene("city:40:7")
    rng = np.random.default_rng(3)
    lo, hi = s.outer.min(axis=0), s.outer.max(axis=0)
    grid, brute = GridIndex(s.edges), BruteForceIndex(s.edges)
    n = 0
    while n < 1000:
        p = lo + rng.random(2) * (hi - lo)
        if not point_in_open_space(p, s):
            continue
        ang = rng.random() * 360.0
        a = clip_ray(p, ang, s, grid).as_array()
        b = clip_ray(p, ang, s, brute).as_array()
        assert np.array_equal(a, b)
        n += 1


@settings(max_examples=60, deadline=None)
@given(st.floats(0.5, 9.5), st.floats(0.5, 9.5), st.floats(0, 180))
def test_clipped_chord_inside_and_maximal(x, y, ang):
    s = square(holes=[HOLE])
    if not point_in_open_space(Point2(x, y), s):
        return
    c = clip_ray(Point2(x, y), ang, s)
    seg = np.linspace(c.as_array()[:2], c.as_array()[2:], 41)
    assert all(point_in_open_space(q, s) for q in seg)
    # both endpoints sit on the boundary
    import shapely

    for q in (c.a, c.b):
        assert s.polygon.boundary.distance(shapely.Point(q.x, q.y)) < 1e-9
