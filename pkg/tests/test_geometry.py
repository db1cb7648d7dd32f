import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from searoute.geometry import (
    DegenerateAngleError, OrientedRect, Point, bearing, distance, rect_corners,
    sample_annular_sectors, sample_in_annular_sector, sample_in_disc, vertex_angle,
)

coord = st.floats(-1e4, 1e4, allow_nan=False)
points = st.builds(Point, coord, coord)


@pytest.mark.parametrize("a, b, expected", [
    ((0, 0), (3, 4), 5.0),
    ((7, 2), (7, 2), 0.0),
    ((-1, 0), (1, 0), 2.0),
])
def test_distance_examples(a, b, expected):
    assert distance(Point(*a), Point(*b)) == expected


@given(points, points, points)
def test_triangle_inequality(a, b, c):
    assert distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9


def test_bearing_axes():
    assert bearing(Point(0, 0), Point(1, 0)) == 0.0
    assert bearing(Point(0, 0), Point(0, 2)) == pytest.approx(math.pi / 2)


@pytest.mark.parametrize("nxt, expected", [((2, 0), 180.0), ((0, 0), 0.0), ((1, 1), 90.0)])
def test_vertex_angle_examples(nxt, expected):
    assert vertex_angle(Point(0, 0), Point(1, 0), Point(*nxt)) == pytest.approx(expected, abs=1e-12)


def test_vertex_angle_degenerate():
    with pytest.raises(DegenerateAngleError):
        vertex_angle(Point(1, 1), Point(1, 1), Point(2, 0))


@settings(max_examples=200)
@given(points, points, points, st.floats(0, 2 * math.pi), coord, coord)
def test_vertex_angle_symmetric_and_rigid(p, v, n, rot, dx, dy):
    if distance(p, v) < 1e-3 or distance(n, v) < 1e-3:
        return
    angle = vertex_angle(p, v, n)
    assert 0.0 <= angle <= 180.0
    assert vertex_angle(n, v, p) == pytest.approx(angle, abs=1e-9)
    c, s = math.cos(rot), math.sin(rot)

    def move(q):
        return Point(c * q.x - s * q.y + dx, s * q.x + c * q.y + dy)

    assert vertex_angle(move(p), move(v), move(n)) == pytest.approx(angle, abs=1e-6)


def _as_set(corners, nd=9):
    return {(round(x, nd) + 0.0, round(y, nd) + 0.0) for x, y in corners}


def test_rect_corners_axis_aligned():
    corners = rect_corners(OrientedRect(Point(0, 0), 2.0, 1.0, 0.0))
    assert _as_set(corners) == {(1, 0.5), (1, -0.5), (-1, -0.5), (-1, 0.5)}


def test_rect_corners_rotation_and_symmetry():
    base = rect_corners(OrientedRect(Point(0, 0), 2.0, 1.0, 0.0))
    quarter = rect_corners(OrientedRect(Point(0, 0), 2.0, 1.0, math.pi / 2))
    assert _as_set(quarter) == _as_set([(-y, x) for x, y in base])
    half = rect_corners(OrientedRect(Point(0, 0), 2.0, 1.0, math.pi))
    assert _as_set(half) == _as_set(base)


@given(points, st.floats(0.1, 500), st.floats(0.1, 500), st.floats(-10, 10))
def test_rect_corners_area_and_centroid(center, length, width, heading):
    corners = np.array(rect_corners(OrientedRect(center, length, width, heading)))
    x, y = corners[:, 0], corners[:, 1]
    area = 0.5 * (np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
    assert area > 0  # counter-clockwise winding
    assert area == pytest.approx(length * width, rel=1e-6)
    assert corners.mean(axis=0) == pytest.approx(np.array(center), abs=1e-9)


def test_oriented_rect_rejects_bad_dims():
    with pytest.raises(ValueError):
        OrientedRect(Point(0, 0), 0.0, 1.0, 0.0)


def test_annular_sector_containment(rng):
    for _ in range(500):
        p = sample_in_annular_sector(Point(3, 4), 5.0, 10.0, 0.2, 1.1, rng)
        r = distance(p, Point(3, 4))
        assert 5.0 - 1e-9 <= r <= 10.0 + 1e-9
        assert 0.2 - 1e-12 <= bearing(Point(3, 4), p) <= 1.1 + 1e-12
    for _ in range(200):
        assert distance(sample_in_annular_sector(Point(0, 0), 0.0, 10.0, 0.0, 2 * math.pi, rng), Point(0, 0)) <= 10.0


@pytest.mark.parametrize("r_min, r_max, lo, hi", [(5, 5, 0, 1), (-1, 5, 0, 1), (0, 5, 1, 1), (6, 5, 0, 1)])
def test_annular_sector_invalid_bounds(rng, r_min, r_max, lo, hi):
    with pytest.raises(ValueError):
        sample_in_annular_sector(Point(0, 0), r_min, r_max, lo, hi, rng)


def test_uniform_by_area_fraction():
    # area CDF: P(r <= R / sqrt(2)) = 1/2
    rng = np.random.default_rng(7)
    pts = sample_annular_sectors(Point(0, 0), 0.0, 1.0, 1, 1_000_000, rng)
    frac = np.mean(np.hypot(pts[:, 0], pts[:, 1]) <= 1 / math.sqrt(2))
    assert abs(frac - 0.5) < 0.01


def test_radial_cdf_ks():
    rng = np.random.default_rng(8)
    r_min, r_max = 2.0, 7.0
    pts = sample_annular_sectors(Point(1, 1), r_min, r_max, 8, 100_000 // 8, rng)
    r = np.hypot(pts[:, 0] - 1, pts[:, 1] - 1)
    res = stats.kstest(r, lambda x: (np.clip(x, r_min, r_max) ** 2 - r_min**2) / (r_max**2 - r_min**2))
    assert res.pvalue > 0.01


def test_sector_batches_land_in_their_sectors(rng):
    pts = sample_annular_sectors(Point(0, 0), 0.0, 10.0, 8, 4, rng)
    assert pts.shape == (32, 2)
    ang = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2 * math.pi)
    assert np.array_equal(np.floor(ang / (2 * math.pi / 8)).astype(int), np.repeat(np.arange(8), 4))


def test_sample_in_disc(rng):
    for _ in range(300):
        assert distance(sample_in_disc(Point(10, -5), 3.0, rng), Point(10, -5)) <= 3.0 + 1e-12
