import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from heiscurves.hgroup import (
    Point,
    TangentVector,
    contact_theta,
    dilate,
    frame_x,
    frame_y,
    group_inv,
    group_mul,
    koranyi_dist,
    koranyi_norm,
)

coord = st.floats(-10, 10, allow_nan=False)
points = st.builds(Point, coord, coord, coord)


def close(p, q, tol=1e-12):
    scale = 1 + max(abs(p.t), abs(q.t))
    return np.allclose(p.as_array(), q.as_array(), atol=tol * scale, rtol=0)


def test_product_formula():
    p = Point(1.0, 2.0, 3.0)
    q = Point(-0.5, 4.0, 1.0)
    # t = 3 + 1 - 2*1*4 + 2*2*(-0.5)
    assert group_mul(p, q) == Point(0.5, 6.0, -6.0)


@given(points, points, points)
def test_associative(p, q, r):
    assert close(group_mul(group_mul(p, q), r), group_mul(p, group_mul(q, r)))


@given(points)
def test_identity_and_inverse(p):
    e = Point.identity()
    assert group_mul(p, e) == p and group_mul(e, p) == p
    assert close(group_mul(p, group_inv(p)), e)


@given(points, st.floats(0.01, 10))
def test_gauge_homogeneous(p, lam):
    assert koranyi_norm(dilate(lam, p)) == pytest.approx(lam * koranyi_norm(p), rel=1e-12, abs=1e-300)


@given(points, points, points)
def test_distance_left_invariant(p, q, r):
    d = koranyi_dist(q, r)
    assert koranyi_dist(group_mul(p, q), group_mul(p, r)) == pytest.approx(d, rel=1e-9, abs=1e-9)


def test_norm_values():
    assert koranyi_norm(Point(0, 0, 16.0)) == 4.0
    assert koranyi_norm(Point(3.0, 4.0, 0.0)) == 5.0
    assert koranyi_dist(Point(1, 1, 1), Point(1, 1, 1)) == 0.0


@given(points)
def test_frames_are_horizontal(p):
    assert contact_theta(p, frame_x(p)) == pytest.approx(0.0, abs=1e-12)
    assert contact_theta(p, frame_y(p)) == pytest.approx(0.0, abs=1e-12)


def test_vertical_direction_is_not_horizontal():
    assert contact_theta(Point(1, 2, 3), TangentVector(0, 0, 1.0)) == 1.0


def test_higher_m():
    p = Point([1, 2], [3, 4], 0.5)
    q = Point([0, 1], [1, 0], -1.0)
    r = group_mul(p, q)
    assert r.m == 2
    assert r.t == 0.5 - 1.0 - 2 * (1 * 1 + 2 * 0) + 2 * (3 * 0 + 4 * 1)


def test_point_is_immutable_and_validated():
    p = Point(1, 2, 3)
    with pytest.raises(ValueError):
        p.x[0] = 5.0
    with pytest.raises(ValueError):
        Point([1, 2], [1], 0)
    with pytest.raises(ValueError):
        Point(np.nan, 0, 0)
    with pytest.raises(ValueError):
        group_mul(Point(1, 1, 1), Point([1, 1], [1, 1], 1))
    with pytest.raises(ValueError):
        dilate(0.0, p)
    assert hash(p) == hash(Point(1.0, 2.0, 3.0))
    assert repr(p) == "Point(1.0, 2.0, 3.0)"
