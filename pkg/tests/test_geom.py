import math

import numpy as np
import pytest

from vorinv.geom import (
    CollinearPoints,
    DegenerateAngle,
    DegenerateSegment,
    GeometryError,
    Point2,
    Ray,
    Segment,
    angle_at,
    ccw_angle,
    circumcircle,
    distance,
    perpendicular_bisector,
    ray_intersection,
)


def test_point_rejects_non_finite():
    with pytest.raises(GeometryError):
        Point2(float("nan"), 0.0)
    with pytest.raises(GeometryError):
        Point2(0.0, float("inf"))


@pytest.mark.parametrize("p,q,expected", [
    ((0, 0), (0, 0), 0.0),
    ((0, 0), (3, 4), 5.0),
    ((1, 2), (4, 6), 5.0),
])
def test_distance_examples(p, q, expected):
    assert distance(Point2(*p), Point2(*q)) == pytest.approx(expected, abs=0.0)


def test_distance_triangle_inequality():
    rng = np.random.default_rng(1)
    for _ in range(200):
        a, b, c = (Point2(*rng.uniform(-10, 10, 2)) for _ in range(3))
        assert distance(a, c) <= distance(a, b) + distance(b, c) + 1e-12
        assert distance(a, b) == pytest.approx(distance(b, a), abs=0.0)


@pytest.mark.parametrize("a,b,mid,axis", [
    ((0, 0), (2, 0), (1, 0), "y"),
    ((0, 0), (0, 2), (0, 1), "x"),
])
def test_perpendicular_bisector_axis_aligned(a, b, mid, axis):
    point, direction = perpendicular_bisector(Segment(Point2(*a), Point2(*b)))
    assert (point.x, point.y) == pytest.approx(mid)
    if axis == "y":
        assert abs(direction[0]) < 1e-15 and abs(abs(direction[1]) - 1) < 1e-15
    else:
        assert abs(direction[1]) < 1e-15 and abs(abs(direction[0]) - 1) < 1e-15


def test_perpendicular_bisector_diagonal():
    point, direction = perpendicular_bisector(Segment(Point2(0, 0), Point2(2, 2)))
    assert (point.x, point.y) == pytest.approx((1, 1))
    # direction proportional to (-1, 1)
    assert direction[0] + direction[1] == pytest.approx(0.0, abs=1e-15)


def test_perpendicular_bisector_equidistance_property():
    rng = np.random.default_rng(2)
    for _ in range(20):
        s = Segment(Point2(*rng.uniform(-5, 5, 2)), Point2(*rng.uniform(-5, 5, 2)))
        point, direction = perpendicular_bisector(s)
        seg_len = distance(s.a, s.b)
        for t in rng.uniform(-10, 10, 100):
            p = Point2(point.x + t * direction[0], point.y + t * direction[1])
            assert abs(distance(p, s.a) - distance(p, s.b)) < 1e-9 * seg_len


def test_perpendicular_bisector_degenerate():
    with pytest.raises(DegenerateSegment):
        Segment(Point2(1, 1), Point2(1, 1))


@pytest.mark.parametrize("a,b,c,center,radius", [
    ((0, 0), (2, 0), (0, 2), (1, 1), math.sqrt(2)),
    ((-1, 0), (1, 0), (0, 1), (0, 0), 1.0),
])
def test_circumcircle_examples(a, b, c, center, radius):
    circle = circumcircle(Point2(*a), Point2(*b), Point2(*c))
    assert (circle.center.x, circle.center.y) == pytest.approx(center, abs=1e-12)
    assert circle.radius == pytest.approx(radius, rel=1e-12)


def _bisector_intersection_oracle(a, b, c):
    # Independent of circumcircle: solve the 2x2 system meeting two bisectors.
    m1, d1 = perpendicular_bisector(Segment(a, b))
    m2, d2 = perpendicular_bisector(Segment(a, c))
    A = np.array([[d1[0], -d2[0]], [d1[1], -d2[1]]])
    rhs = np.array([m2.x - m1.x, m2.y - m1.y])
    t, _ = np.linalg.solve(A, rhs)
    return Point2(m1.x + t * d1[0], m1.y + t * d1[1])


def test_circumcircle_against_bisector_oracle():
    rng = np.random.default_rng(3)
    checked = 0
    while checked < 50:
        a, b, c = (Point2(*rng.uniform(-4, 4, 2)) for _ in range(3))
        area2 = abs((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x))
        if area2 < 1e-2:
            continue
        circle = circumcircle(a, b, c)
        oracle = _bisector_intersection_oracle(a, b, c)
        scale = max(1.0, circle.radius)
        assert distance(circle.center, oracle) < 1e-9 * scale
        for p in (a, b, c):
            assert distance(circle.center, p) == pytest.approx(circle.radius, rel=1e-9)
        checked += 1


def test_circumcircle_permutation_invariant():
    rng = np.random.default_rng(4)
    a, b, c = (Point2(*rng.uniform(-2, 2, 2)) for _ in range(3))
    base = circumcircle(a, b, c)
    for trio in ((a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)):
        other = circumcircle(*trio)
        assert distance(base.center, other.center) < 1e-12


def test_circumcircle_collinear():
    with pytest.raises(CollinearPoints):
        circumcircle(Point2(0, 0), Point2(1, 1), Point2(2, 2))


def test_ray_intersection_examples():
    r1 = Ray(Point2(0, 0), (1.0, 0.0))
    r2 = Ray(Point2(2, 2), (0.0, -1.0))
    hit = ray_intersection(r1, r2)
    assert (hit.x, hit.y) == pytest.approx((2, 0))

    parallel = ray_intersection(Ray(Point2(0, 0), (1.0, 0.0)), Ray(Point2(0, 1), (1.0, 0.0)))
    assert parallel is None

    s = 1 / math.sqrt(2)
    v = ray_intersection(Ray(Point2(0, 0), (s, s)), Ray(Point2(2, 0), (-s, s)))
    assert (v.x, v.y) == pytest.approx((1, 1))


def test_ray_intersection_rejects_backward():
    # Rays meeting only behind an origin report no intersection.
    r1 = Ray(Point2(0, 0), (1.0, 0.0))
    r2 = Ray(Point2(-2, 2), (0.0, -1.0))
    assert ray_intersection(r1, r2) is None


def test_ray_intersection_symmetric():
    rng = np.random.default_rng(5)
    for _ in range(100):
        r1 = Ray.from_angle(Point2(*rng.uniform(-3, 3, 2)), rng.uniform(0, 2 * math.pi))
        r2 = Ray.from_angle(Point2(*rng.uniform(-3, 3, 2)), rng.uniform(0, 2 * math.pi))
        a = ray_intersection(r1, r2)
        b = ray_intersection(r2, r1)
        if a is None:
            assert b is None
        else:
            assert distance(a, b) < 1e-9


@pytest.mark.parametrize("vertex,a,b,expected", [
    ((0, 0), (1, 0), (0, 1), math.pi / 2),
    ((0, 0), (1, 0), (-1, 0), math.pi),
    ((1, 1), (2, 1), (2, 2), math.pi / 4),
])
def test_angle_at_examples(vertex, a, b, expected):
    assert angle_at(Point2(*vertex), Point2(*a), Point2(*b)) == pytest.approx(expected)


def test_angle_at_degenerate():
    with pytest.raises(DegenerateAngle):
        angle_at(Point2(0, 0), Point2(0, 0), Point2(1, 0))


def test_ccw_angle():
    assert ccw_angle((1, 0), (0, 1)) == pytest.approx(math.pi / 2)
    assert ccw_angle((0, 1), (1, 0)) == pytest.approx(3 * math.pi / 2)


def test_ray_requires_unit_direction():
    with pytest.raises(GeometryError):
        Ray(Point2(0, 0), (2.0, 0.0))
