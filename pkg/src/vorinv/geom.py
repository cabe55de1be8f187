"""Planar geometric primitives: points, segments, rays, circles, angles.

Everything here is a pure function over immutable values, in plain double
precision.  Tolerances assume scene coordinates of order unity unless noted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

from .errors import VorinvError

# Rays whose unit directions have |cross| below this are treated as parallel.
PARALLEL_EPS = 1e-12
# Allowed deviation of a Ray direction from unit length.
UNIT_EPS = 1e-12

Vec = Tuple[float, float]


class GeometryError(VorinvError):
    pass


class DegenerateSegment(GeometryError):
    pass


class CollinearPoints(GeometryError):
    pass


class DegenerateAngle(GeometryError):
    pass


@dataclass(frozen=True)
class Point2:
    """A location in the Euclidean plane.  Coordinates must be finite."""

    x: float
    y: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"non-finite coordinates ({self.x}, {self.y})")

    def as_tuple(self) -> Vec:
        return (self.x, self.y)


@dataclass(frozen=True)
class Segment:
    """A segment with distinct endpoints."""

    a: Point2
    b: Point2

    def __post_init__(self) -> None:
        if self.a.x == self.b.x and self.a.y == self.b.y:
            raise DegenerateSegment(f"segment endpoints coincide at {self.a}")


@dataclass(frozen=True)
class Ray:
    """A half line from `origin` along the unit vector `direction`."""

    origin: Point2
    direction: Vec

    def __post_init__(self) -> None:
        norm = math.hypot(*self.direction)
        if abs(norm - 1.0) > UNIT_EPS:
            raise GeometryError(f"ray direction not unit length: |{self.direction}| = {norm}")

    @staticmethod
    def from_angle(origin: Point2, theta: float) -> "Ray":
        return Ray(origin, (math.cos(theta), math.sin(theta)))

    @staticmethod
    def toward(origin: Point2, target: Point2) -> "Ray":
        dx, dy = target.x - origin.x, target.y - origin.y
        norm = math.hypot(dx, dy)
        if norm == 0.0:
            raise GeometryError("ray target coincides with origin")
        return Ray(origin, (dx / norm, dy / norm))

    def point_at(self, t: float) -> Point2:
        return Point2(self.origin.x + t * self.direction[0],
                      self.origin.y + t * self.direction[1])

    def rotated(self, angle: float) -> "Ray":
        c, s = math.cos(angle), math.sin(angle)
        dx, dy = self.direction
        return Ray(self.origin, (c * dx - s * dy, s * dx + c * dy))


@dataclass(frozen=True)
class Circle:
    center: Point2
    radius: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.radius) and self.radius >= 0.0):
            raise GeometryError(f"invalid circle radius {self.radius}")


def distance(p: Point2, q: Point2) -> float:
    """Euclidean distance between two points."""
    return math.hypot(p.x - q.x, p.y - q.y)


def perpendicular_bisector(s: Segment) -> Tuple[Point2, Vec]:
    """Return (midpoint, unit direction) of the line bisecting `s` at right angles.

    Every point on the returned line is equidistant from the segment endpoints.
    """
    mx = 0.5 * (s.a.x + s.b.x)
    my = 0.5 * (s.a.y + s.b.y)
    dx = s.b.x - s.a.x
    dy = s.b.y - s.a.y
    norm = math.hypot(dx, dy)
    return Point2(mx, my), (-dy / norm, dx / norm)


def circumcircle(a: Point2, b: Point2, c: Point2) -> Circle:
    """Circle through three non-collinear points.

    The center is computed with the standard determinant formula; collinear
    triples (normalized twice-area below 1e-12) raise CollinearPoints.
    """
    abx, aby = b.x - a.x, b.y - a.y
    acx, acy = c.x - a.x, c.y - a.y
    d = 2.0 * (abx * acy - aby * acx)
    scale = math.hypot(abx, aby) * math.hypot(acx, acy)
    if scale == 0.0 or abs(d) <= 2.0 * 1e-12 * scale:
        raise CollinearPoints(f"collinear points {a}, {b}, {c}")
    ab2 = abx * abx + aby * aby
    ac2 = acx * acx + acy * acy
    ux = a.x + (acy * ab2 - aby * ac2) / d
    uy = a.y + (abx * ac2 - acx * ab2) / d
    center = Point2(ux, uy)
    return Circle(center, distance(center, a))


def ray_intersection(r1: Ray, r2: Ray) -> Optional[Point2]:
    """Intersection of two rays, or None.

    Returns None when the unit directions are parallel (|cross| < 1e-12) or
    when either solved ray parameter is negative; NoIntersection is a normal
    outcome, not an error.
    """
    d1x, d1y = r1.direction
    d2x, d2y = r2.direction
    denom = d1x * d2y - d1y * d2x
    if abs(denom) < PARALLEL_EPS:
        return None
    ox = r2.origin.x - r1.origin.x
    oy = r2.origin.y - r1.origin.y
    t1 = (ox * d2y - oy * d2x) / denom
    t2 = (ox * d1y - oy * d1x) / denom
    if t1 < 0.0 or t2 < 0.0:
        return None
    return Point2(r1.origin.x + t1 * d1x, r1.origin.y + t1 * d1y)


def angle_at(vertex: Point2, a: Point2, b: Point2) -> float:
    """Unsigned angle in [0, pi] between directions vertex->a and vertex->b.

    Uses atan2 of cross/dot rather than acos of a normalized dot product to
    stay accurate near 0 and pi.
    """
    ux, uy = a.x - vertex.x, a.y - vertex.y
    vx, vy = b.x - vertex.x, b.y - vertex.y
    if (ux == 0.0 and uy == 0.0) or (vx == 0.0 and vy == 0.0):
        raise DegenerateAngle("angle endpoint coincides with vertex")
    cross = ux * vy - uy * vx
    dot = ux * vx + uy * vy
    return math.atan2(abs(cross), dot)


def ccw_angle(from_dir: Vec, to_dir: Vec) -> float:
    """Counterclockwise angle in [0, 2*pi) rotating `from_dir` onto `to_dir`."""
    a = math.atan2(to_dir[1], to_dir[0]) - math.atan2(from_dir[1], from_dir[0])
    return a % (2.0 * math.pi)
