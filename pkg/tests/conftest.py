import math

import pytest

from vorinv.forward import (
    Bounds,
    GeneratorSet,
    build_voronoi,
    detect_degeneracy,
    random_generators,
)
from vorinv.geom import Point2
from vorinv.tess import extract_polygons

UNIT = Bounds(0.0, 0.0, 1.0, 1.0)


def diagram_supports_local_inversion(d, require_multi_candidate=True):
    """True when every cell has the two usable vertices the ray methods need.

    Optionally also requires some polygon with at least two edge candidates,
    so that the recognition spread is informative, and checks that face
    extraction reproduces the construction cells one to one.
    """
    t = d.tessellation
    counts = [len(p.ordinary_indices(t)) for p in d.cells]
    if min(counts, default=0) < 2:
        return False
    if detect_degeneracy(d):
        return False
    candidates = [c if not p.is_unbounded else c - 1
                  for c, p in zip(counts, d.cells)]
    if require_multi_candidate and max(candidates) < 2:
        return False
    polys = extract_polygons(t)
    if len(polys) != len(d.cells):
        return False
    return {p.vertex_indices for p in polys} == {p.vertex_indices for p in d.cells}


def well_formed_diagram(n, start_seed=0, bounds=UNIT):
    """First random diagram from start_seed onward that supports all methods."""
    seed = start_seed
    while True:
        d = build_voronoi(random_generators(n, seed=seed, bounds=bounds))
        if diagram_supports_local_inversion(d):
            return d, seed
        seed += 1


def tri_fixture_generators():
    """The three-generator fixture: circumcenter forced to (1, 1) by symmetry."""
    pts = (Point2(0.0, 0.0), Point2(2.0, 0.0), Point2(0.0, 2.0))
    return GeneratorSet(pts, Bounds(-3.0, -3.0, 3.0, 3.0))


def square_corner_generators():
    """Four co-circular generators at unit-square corners (degenerate case)."""
    pts = (Point2(0.0, 0.0), Point2(1.0, 0.0), Point2(1.0, 1.0), Point2(0.0, 1.0))
    return GeneratorSet(pts, Bounds(-1.0, -1.0, 2.0, 2.0))


@pytest.fixture(scope="session")
def tri_diagram():
    return build_voronoi(tri_fixture_generators())


@pytest.fixture(scope="session")
def square_diagram():
    return build_voronoi(square_corner_generators())


@pytest.fixture(scope="session")
def rand10_diagram():
    return build_voronoi(random_generators(10, seed=42, bounds=UNIT))


@pytest.fixture(scope="session")
def rand20_diagram():
    return build_voronoi(random_generators(20, seed=7, bounds=UNIT))


@pytest.fixture(scope="session")
def good10_diagram():
    d, _ = well_formed_diagram(10, start_seed=100)
    return d


def ring_signed_area(ring):
    area = 0.0
    for k in range(len(ring)):
        a, b = ring[k], ring[(k + 1) % len(ring)]
        area += a.x * b.y - b.x * a.y
    return 0.5 * area


def point_in_convex_ring(p, ring):
    for k in range(len(ring)):
        a, b = ring[k], ring[(k + 1) % len(ring)]
        if (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x) < 0.0:
            return False
    return True


def dist_to_ring_boundary(p, ring):
    best = math.inf
    for k in range(len(ring)):
        a, b = ring[k], ring[(k + 1) % len(ring)]
        vx, vy = b.x - a.x, b.y - a.y
        wx, wy = p.x - a.x, p.y - a.y
        t = max(0.0, min(1.0, (wx * vx + wy * vy) / (vx * vx + vy * vy)))
        best = min(best, math.hypot(wx - t * vx, wy - t * vy))
    return best
