import math

import numpy as np
import pytest

from vorinv.forward import build_voronoi, hex_lattice_generators, random_generators
from vorinv.geom import Point2, Ray, distance, ray_intersection
from vorinv.invert import (
    DegenerateVertex,
    GeneratorEstimate,
    InsufficientVertices,
    TooFewEdges,
    build_bisector_system,
    estimates_csv,
    generator_ray,
    invert,
    invert_alg1,
    invert_alg2,
    invert_alg3,
    invert_least_squares,
    polygon_rays,
    recognize_voronoi,
)
from vorinv.tess import Polygon, Tessellation, extract_polygons, perturb_vertices
from conftest import UNIT, well_formed_diagram

ALL_METHODS = ("alg1", "alg2", "alg3", "lsq")


def quad_tessellation():
    verts = (Point2(0, 0), Point2(2, 0), Point2(2, 1), Point2(0, 1))
    adjacency = ((1, 3), (0, 2), (1, 3), (2, 0))
    return Tessellation(verts, 4, adjacency)


def ray_line_distance(ray, p):
    dx, dy = ray.direction
    wx, wy = p.x - ray.origin.x, p.y - ray.origin.y
    t = wx * dx + wy * dy
    return abs(wx * dy - wy * dx), t


# ---------------------------------------------------------------- rays

def test_fixture_ray_points_at_generator(tri_diagram):
    t = tri_diagram.tessellation
    cell0 = tri_diagram.cells[0]  # cell of generator (0, 0)
    gr = generator_ray(t, cell0, 0)
    s = 1 / math.sqrt(2)
    assert gr.ray.direction == pytest.approx((-s, -s))
    off, along = ray_line_distance(gr.ray, tri_diagram.generators.points[0])
    assert off < 1e-9 and along > 0


def test_honeycomb_ray_bisects_sector():
    d = build_voronoi(hex_lattice_generators(5, 5))
    t = d.tessellation
    # pick a vertex all of whose neighbors are ordinary (deep interior)
    v = next(v for v in range(t.n_ordinary)
             if all(j < t.n_ordinary for j in t.adjacency[v]))
    poly = next(p for p in d.cells if not p.is_unbounded and v in p.vertex_indices)
    gr = generator_ray(t, poly, v)
    k = poly.vertex_indices.index(v)
    m = len(poly.vertex_indices)
    q = t.vertices[v]
    for nb in (poly.vertex_indices[(k + 1) % m], poly.vertex_indices[(k - 1) % m]):
        p = t.vertices[nb]
        ex, ey = p.x - q.x, p.y - q.y
        norm = math.hypot(ex, ey)
        cosang = (ex * gr.ray.direction[0] + ey * gr.ray.direction[1]) / norm
        assert math.acos(max(-1.0, min(1.0, cosang))) == pytest.approx(math.pi / 3, abs=1e-9)


def test_ray_soundness_random(rand20_diagram):
    t = rand20_diagram.tessellation
    for i, poly in enumerate(rand20_diagram.cells):
        rays, skipped = polygon_rays(t, poly, i)
        assert not skipped
        gen = rand20_diagram.generators.points[i]
        for gr in rays:
            off, along = ray_line_distance(gr.ray, gen)
            assert off < 1e-9
            assert along > 0


def test_edge_ray_pairs_meet_at_generator(rand20_diagram):
    # Both rays of every interior edge intersect at the edge's generator.
    t = rand20_diagram.tessellation
    for i, poly in enumerate(rand20_diagram.cells):
        idx = poly.vertex_indices
        m = len(idx)
        ks = range(1, m - 2) if poly.is_unbounded else range(m)
        gen = rand20_diagram.generators.points[i]
        for k in ks:
            k2 = (k + 1) % m
            ra = generator_ray(t, poly, idx[k], i)
            rb = generator_ray(t, poly, idx[k2], i)
            hit = ray_intersection(ra.ray, rb.ray)
            assert hit is not None
            assert distance(hit, gen) < 1e-9


def test_generator_ray_degree_check(square_diagram):
    t = square_diagram.tessellation
    poly = next(p for p in square_diagram.cells if p.vertex_indices)
    center = next(v for v in poly.vertex_indices if not t.is_dummy(v))
    with pytest.raises(DegenerateVertex):
        generator_ray(t, poly, center)


# ---------------------------------------------------------------- algorithms

@pytest.mark.parametrize("method", ALL_METHODS)
@pytest.mark.parametrize("start_seed,n", [(3, 10), (11, 25)])
def test_round_trip_exact(method, start_seed, n):
    d, _ = well_formed_diagram(n, start_seed=start_seed)
    est = invert(d.tessellation, method, polygons=d.cells)
    assert est.n_failed == 0
    for i, pp in enumerate(est.per_polygon):
        assert distance(pp.position, d.generators.points[i]) < 1e-6


def test_alg1_insufficient_vertices(tri_diagram):
    # each cell of the three-generator diagram holds exactly one usable vertex
    with pytest.raises(InsufficientVertices):
        invert_alg1(tri_diagram.tessellation, polygons=tri_diagram.cells)


def test_alg1_record_mode(tri_diagram):
    est = invert_alg1(tri_diagram.tessellation, polygons=tri_diagram.cells,
                      on_error="record")
    assert est.n_failed == 3
    assert all(pp.error == "InsufficientVertices" for pp in est.per_polygon)


def test_alg2_hexagon_candidates_coincide():
    d = build_voronoi(hex_lattice_generators(5, 5))
    i = 2 * 5 + 2  # central lattice generator: a full hexagonal cell
    poly = d.cells[i]
    assert not poly.is_unbounded and len(poly.vertex_indices) == 6
    est = invert_alg2(d.tessellation, polygons=[poly])
    pp = est.per_polygon[0]
    # of the C(6,2)=15 ray pairs, the 3 opposite-corner pairs are antiparallel
    assert pp.n_pairs == 12
    assert pp.n_dropped == 3
    assert pp.spread < 1e-9
    assert distance(pp.position, d.generators.points[i]) < 1e-9
    assert distance(pp.line_fit, d.generators.points[i]) < 1e-9


def test_pair_intersection_keeps_backward_points():
    # the ray algorithms intersect supporting lines, so pairs that meet
    # behind an origin still produce a (possibly wild) candidate
    from vorinv.invert import pair_intersection
    r1 = Ray(Point2(0, 0), (1.0, 0.0))
    r2 = Ray(Point2(-2, 2), (0.0, -1.0))
    assert ray_intersection(r1, r2) is None
    hit = pair_intersection(r1, r2)
    assert (hit.x, hit.y) == pytest.approx((-2.0, 0.0))
    assert pair_intersection(r1, Ray(Point2(0, 1), (1.0, 0.0))) is None


def test_near_parallel_pair_less_stable():
    # basis of the alg3 weights: intersections of nearly parallel rays move
    # far more under small rotations than near-orthogonal ones
    target = Point2(1.0, 1.0)
    eps = 1e-4

    def displacement(theta1, theta2, r=2.0):
        rays = []
        for theta in (theta1, theta2):
            origin = Point2(target.x - r * math.cos(theta), target.y - r * math.sin(theta))
            rays.append(Ray.from_angle(origin, theta))
        base = ray_intersection(*rays)
        moved = ray_intersection(rays[0].rotated(eps), rays[1])
        return distance(base, moved)

    near_parallel = displacement(0.0, 0.05)
    orthogonal = displacement(0.0, math.pi / 2)
    assert near_parallel > 10 * orthogonal


def test_alg3_weights_convex(rand20_diagram):
    t = perturb_vertices(rand20_diagram.tessellation, 0.002, seed=8)
    est = invert_alg3(t, polygons=rand20_diagram.cells, on_error="record")
    for pp in est.per_polygon:
        if pp.position is None or not pp.weights:
            continue
        assert all(w >= 0.0 for w in pp.weights)
        assert sum(pp.weights) == pytest.approx(1.0, abs=1e-9)


def test_invert_dispatch_unknown_method(tri_diagram):
    with pytest.raises(Exception, match="unknown method"):
        invert(tri_diagram.tessellation, "alg9")


# ---------------------------------------------------------------- least squares

def test_bisector_conditions_hold_at_truth(rand20_diagram):
    A, rhs, edges = build_bisector_system(rand20_diagram.tessellation, rand20_diagram.cells)
    truth = np.array([c for p in rand20_diagram.generators.points for c in (p.x, p.y)])
    assert np.linalg.norm(A @ truth - rhs) < 1e-8


def test_two_cell_system_with_pinned_generator():
    # shared edge (1,0)-(1,2); truth (0,1) and (2,1); pin the first generator
    verts = (Point2(1.0, 0.0), Point2(1.0, 2.0))
    t = Tessellation(verts, 2, ((1,), (0,)))
    polys = [Polygon((0, 1), True), Polygon((1, 0), True)]
    A, rhs, edges = build_bisector_system(t, polys)
    assert len(edges) == 1
    truth = np.array([0.0, 1.0, 2.0, 1.0])
    assert np.linalg.norm(A @ truth - rhs) < 1e-12
    pin = np.zeros((2, 4))
    pin[0, 0] = 1.0
    pin[1, 1] = 1.0
    A_full = np.vstack([A, pin])
    rhs_full = np.concatenate([rhs, [0.0, 1.0]])
    sol, *_ = np.linalg.lstsq(A_full, rhs_full, rcond=None)
    assert sol == pytest.approx([0.0, 1.0, 2.0, 1.0], abs=1e-9)


def test_lsq_exact_round_trip(rand20_diagram):
    est = invert_least_squares(rand20_diagram.tessellation, polygons=rand20_diagram.cells)
    assert est.residual_norm < 1e-8
    assert not est.rank_deficient
    for i, pp in enumerate(est.per_polygon):
        assert distance(pp.position, rand20_diagram.generators.points[i]) < 1e-6


def test_lsq_near_collinear_warns():
    from vorinv.forward import Bounds, GeneratorSet
    eps = 1e-9
    pts = tuple(Point2(float(i), eps * (1 if i % 2 else -1)) for i in range(10))
    g = GeneratorSet(pts, Bounds(-1.0, -5e8, 10.0, 5e8))
    d = build_voronoi(g)
    est = invert_least_squares(d.tessellation, polygons=d.cells)
    assert est.rank_deficient or est.condition_number > 1e6
    assert est.warnings


def test_lsq_too_few_edges():
    t = quad_tessellation()
    with pytest.raises(TooFewEdges):
        invert_least_squares(t)


# ---------------------------------------------------------------- equivariance

def _transform(t, angle, shift):
    c, s = math.cos(angle), math.sin(angle)
    moved = tuple(Point2(c * p.x - s * p.y + shift[0], s * p.x + c * p.y + shift[1])
                  for p in t.vertices)
    return Tessellation(moved, t.n_ordinary, t.adjacency), (c, s)


@pytest.mark.parametrize("method", ALL_METHODS)
def test_equivariance(good10_diagram, method):
    t = good10_diagram.tessellation
    angle, shift = 0.7, (3.0, -2.0)
    t2, (c, s) = _transform(t, angle, shift)
    est1 = invert(t, method, polygons=good10_diagram.cells)
    est2 = invert(t2, method, polygons=good10_diagram.cells)
    for p1, p2 in zip(est1.per_polygon, est2.per_polygon):
        expected = Point2(c * p1.position.x - s * p1.position.y + shift[0],
                          s * p1.position.x + c * p1.position.y + shift[1])
        assert distance(p2.position, expected) < 1e-9


# ---------------------------------------------------------------- recognition

def test_recognize_accepts_exact(rand20_diagram):
    diag = rand20_diagram.generators.bounds.diagonal
    verdict = recognize_voronoi(rand20_diagram.tessellation, tolerance=1e-7 * diag)
    assert verdict.is_voronoi
    assert not verdict.failing_polygons
    assert max(verdict.per_polygon_spread) <= 1e-7 * diag


def test_recognize_rejects_perturbed(rand20_diagram):
    diag = rand20_diagram.generators.bounds.diagonal
    t = perturb_vertices(rand20_diagram.tessellation, 0.01 * diag, seed=2)
    verdict = recognize_voronoi(t, tolerance=1e-7 * diag)
    assert not verdict.is_voronoi
    assert verdict.failing_polygons


def test_recognize_honeycomb():
    d = build_voronoi(hex_lattice_generators(5, 5))
    diag = d.generators.bounds.diagonal
    verdict = recognize_voronoi(d.tessellation, tolerance=1e-7 * diag)
    assert verdict.is_voronoi


def test_recognize_degree_violation(square_diagram):
    with pytest.raises(DegenerateVertex):
        recognize_voronoi(square_diagram.tessellation, tolerance=1e-6)


def test_recognize_quadrilateral_degree_two():
    with pytest.raises(DegenerateVertex):
        recognize_voronoi(quad_tessellation(), tolerance=1e-6)


# ---------------------------------------------------------------- output

def test_estimates_csv_layout(rand10_diagram):
    est = invert_least_squares(rand10_diagram.tessellation, polygons=rand10_diagram.cells)
    text = estimates_csv([est])
    lines = text.strip().splitlines()
    assert lines[0] == "polygon,x,y,spread,method,n_pairs,n_dropped,error"
    assert len(lines) == 1 + len(rand10_diagram.cells)
    first = lines[1].split(",")
    assert first[0] == "0" and first[4] == "lsq" and first[7] == ""


def test_estimates_csv_error_rows(tri_diagram):
    est = invert_alg1(tri_diagram.tessellation, polygons=tri_diagram.cells,
                      on_error="record")
    text = estimates_csv([est])
    for line in text.strip().splitlines()[1:]:
        cols = line.split(",")
        assert cols[1] == "" and cols[7] == "InsufficientVertices"
