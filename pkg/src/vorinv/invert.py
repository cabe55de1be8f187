"""Generator recovery from a tessellation, and the Voronoi recognition test.

The geometric route rests on one construction: at a degree-three vertex the
three incident edges split the plane into three sectors, and the half line
into a given sector that passes through that cell's generator makes an angle
of (pi - opposite sector) with the sector's boundary edges.  Rays from two or
more vertices of a polygon intersect at its generator when the tessellation
really is a Voronoi diagram:

  * alg1 intersects the rays of the first two usable vertices, falling back
    to further vertices when a pair is parallel;
  * alg2 averages the intersections of every usable ray pair;
  * alg3 weights each pair intersection by the inverse of its sensitivity to
    small ray rotations (sum of displacement norms under four +/-epsilon
    perturbations), which damps the wild intersections of ill-conditioned
    pairs;
  * lsq solves the global linear system expressing that neighboring
    generators straddle each shared edge: their difference is parallel to the
    edge normal and their midpoint lies on the edge line.

Pair intersections inside the three ray algorithms are taken on the rays'
supporting lines: on exact input every pair meets forward at the generator
anyway, while on noisy input ill-conditioned pairs land far away (possibly
behind an origin) and stay in the sample, which is precisely the instability
alg3's weights are designed to suppress.  Only genuinely parallel pairs
(unit-direction cross below 1e-12) yield nothing and are dropped.  The
recognition test keeps strict ray semantics: a backward "intersection" is
evidence against Voronoi-ness, not a candidate generator.

The recognition test builds one candidate generator per polygon edge from the
rays of its two endpoints; the tessellation is a Voronoi diagram exactly when
all candidates of every polygon coincide (up to the given tolerance).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import VorinvError
from .geom import PARALLEL_EPS, Point2, Ray, distance, ray_intersection
from .tess import Polygon, Tessellation, extract_polygons

DEFAULT_EPSILON = 1e-4  # radians, alg3 ray rotation
CONDITION_WARN = 1e8

_TWO_PI = 2.0 * math.pi


class DegenerateVertex(VorinvError):
    pass


class SectorAngleOverflow(VorinvError):
    pass


class InversionError(VorinvError):
    def __init__(self, polygon_index: int, message: str):
        super().__init__(message)
        self.polygon_index = polygon_index


class InsufficientVertices(InversionError):
    pass


class AllRaysParallel(InversionError):
    pass


class NoUsableIntersections(InversionError):
    pass


class TooFewEdges(VorinvError):
    pass


@dataclass(frozen=True)
class GeneratorRay:
    polygon_index: int
    vertex_index: int
    ray: Ray


@dataclass
class PolygonInversion:
    """Outcome and diagnostics for one polygon."""

    polygon_index: int
    position: Optional[Point2]
    spread: float = 0.0
    n_pairs: int = 0
    n_dropped: int = 0
    candidates: Tuple[Point2, ...] = ()
    weights: Tuple[float, ...] = ()
    line_fit: Optional[Point2] = None
    error: Optional[str] = None


@dataclass
class GeneratorEstimate:
    """Recovered generator positions plus per-polygon diagnostics."""

    method: str
    per_polygon: List[PolygonInversion]
    residual_norm: Optional[float] = None
    condition_number: Optional[float] = None
    rank_deficient: bool = False
    warnings: Tuple[str, ...] = ()

    def positions(self) -> List[Point2]:
        return [pp.position for pp in self.per_polygon if pp.position is not None]

    def position_of(self, polygon_index: int) -> Optional[Point2]:
        return self.per_polygon[polygon_index].position

    @property
    def n_failed(self) -> int:
        return sum(1 for pp in self.per_polygon if pp.position is None)


@dataclass(frozen=True)
class RecognitionVerdict:
    is_voronoi: bool
    per_polygon_spread: Tuple[float, ...]
    tolerance_used: float
    failing_polygons: Tuple[int, ...]
    reasons: Dict[int, str] = field(default_factory=dict)


def _ray_at_position(t: Tessellation, polygon: Polygon, k: int,
                     polygon_index: int = -1) -> GeneratorRay:
    """Generator ray at polygon position k (must hold an ordinary vertex)."""
    idx = polygon.vertex_indices
    vi = idx[k]
    if t.is_dummy(vi):
        raise DegenerateVertex(f"vertex {vi} is a dummy vertex")
    adj = t.adjacency[vi]
    if len(adj) != 3:
        raise DegenerateVertex(f"vertex {vi} has degree {len(adj)}, need 3")
    if polygon.is_unbounded and (k == 0 or k == len(idx) - 1):
        raise DegenerateVertex(f"chain endpoint {vi} has no sector in this polygon")
    prev_i = idx[(k - 1) % len(idx)]
    next_i = idx[(k + 1) % len(idx)]
    a0, a1, a2 = adj
    if prev_i == next_i or prev_i not in adj or next_i not in adj:
        raise DegenerateVertex(
            f"vertex {vi}: polygon neighbors {prev_i},{next_i} not two distinct edges of {adj}")
    if a0 != prev_i and a0 != next_i:
        w_i = a0
    elif a1 != prev_i and a1 != next_i:
        w_i = a1
    else:
        w_i = a2
    q = t.vertices[vi]
    ang_u = math.atan2(t.vertices[next_i].y - q.y, t.vertices[next_i].x - q.x)
    ang_v = math.atan2(t.vertices[prev_i].y - q.y, t.vertices[prev_i].x - q.x)
    ang_w = math.atan2(t.vertices[w_i].y - q.y, t.vertices[w_i].x - q.x)
    sector = (ang_v - ang_u) % _TWO_PI
    opposite = (ang_w - ang_v) % _TWO_PI
    alpha = math.pi - opposite
    if not (0.0 < alpha < sector):
        raise SectorAngleOverflow(
            f"vertex {vi}: ray angle {alpha:.6g} outside sector {sector:.6g}")
    return GeneratorRay(polygon_index, vi, Ray.from_angle(q, ang_u + alpha))


def generator_ray(t: Tessellation, polygon: Polygon, vertex_index: int,
                  polygon_index: int = -1) -> GeneratorRay:
    """Ray from a degree-three vertex through the generator of `polygon`."""
    try:
        k = polygon.vertex_indices.index(vertex_index)
    except ValueError:
        raise VorinvError(f"vertex {vertex_index} not on polygon") from None
    return _ray_at_position(t, polygon, k, polygon_index)


def polygon_rays(t: Tessellation, polygon: Polygon,
                 polygon_index: int = -1) -> Tuple[List[GeneratorRay], List[Tuple[int, str]]]:
    """Usable generator rays in traversal order, plus (vertex, reason) skips."""
    idx = polygon.vertex_indices
    if polygon.is_unbounded:
        positions = range(1, len(idx) - 1)
    else:
        positions = range(len(idx))
    rays: List[GeneratorRay] = []
    skipped: List[Tuple[int, str]] = []
    for k in positions:
        if t.is_dummy(idx[k]):
            skipped.append((idx[k], "DummyVertex"))
            continue
        try:
            rays.append(_ray_at_position(t, polygon, k, polygon_index))
        except (DegenerateVertex, SectorAngleOverflow) as exc:
            skipped.append((idx[k], type(exc).__name__))
    return rays, skipped


def pair_intersection(r1: Ray, r2: Ray) -> Optional[Point2]:
    """Intersection of the supporting lines of two rays; None when parallel.

    This is the pair semantics of the three ray algorithms (see the module
    docstring); unlike `geom.ray_intersection` it keeps points behind the
    ray origins.
    """
    d1x, d1y = r1.direction
    d2x, d2y = r2.direction
    denom = d1x * d2y - d1y * d2x
    if abs(denom) < PARALLEL_EPS:
        return None
    ox = r2.origin.x - r1.origin.x
    oy = r2.origin.y - r1.origin.y
    t1 = (ox * d2y - oy * d2x) / denom
    return Point2(r1.origin.x + t1 * d1x, r1.origin.y + t1 * d1y)


def _line_fit(rays: Sequence[GeneratorRay]) -> Optional[Point2]:
    """Point minimizing the sum of squared perpendicular distances to the ray lines."""
    m00 = m01 = m11 = b0 = b1 = 0.0
    for gr in rays:
        dx, dy = gr.ray.direction
        nx, ny = -dy, dx
        o = gr.ray.origin
        no = nx * o.x + ny * o.y
        m00 += nx * nx
        m01 += nx * ny
        m11 += ny * ny
        b0 += nx * no
        b1 += ny * no
    det = m00 * m11 - m01 * m01
    if abs(det) < 1e-14:
        return None
    return Point2((m11 * b0 - m01 * b1) / det, (m00 * b1 - m01 * b0) / det)


def _spread(candidates: Sequence[Point2]) -> float:
    best = 0.0
    for a in range(len(candidates)):
        for b in range(a + 1, len(candidates)):
            d = distance(candidates[a], candidates[b])
            if d > best:
                best = d
    return best


def _alg1_polygon(t, poly, pi) -> PolygonInversion:
    # rays are built lazily: the usual case needs only the first two vertices
    idx = poly.vertex_indices
    positions = range(1, len(idx) - 1) if poly.is_unbounded else range(len(idx))
    rays: List[GeneratorRay] = []
    dropped = 0
    for k in positions:
        if t.is_dummy(idx[k]):
            continue
        try:
            new = _ray_at_position(t, poly, k, pi)
        except (DegenerateVertex, SectorAngleOverflow):
            continue
        for prior in rays:
            hit = pair_intersection(prior.ray, new.ray)
            if hit is not None:
                return PolygonInversion(pi, hit, spread=0.0, n_pairs=1,
                                        n_dropped=dropped, candidates=(hit,))
            dropped += 1
        rays.append(new)
    if len(rays) < 2:
        raise InsufficientVertices(pi, f"polygon {pi} has {len(rays)} usable vertices, need 2")
    raise AllRaysParallel(pi, f"polygon {pi}: no usable ray pair among {len(rays)} rays")


def _alg2_polygon(t, poly, pi) -> PolygonInversion:
    rays, _ = polygon_rays(t, poly, pi)
    if len(rays) < 2:
        raise InsufficientVertices(pi, f"polygon {pi} has {len(rays)} usable vertices, need 2")
    candidates: List[Point2] = []
    dropped = 0
    for i in range(len(rays)):
        for j in range(i + 1, len(rays)):
            hit = pair_intersection(rays[i].ray, rays[j].ray)
            if hit is None:
                dropped += 1
            else:
                candidates.append(hit)
    if not candidates:
        raise NoUsableIntersections(pi, f"polygon {pi}: every ray pair parallel")
    x = sum(p.x for p in candidates) / len(candidates)
    y = sum(p.y for p in candidates) / len(candidates)
    return PolygonInversion(pi, Point2(x, y), spread=_spread(candidates),
                            n_pairs=len(candidates), n_dropped=dropped,
                            candidates=tuple(candidates), line_fit=_line_fit(rays))


def _alg3_polygon(t, poly, pi, epsilon: float) -> PolygonInversion:
    rays, _ = polygon_rays(t, poly, pi)
    if len(rays) < 2:
        raise InsufficientVertices(pi, f"polygon {pi} has {len(rays)} usable vertices, need 2")
    entries: List[Tuple[Point2, float]] = []
    dropped = 0
    for i in range(len(rays)):
        for j in range(i + 1, len(rays)):
            r1, r2 = rays[i].ray, rays[j].ray
            base = pair_intersection(r1, r2)
            if base is None:
                dropped += 1
                continue
            delta = 0.0
            ok = True
            for ra, rb in ((r1.rotated(epsilon), r2), (r1.rotated(-epsilon), r2),
                           (r1, r2.rotated(epsilon)), (r1, r2.rotated(-epsilon))):
                moved = pair_intersection(ra, rb)
                if moved is None:
                    ok = False
                    break
                delta += distance(base, moved)
            if not ok:
                dropped += 1
                continue
            entries.append((base, delta))
    if not entries:
        raise NoUsableIntersections(pi, f"polygon {pi}: no stable ray pair")
    zeros = [e for e in entries if e[1] == 0.0]
    if zeros:
        weights = [1.0 / len(zeros) if e[1] == 0.0 else 0.0 for e in entries]
    else:
        inv = [1.0 / e[1] for e in entries]
        total = sum(inv)
        weights = [v / total for v in inv]
    x = sum(w * e[0].x for w, e in zip(weights, entries))
    y = sum(w * e[0].y for w, e in zip(weights, entries))
    candidates = tuple(e[0] for e in entries)
    return PolygonInversion(pi, Point2(x, y), spread=_spread(candidates),
                            n_pairs=len(entries), n_dropped=dropped,
                            candidates=candidates, weights=tuple(weights),
                            line_fit=_line_fit(rays))


def _run_per_polygon(t, polygons, method, worker, on_error) -> GeneratorEstimate:
    per: List[PolygonInversion] = []
    for pi, poly in enumerate(polygons):
        try:
            per.append(worker(t, poly, pi))
        except InversionError as exc:
            if on_error == "raise":
                raise
            per.append(PolygonInversion(pi, None, error=type(exc).__name__))
    return GeneratorEstimate(method=method, per_polygon=per)


def invert_alg1(t: Tessellation, polygons: Optional[Sequence[Polygon]] = None,
                on_error: str = "raise") -> GeneratorEstimate:
    """One generator per polygon from the rays of its first two usable vertices."""
    polys = list(polygons) if polygons is not None else extract_polygons(t)
    return _run_per_polygon(t, polys, "alg1", _alg1_polygon, on_error)


def invert_alg2(t: Tessellation, polygons: Optional[Sequence[Polygon]] = None,
                on_error: str = "raise") -> GeneratorEstimate:
    """Unweighted mean of all pairwise ray intersections per polygon."""
    polys = list(polygons) if polygons is not None else extract_polygons(t)
    return _run_per_polygon(t, polys, "alg2", _alg2_polygon, on_error)


def invert_alg3(t: Tessellation, epsilon: float = DEFAULT_EPSILON,
                polygons: Optional[Sequence[Polygon]] = None,
                on_error: str = "raise") -> GeneratorEstimate:
    """Stability-weighted mean of pairwise ray intersections per polygon."""
    if epsilon <= 0.0:
        raise VorinvError(f"epsilon must be > 0, got {epsilon}")
    polys = list(polygons) if polygons is not None else extract_polygons(t)
    return _run_per_polygon(
        t, polys, "alg3", lambda tt, poly, pi: _alg3_polygon(tt, poly, pi, epsilon), on_error)


def build_bisector_system(t: Tessellation, polygons: Sequence[Polygon]):
    """Linear system over generator coordinates from the shared-edge conditions.

    Per interior edge with endpoints s, t between polygons k and l, two rows:
    perpendicularity (x_k - x_l)(s1 - t1) + (y_k - y_l)(s2 - t2) = 0, and the
    generator midpoint on the edge line in division-free form.  Returns
    (A, rhs, edges) with edges as (vertex_a, vertex_b, face_k, face_l).
    """
    edge_faces: Dict[Tuple[int, int], List[int]] = {}
    for fi, poly in enumerate(polygons):
        idx = poly.vertex_indices
        m = len(idx)
        rng = range(m - 1) if poly.is_unbounded else range(m)
        for k in rng:
            a, b = idx[k], idx[(k + 1) % m]
            edge_faces.setdefault((min(a, b), max(a, b)), []).append(fi)
    edges = [(a, b, faces[0], faces[1])
             for (a, b), faces in sorted(edge_faces.items()) if len(faces) == 2]
    n = len(polygons)
    A = np.zeros((2 * len(edges), 2 * n))
    rhs = np.zeros(2 * len(edges))
    for row, (a, b, k, l) in enumerate(edges):
        s, tv = t.vertices[a], t.vertices[b]
        d1, d2 = s.x - tv.x, s.y - tv.y
        r0 = 2 * row
        A[r0, 2 * k] = d1
        A[r0, 2 * k + 1] = d2
        A[r0, 2 * l] = -d1
        A[r0, 2 * l + 1] = -d2
        r1 = r0 + 1
        A[r1, 2 * k] = 0.5 * d2
        A[r1, 2 * l] = 0.5 * d2
        A[r1, 2 * k + 1] = -0.5 * d1
        A[r1, 2 * l + 1] = -0.5 * d1
        rhs[r1] = tv.x * d2 - tv.y * d1
    return A, rhs, edges


def invert_least_squares(t: Tessellation,
                         polygons: Optional[Sequence[Polygon]] = None,
                         on_error: str = "raise") -> GeneratorEstimate:
    """Minimum-norm least-squares solution of the shared-edge conditions.

    Rank deficiency and severe ill-conditioning are reported in the estimate
    (rank_deficient flag, condition_number, warnings) rather than silently
    regularized away.
    """
    polys = list(polygons) if polygons is not None else extract_polygons(t)
    n = len(polys)
    A, rhs, edges = build_bisector_system(t, polys)
    if len(edges) < n:
        raise TooFewEdges(f"{len(edges)} interior edges cannot constrain {n} polygons")
    touched = {f for e in edges for f in (e[2], e[3])}
    missing = sorted(set(range(n)) - touched)
    if missing:
        raise TooFewEdges(f"polygons {missing} border no interior edge")
    solution, _, rank, sv = np.linalg.lstsq(A, rhs, rcond=None)
    residual = float(np.linalg.norm(A @ solution - rhs))
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
    rank_deficient = bool(rank < 2 * n)
    warnings = []
    if rank_deficient:
        warnings.append(
            f"RankDeficient: rank {rank} < {2 * n}; returning the minimum-norm solution")
    if cond > CONDITION_WARN:
        warnings.append(f"ill-conditioned system: condition number {cond:.3g}")
    edge_count = [0] * n
    for e in edges:
        edge_count[e[2]] += 1
        edge_count[e[3]] += 1
    per = [PolygonInversion(pi, Point2(float(solution[2 * pi]), float(solution[2 * pi + 1])),
                            n_pairs=edge_count[pi])
           for pi in range(n)]
    return GeneratorEstimate(method="lsq", per_polygon=per, residual_norm=residual,
                             condition_number=cond, rank_deficient=rank_deficient,
                             warnings=tuple(warnings))


METHODS = {
    "alg1": invert_alg1,
    "alg2": invert_alg2,
    "alg3": invert_alg3,
    "lsq": invert_least_squares,
}


def invert(t: Tessellation, method: str, epsilon: float = DEFAULT_EPSILON,
           polygons: Optional[Sequence[Polygon]] = None,
           on_error: str = "raise") -> GeneratorEstimate:
    """Dispatch to one of alg1, alg2, alg3, lsq."""
    if method not in METHODS:
        raise VorinvError(f"unknown method {method!r}; choose from {sorted(METHODS)}")
    if method == "alg3":
        return invert_alg3(t, epsilon=epsilon, polygons=polygons, on_error=on_error)
    return METHODS[method](t, polygons=polygons, on_error=on_error)


def recognize_voronoi(t: Tessellation, tolerance: float) -> RecognitionVerdict:
    """Decide whether the tessellation is a Voronoi diagram.

    Per polygon, one candidate generator is built for every edge joining two
    ordinary vertices (the intersection of the two endpoint rays); the
    polygon passes when the largest pairwise distance among its candidates is
    within `tolerance`.  Non-convex polygons and polygons whose rays cannot
    be built or fail to meet are definite failures (a Voronoi cell is convex
    and its rays meet at the generator); their spread is reported as inf.
    Ordinary vertices with degree other than three raise DegenerateVertex.
    """
    if tolerance < 0.0:
        raise VorinvError(f"tolerance must be >= 0, got {tolerance}")
    bad_degree = [v for v in range(t.n_ordinary) if len(t.adjacency[v]) != 3]
    if bad_degree:
        raise DegenerateVertex(f"vertices {bad_degree} do not have degree 3")
    polys = extract_polygons(t)
    spreads: List[float] = []
    failing: List[int] = []
    reasons: Dict[int, str] = {}
    for pi, poly in enumerate(polys):
        reason = _convexity_violation(t, poly)
        candidates: List[Point2] = []
        if reason is None:
            idx = poly.vertex_indices
            m = len(idx)
            rng = range(1, m - 2) if poly.is_unbounded else range(m)
            for k in rng:
                k2 = (k + 1) % m
                try:
                    ra = _ray_at_position(t, poly, k, pi)
                    rb = _ray_at_position(t, poly, k2, pi)
                except (DegenerateVertex, SectorAngleOverflow) as exc:
                    reason = type(exc).__name__
                    break
                hit = ray_intersection(ra.ray, rb.ray)
                if hit is None:
                    reason = "NoIntersection"
                    break
                candidates.append(hit)
        if reason is not None:
            spreads.append(math.inf)
            failing.append(pi)
            reasons[pi] = reason
            continue
        spread = _spread(candidates)
        spreads.append(spread)
        if spread > tolerance:
            failing.append(pi)
            reasons[pi] = "CandidateSpread"
    return RecognitionVerdict(
        is_voronoi=not failing,
        per_polygon_spread=tuple(spreads),
        tolerance_used=tolerance,
        failing_polygons=tuple(failing),
        reasons=reasons,
    )


def _convexity_violation(t: Tessellation, poly: Polygon) -> Optional[str]:
    idx = poly.vertex_indices
    m = len(idx)
    centers = range(1, m - 1) if poly.is_unbounded else range(m)
    for k in centers:
        a = t.vertices[idx[(k - 1) % m]]
        b = t.vertices[idx[k]]
        c = t.vertices[idx[(k + 1) % m]]
        ux, uy = b.x - a.x, b.y - a.y
        vx, vy = c.x - b.x, c.y - b.y
        norm = math.hypot(ux, uy) * math.hypot(vx, vy)
        if norm == 0.0:
            return "NonConvexPolygon"
        if (ux * vy - uy * vx) / norm < -1e-12:
            return "NonConvexPolygon"
    return None


def estimates_csv(estimates: Sequence[GeneratorEstimate]) -> str:
    """CSV of per-polygon estimates; failed polygons keep a row with the error."""
    lines = ["polygon,x,y,spread,method,n_pairs,n_dropped,error"]
    for est in estimates:
        for pp in est.per_polygon:
            if pp.position is None:
                lines.append(f"{pp.polygon_index},,,{pp.spread!r},{est.method},"
                             f"{pp.n_pairs},{pp.n_dropped},{pp.error}")
            else:
                lines.append(f"{pp.polygon_index},{pp.position.x!r},{pp.position.y!r},"
                             f"{pp.spread!r},{est.method},{pp.n_pairs},{pp.n_dropped},")
    return "\n".join(lines) + "\n"
