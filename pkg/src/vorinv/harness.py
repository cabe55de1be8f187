"""Round-trip pipeline and error metrology: invert, re-synthesize, compare.

`noise_sweep` runs the full experiment grid: build the forward diagram of a
generator set, perturb its vertices, recover generators with each method,
then score generator error against the known truth and vertex error between
the re-synthesized diagram and the original.  Rows are deterministic given
the seeds and ordered canonically by (sigma, seed, method).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .errors import VorinvError
from .forward import Bounds, DuplicateGenerators, GeneratorSet, VoronoiDiagram, build_voronoi
from .geom import Point2, distance
from .invert import DEFAULT_EPSILON, GeneratorEstimate, invert
from .tess import Tessellation, perturb_vertices

METHOD_ORDER = ("alg1", "alg2", "alg3", "lsq")


class DuplicateEstimates(VorinvError):
    pass


@dataclass
class ErrorReport:
    """One scored comparison; NaN marks values that could not be computed."""

    vertex_rms: float
    generator_rms: Optional[float]
    matched_fraction: float
    method: str
    sigma: float
    seed: int
    status: str = "ok"


def resynthesize(estimate: GeneratorEstimate, bounds: Bounds) -> VoronoiDiagram:
    """Forward diagram of the recovered generators."""
    positions = estimate.positions()
    if len(positions) < 2:
        raise VorinvError(f"only {len(positions)} recovered generators; need 2 to re-synthesize")
    for a in range(len(positions)):
        for b in range(a + 1, len(positions)):
            if distance(positions[a], positions[b]) <= 1e-9:
                raise DuplicateEstimates(
                    f"estimates {a} and {b} coincide at {positions[a]}; inversion collapsed")
    try:
        g = GeneratorSet(tuple(positions), bounds)
    except DuplicateGenerators as exc:  # pragma: no cover - caught above
        raise DuplicateEstimates(str(exc)) from exc
    return build_voronoi(g)


def _greedy_match(a_pts: np.ndarray, b_pts: np.ndarray, radius: float):
    """One-to-one nearest pairs within `radius`, greedily by ascending distance."""
    if len(a_pts) == 0 or len(b_pts) == 0:
        return []
    tree = cKDTree(b_pts)
    pairs = []
    for ia, p in enumerate(a_pts):
        for ib in tree.query_ball_point(p, radius):
            d = math.hypot(p[0] - b_pts[ib][0], p[1] - b_pts[ib][1])
            pairs.append((d, ia, ib))
    pairs.sort()
    used_a, used_b = set(), set()
    matched = []
    for d, ia, ib in pairs:
        if ia in used_a or ib in used_b:
            continue
        used_a.add(ia)
        used_b.add(ib)
        matched.append((d, ia, ib))
    return matched


def vertex_rms_error(a: Tessellation, b: Tessellation, match_radius: float,
                     method: str = "", sigma: float = 0.0, seed: int = 0) -> ErrorReport:
    """RMS distance between greedily matched ordinary vertices of a and b."""
    a_pts = np.array([[p.x, p.y] for p in a.vertices[:a.n_ordinary]], dtype=float)
    b_pts = np.array([[p.x, p.y] for p in b.vertices[:b.n_ordinary]], dtype=float)
    matched = _greedy_match(a_pts, b_pts, match_radius)
    denom = max(len(a_pts), len(b_pts))
    if not matched:
        return ErrorReport(vertex_rms=math.nan, generator_rms=None,
                           matched_fraction=0.0, method=method, sigma=sigma,
                           seed=seed, status="NoMatches")
    rms = math.sqrt(sum(d * d for d, _, _ in matched) / len(matched))
    return ErrorReport(vertex_rms=rms, generator_rms=None,
                       matched_fraction=len(matched) / denom if denom else 1.0,
                       method=method, sigma=sigma, seed=seed)


def generator_rms(estimate: GeneratorEstimate, truth: Sequence[Point2]) -> Tuple[float, int]:
    """RMS over recovered polygons against truth by polygon identity.

    Returns (rms, n_failed); rms is NaN when nothing was recovered.
    """
    total = 0.0
    count = 0
    failed = 0
    for pp in estimate.per_polygon:
        if pp.position is None:
            failed += 1
            continue
        d = distance(pp.position, truth[pp.polygon_index])
        total += d * d
        count += 1
    if count == 0:
        return math.nan, failed
    return math.sqrt(total / count), failed


def default_match_radius(sigma: float, bounds: Bounds) -> float:
    """5 sigma when noise is known, otherwise 1% of the bounding-box diagonal."""
    return 5.0 * sigma if sigma > 0.0 else 0.01 * bounds.diagonal


def noise_sweep(g: GeneratorSet, sigmas: Sequence[float], seeds: Sequence[int],
                methods: Sequence[str], epsilon: float = DEFAULT_EPSILON,
                match_radius: Optional[float] = None) -> List[ErrorReport]:
    """Perturb-invert-score grid over (sigma, seed, method), canonically ordered.

    Inversion failures never abort the sweep: per-polygon failures shrink the
    generator RMS sample and are flagged in `status`, and method-level errors
    produce a row whose status carries the error name.
    """
    if not sigmas or not seeds or not methods:
        raise VorinvError("sigmas, seeds and methods must be nonempty")
    diagram = build_voronoi(g)
    truth = g.points
    reports: List[ErrorReport] = []
    for sigma in sigmas:
        for seed in seeds:
            noisy = perturb_vertices(diagram.tessellation, sigma, seed)
            for method in methods:
                reports.append(_sweep_row(diagram, noisy, truth, method, sigma,
                                          seed, epsilon, match_radius))
    return reports


def _sweep_row(diagram, noisy, truth, method, sigma, seed, epsilon, match_radius):
    bounds = diagram.generators.bounds
    radius = match_radius if match_radius is not None else default_match_radius(sigma, bounds)
    try:
        est = invert(noisy, method, epsilon=epsilon, polygons=diagram.cells,
                     on_error="record")
    except VorinvError as exc:
        return ErrorReport(vertex_rms=math.nan, generator_rms=math.nan,
                           matched_fraction=0.0, method=method, sigma=sigma,
                           seed=seed, status=type(exc).__name__)
    rms, n_failed = generator_rms(est, truth)
    status = "ok" if n_failed == 0 else f"partial:{n_failed}"
    try:
        resynth = resynthesize(est, bounds)
        vreport = vertex_rms_error(diagram.tessellation, resynth.tessellation, radius)
        vertex_rms = vreport.vertex_rms
        matched = vreport.matched_fraction
        if vreport.status != "ok" and status == "ok":
            status = vreport.status
    except VorinvError as exc:
        vertex_rms = math.nan
        matched = 0.0
        status = f"{status};{type(exc).__name__}" if status != "ok" else type(exc).__name__
    return ErrorReport(vertex_rms=vertex_rms, generator_rms=rms,
                       matched_fraction=matched, method=method, sigma=sigma,
                       seed=seed, status=status)


@dataclass
class SingleVertexRow:
    """Error localization when one vertex is recorded grossly in error.

    A polygon is `affected` when the damaged vertex lies on it or neighbors
    one of its vertices; the ray methods read exactly that one-ring of
    positions, so unaffected polygons should come out clean (lsq couples all
    polygons and is exempt from that expectation).
    """

    seed: int
    method: str
    vertex: int
    displacement: float
    affected_max_error: float
    unaffected_max_error: float
    n_failed: int


def single_vertex_study(g: GeneratorSet, seeds: Sequence[int], methods: Sequence[str],
                        displacement: Optional[float] = None,
                        epsilon: float = DEFAULT_EPSILON) -> List[SingleVertexRow]:
    """Displace one random vertex far (default 0.1 diagonal) and localize the damage."""
    diagram = build_voronoi(g)
    t = diagram.tessellation
    if t.n_ordinary == 0:
        raise VorinvError("tessellation has no ordinary vertices")
    if displacement is None:
        displacement = 0.1 * g.bounds.diagonal
    rows: List[SingleVertexRow] = []
    one_ring = []
    for poly in diagram.cells:
        ring = set(poly.ordinary_indices(t))
        for u in tuple(ring):
            ring.update(t.adjacency[u])
        one_ring.append(ring)
    for seed in seeds:
        rng = np.random.default_rng(seed)
        v = int(rng.integers(t.n_ordinary))
        theta = float(rng.uniform(0.0, 2.0 * math.pi))
        moved = list(t.vertices)
        moved[v] = Point2(moved[v].x + displacement * math.cos(theta),
                          moved[v].y + displacement * math.sin(theta))
        noisy = Tessellation(tuple(moved), t.n_ordinary, t.adjacency)
        for method in methods:
            est = invert(noisy, method, epsilon=epsilon, polygons=diagram.cells,
                         on_error="record")
            affected_err, unaffected_err = 0.0, 0.0
            n_failed = 0
            for pp in est.per_polygon:
                if pp.position is None:
                    n_failed += 1
                    continue
                err = distance(pp.position, g.points[pp.polygon_index])
                if v in one_ring[pp.polygon_index]:
                    affected_err = max(affected_err, err)
                else:
                    unaffected_err = max(unaffected_err, err)
            rows.append(SingleVertexRow(seed=seed, method=method, vertex=v,
                                        displacement=displacement,
                                        affected_max_error=affected_err,
                                        unaffected_max_error=unaffected_err,
                                        n_failed=n_failed))
    return rows


def reports_csv(reports: Sequence[ErrorReport]) -> str:
    lines = ["sigma,seed,method,generator_rms,vertex_rms,matched_fraction,status"]
    for r in reports:
        gen = "" if r.generator_rms is None else repr(r.generator_rms)
        lines.append(f"{r.sigma!r},{r.seed},{r.method},{gen},"
                     f"{r.vertex_rms!r},{r.matched_fraction!r},{r.status}")
    return "\n".join(lines) + "\n"


def median_generator_rms(reports: Sequence[ErrorReport]) -> Dict[Tuple[float, str], float]:
    """Median generator RMS per (sigma, method) over rows with a finite value."""
    groups: Dict[Tuple[float, str], List[float]] = {}
    for r in reports:
        if r.generator_rms is not None and not math.isnan(r.generator_rms):
            groups.setdefault((r.sigma, r.method), []).append(r.generator_rms)
    return {key: float(np.median(vals)) for key, vals in sorted(groups.items())}


def median_summary(reports: Sequence[ErrorReport]) -> str:
    """Human-readable table of per-method median generator RMS by sigma."""
    medians = median_generator_rms(reports)
    sigmas = sorted({s for s, _ in medians})
    methods = [m for m in METHOD_ORDER if any(k[1] == m for k in medians)]
    methods += sorted({k[1] for k in medians} - set(methods))
    header = "sigma      " + "".join(f"{m:>14}" for m in methods)
    lines = [header]
    for s in sigmas:
        cells = "".join(
            f"{medians.get((s, m), math.nan):>14.6g}" for m in methods)
        lines.append(f"{s:<11.4g}{cells}")
    return "\n".join(lines) + "\n"
