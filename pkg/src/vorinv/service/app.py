"""FastAPI application wrapping the core package.

Every route is a thin adapter: parse text payloads with the library parsers,
call the corresponding operation, serialize the result.  Library errors map
to HTTP 422 with a category the CLI translates into exit codes: "input" for
malformed payloads/preconditions, "inversion" for failures of the recovery
algorithms on valid input.
"""

from __future__ import annotations

import csv
import io
import math
from typing import List, Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import InputError, VorinvError
from ..forward import (
    Bounds,
    GeneratorSet,
    build_voronoi,
    grid_growth_labels,
    hex_lattice_generators,
    jittered_hex_generators,
    parse_generators,
    random_generators,
    serialize_generators,
    serialize_grid_labels,
)
from ..geom import Point2
from ..harness import (
    default_match_radius,
    median_summary,
    noise_sweep,
    reports_csv,
    resynthesize,
    single_vertex_study,
    vertex_rms_error,
    ErrorReport,
)
from ..invert import (
    METHODS,
    DegenerateVertex,
    GeneratorEstimate,
    InversionError,
    TooFewEdges,
    estimates_csv,
    invert,
    recognize_voronoi,
)
from ..render import render_svg
from ..tess import Tessellation, parse_tessellation, perturb_vertices, serialize_tessellation
from . import models

_INVERSION_ERRORS = (InversionError, TooFewEdges)


def _method_list(methods: List[str]) -> List[str]:
    expanded: List[str] = []
    for m in methods:
        if m == "all":
            expanded.extend(k for k in ("alg1", "alg2", "alg3", "lsq") if k not in expanded)
        elif m in METHODS:
            if m not in expanded:
                expanded.append(m)
        else:
            raise InputError(f"unknown method {m!r}; choose from alg1, alg2, alg3, lsq, all")
    if not expanded:
        raise InputError("no inversion method selected")
    return expanded


def _vertex_bbox_bounds(t: Tessellation) -> Bounds:
    xs = [p.x for p in t.vertices]
    ys = [p.y for p in t.vertices]
    span = max(max(xs) - min(xs), max(ys) - min(ys), 1e-9)
    pad = 0.05 * span
    return Bounds(min(xs) - pad, min(ys) - pad, max(xs) + pad, max(ys) + pad)


def _estimate_model(est: GeneratorEstimate) -> models.MethodEstimateModel:
    rows = [models.PolygonEstimateModel(
        polygon=pp.polygon_index,
        x=None if pp.position is None else pp.position.x,
        y=None if pp.position is None else pp.position.y,
        spread=pp.spread, n_pairs=pp.n_pairs, n_dropped=pp.n_dropped,
        error=pp.error) for pp in est.per_polygon]
    return models.MethodEstimateModel(
        method=est.method, estimates=rows, warnings=list(est.warnings),
        residual_norm=est.residual_norm, condition_number=est.condition_number,
        rank_deficient=est.rank_deficient, n_failed=est.n_failed)


def create_app() -> FastAPI:
    app = FastAPI(title="vorinv service", version=__version__)

    @app.exception_handler(VorinvError)
    async def vorinv_error_handler(request: Request, exc: VorinvError):
        if isinstance(exc, _INVERSION_ERRORS):
            category = "inversion"
        elif isinstance(exc, (InputError, DegenerateVertex)):
            category = "input"
        else:
            category = "input"
        detail = models.ErrorDetail(error=type(exc).__name__, category=category,
                                    message=str(exc))
        return JSONResponse(status_code=422, content=detail.model_dump())

    @app.get("/health", response_model=models.HealthResponse)
    def health() -> models.HealthResponse:
        return models.HealthResponse(version=__version__)

    @app.post("/generate", response_model=models.GenerateResponse)
    def generate(req: models.GenerateRequest) -> models.GenerateResponse:
        if req.lattice == "hex":
            if req.jitter > 0.0:
                g = jittered_hex_generators(req.rows, req.cols, req.jitter,
                                            seed=req.seed, spacing=req.spacing)
            else:
                g = hex_lattice_generators(req.rows, req.cols, req.spacing)
        elif req.lattice is not None:
            raise InputError(f"unknown lattice {req.lattice!r}; only 'hex' is supported")
        else:
            if req.n is None or req.n < 2:
                raise InputError("random placement needs n >= 2")
            bounds = Bounds(*req.bounds) if req.bounds else None
            g = random_generators(req.n, seed=req.seed, bounds=bounds)
        d = build_voronoi(g)
        return models.GenerateResponse(
            generators=serialize_generators(g),
            tessellation=serialize_tessellation(d.tessellation))

    @app.post("/invert", response_model=models.InvertResponse)
    def invert_endpoint(req: models.InvertRequest) -> models.InvertResponse:
        t = parse_tessellation(req.tessellation)
        out: List[models.MethodEstimateModel] = []
        ests: List[GeneratorEstimate] = []
        any_failed = False
        for method in _method_list(req.methods):
            try:
                est = invert(t, method, epsilon=req.epsilon, on_error="record")
            except VorinvError as exc:
                out.append(models.MethodEstimateModel(
                    method=method, error=type(exc).__name__,
                    warnings=[str(exc)]))
                any_failed = True
                continue
            ests.append(est)
            out.append(_estimate_model(est))
            if est.n_failed:
                any_failed = True
        return models.InvertResponse(csv=estimates_csv(ests), methods=out,
                                     any_failed=any_failed)

    @app.post("/check", response_model=models.CheckResponse)
    def check(req: models.CheckRequest) -> models.CheckResponse:
        t = parse_tessellation(req.tessellation)
        tolerance = req.tolerance
        if tolerance is None:
            tolerance = 1e-7 * _vertex_bbox_bounds(t).diagonal
        verdict = recognize_voronoi(t, tolerance)
        lines = [f"is_voronoi: {str(verdict.is_voronoi).lower()}",
                 f"tolerance: {tolerance!r}",
                 f"polygons: {len(verdict.per_polygon_spread)}"]
        for pi in verdict.failing_polygons:
            spread = verdict.per_polygon_spread[pi]
            lines.append(f"fail polygon {pi}: {verdict.reasons.get(pi, '')} spread={spread!r}")
        return models.CheckResponse(
            is_voronoi=verdict.is_voronoi, tolerance_used=verdict.tolerance_used,
            per_polygon_spread=list(verdict.per_polygon_spread),
            failing_polygons=list(verdict.failing_polygons),
            reasons=dict(verdict.reasons), report="\n".join(lines) + "\n")

    @app.post("/roundtrip", response_model=models.RoundtripResponse)
    def roundtrip(req: models.RoundtripRequest) -> models.RoundtripResponse:
        t = parse_tessellation(req.tessellation)
        truth: Optional[GeneratorSet] = None
        if req.generators:
            truth = parse_generators(req.generators)
        bounds = truth.bounds if truth is not None else _vertex_bbox_bounds(t)
        sigmas = req.sigmas or [0.0]
        seeds = req.seeds or [0]
        methods = _method_list(req.methods)
        rows: List[ErrorReport] = []
        any_failed = False
        for sigma in sigmas:
            for seed in seeds:
                observed = perturb_vertices(t, sigma, seed) if sigma > 0.0 else t
                radius = req.match_radius
                if radius is None:
                    radius = default_match_radius(sigma, bounds)
                for method in methods:
                    row = _roundtrip_row(observed, truth, bounds, method,
                                         req.epsilon, sigma, seed, radius)
                    rows.append(row)
                    if row.status != "ok":
                        any_failed = True
        return models.RoundtripResponse(csv=reports_csv(rows),
                                        summary=median_summary(rows),
                                        any_failed=any_failed)

    @app.post("/sweep", response_model=models.SweepResponse)
    def sweep(req: models.SweepRequest) -> models.SweepResponse:
        g = parse_generators(req.generators)
        methods = _method_list(req.methods)
        if req.single_vertex:
            rows = single_vertex_study(g, seeds=req.seeds, methods=methods,
                                       displacement=req.displacement,
                                       epsilon=req.epsilon)
            lines = ["seed,method,vertex,displacement,affected_max_error,"
                     "unaffected_max_error,n_failed"]
            for r in rows:
                lines.append(f"{r.seed},{r.method},{r.vertex},{r.displacement!r},"
                             f"{r.affected_max_error!r},{r.unaffected_max_error!r},"
                             f"{r.n_failed}")
            worst = max((r.affected_max_error for r in rows), default=0.0)
            summary = (f"single-vertex study: {len(rows)} rows, "
                       f"worst affected error {worst!r}\n")
            return models.SweepResponse(csv="\n".join(lines) + "\n", summary=summary)
        reports = noise_sweep(g, sigmas=req.sigmas, seeds=req.seeds, methods=methods,
                              epsilon=req.epsilon, match_radius=req.match_radius)
        return models.SweepResponse(csv=reports_csv(reports),
                                    summary=median_summary(reports))

    @app.post("/render", response_model=models.RenderResponse)
    def render(req: models.RenderRequest) -> models.RenderResponse:
        t = parse_tessellation(req.tessellation)
        generators = None
        if req.generators:
            generators = list(parse_generators(req.generators).points)
        estimates = None
        if req.estimates_csv:
            estimates = _positions_from_csv(req.estimates_csv)
        svg = render_svg(t, generators=generators, estimates=estimates,
                         show_circles=req.circles, size=req.size)
        return models.RenderResponse(svg=svg)

    @app.post("/grid", response_model=models.GridResponse)
    def grid(req: models.GridRequest) -> models.GridResponse:
        g = parse_generators(req.generators)
        labels = grid_growth_labels(g, req.resolution)
        return models.GridResponse(labels=serialize_grid_labels(labels))

    return app


def _roundtrip_row(observed: Tessellation, truth: Optional[GeneratorSet],
                   bounds: Bounds, method: str, epsilon: float,
                   sigma: float, seed: int, radius: float) -> ErrorReport:
    try:
        est = invert(observed, method, epsilon=epsilon, on_error="record")
    except VorinvError as exc:
        return ErrorReport(vertex_rms=math.nan, generator_rms=math.nan,
                           matched_fraction=0.0, method=method, sigma=sigma,
                           seed=seed, status=type(exc).__name__)
    status = "ok" if est.n_failed == 0 else f"partial:{est.n_failed}"
    gen_rms: Optional[float] = None
    if truth is not None:
        gen_rms = _matched_generator_rms(est, truth, radius)
    try:
        resynth = resynthesize(est, bounds)
        vrep = vertex_rms_error(observed, resynth.tessellation, radius)
        vertex_rms = vrep.vertex_rms
        matched = vrep.matched_fraction
        if vrep.status != "ok" and status == "ok":
            status = vrep.status
    except VorinvError as exc:
        vertex_rms = math.nan
        matched = 0.0
        status = type(exc).__name__ if status == "ok" else f"{status};{type(exc).__name__}"
    return ErrorReport(vertex_rms=vertex_rms, generator_rms=gen_rms,
                       matched_fraction=matched, method=method, sigma=sigma,
                       seed=seed, status=status)


def _matched_generator_rms(est: GeneratorEstimate, truth: GeneratorSet,
                           radius: float) -> float:
    """Greedy one-to-one match of estimates to ground-truth generators.

    External ground truth carries no polygon correspondence, so the match is
    spatial (same rule as vertex matching).
    """
    positions = est.positions()
    if not positions:
        return math.nan
    pairs = []
    for i, p in enumerate(positions):
        for j, q in enumerate(truth.points):
            d = math.hypot(p.x - q.x, p.y - q.y)
            pairs.append((d, i, j))
    pairs.sort()
    used_p, used_q = set(), set()
    acc = []
    for d, i, j in pairs:
        if i in used_p or j in used_q:
            continue
        used_p.add(i)
        used_q.add(j)
        acc.append(d * d)
    if not acc:
        return math.nan
    return math.sqrt(sum(acc) / len(acc))


def _positions_from_csv(text: str) -> List[Point2]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or "x" not in reader.fieldnames:
        raise InputError("estimates CSV needs a header with x,y columns")
    out = []
    for row in reader:
        if row.get("x") and row.get("y"):
            out.append(Point2(float(row["x"]), float(row["y"])))
    return out
