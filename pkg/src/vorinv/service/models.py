"""Request/response models for the HTTP service.

File payloads travel as text in the formats the core package defines
(tessellation files, generator files, CSV reports, SVG).
"""

from __future__ import annotations

from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str


class GenerateRequest(BaseModel):
    seed: int = 0
    n: Optional[int] = None
    lattice: Optional[str] = Field(default=None, description="'hex' for a triangular lattice")
    rows: int = 4
    cols: int = 4
    spacing: float = 1.0
    jitter: float = 0.0
    bounds: Optional[Tuple[float, float, float, float]] = None


class GenerateResponse(BaseModel):
    generators: str
    tessellation: str


class PolygonEstimateModel(BaseModel):
    polygon: int
    x: Optional[float] = None
    y: Optional[float] = None
    spread: float = 0.0
    n_pairs: int = 0
    n_dropped: int = 0
    error: Optional[str] = None


class MethodEstimateModel(BaseModel):
    method: str
    estimates: List[PolygonEstimateModel] = []
    warnings: List[str] = []
    residual_norm: Optional[float] = None
    condition_number: Optional[float] = None
    rank_deficient: bool = False
    error: Optional[str] = None
    n_failed: int = 0


class InvertRequest(BaseModel):
    tessellation: str
    methods: List[str] = ["alg1"]
    epsilon: float = 1e-4


class InvertResponse(BaseModel):
    csv: str
    methods: List[MethodEstimateModel]
    any_failed: bool


class CheckRequest(BaseModel):
    tessellation: str
    tolerance: Optional[float] = Field(
        default=None, description="defaults to 1e-7 * vertex bounding-box diagonal")


class CheckResponse(BaseModel):
    is_voronoi: bool
    tolerance_used: float
    per_polygon_spread: List[float]
    failing_polygons: List[int]
    reasons: Dict[int, str]
    report: str


class RoundtripRequest(BaseModel):
    tessellation: str
    generators: Optional[str] = None
    methods: List[str] = ["alg1"]
    epsilon: float = 1e-4
    sigmas: List[float] = []
    seeds: List[int] = []
    match_radius: Optional[float] = None


class RoundtripResponse(BaseModel):
    csv: str
    summary: str
    any_failed: bool


class SweepRequest(BaseModel):
    generators: str
    sigmas: List[float] = [0.0]
    seeds: List[int] = [0]
    methods: List[str] = ["alg1"]
    epsilon: float = 1e-4
    match_radius: Optional[float] = None
    single_vertex: bool = False
    displacement: Optional[float] = None


class SweepResponse(BaseModel):
    csv: str
    summary: str


class RenderRequest(BaseModel):
    tessellation: str
    generators: Optional[str] = None
    estimates_csv: Optional[str] = None
    circles: bool = False
    size: int = 640


class RenderResponse(BaseModel):
    svg: str


class GridRequest(BaseModel):
    generators: str
    resolution: int = 64


class GridResponse(BaseModel):
    labels: str


class ErrorDetail(BaseModel):
    error: str
    category: str
    message: str
