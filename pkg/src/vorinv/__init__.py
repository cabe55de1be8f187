"""Planar Voronoi construction, tessellation inversion, and recognition."""

from .errors import InputError, VorinvError
from .geom import Circle, Point2, Ray, Segment
from .tess import Polygon, Tessellation, parse_tessellation, serialize_tessellation
from .forward import (
    Bounds,
    GeneratorSet,
    VoronoiDiagram,
    build_voronoi,
    grid_growth_labels,
)

__version__ = "0.1.0"

__all__ = [
    "Bounds",
    "Circle",
    "GeneratorSet",
    "InputError",
    "Point2",
    "Polygon",
    "Ray",
    "Segment",
    "Tessellation",
    "VoronoiDiagram",
    "VorinvError",
    "build_voronoi",
    "grid_growth_labels",
    "parse_tessellation",
    "serialize_tessellation",
    "__version__",
]
