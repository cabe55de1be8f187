"""Deterministic SVG rendering of tessellations, generators, and estimates.

Output contains no timestamps or random identifiers: identical inputs give
byte-identical SVG.  Coordinates are emitted y-flipped so the scene's +y
points up on screen.
"""

from __future__ import annotations

from typing import Optional, Sequence

from .errors import VorinvError
from .forward import Bounds
from .geom import Point2, distance
from .tess import Tessellation

_STYLE = (
    "  <style>\n"
    "    .edge { stroke: #334; stroke-width: 0.8; fill: none; }\n"
    "    .generator { fill: #c22; }\n"
    "    .estimate { stroke: #06c; stroke-width: 1.2; }\n"
    "    .vertex { fill: #334; }\n"
    "    .empty-circle { stroke: #2a8; stroke-width: 0.6; fill: none; }\n"
    "  </style>\n"
)


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def render_svg(t: Tessellation,
               generators: Optional[Sequence[Point2]] = None,
               estimates: Optional[Sequence[Point2]] = None,
               show_circles: bool = False,
               bounds: Optional[Bounds] = None,
               size: int = 640) -> str:
    """Render edges as lines, generators as dots, estimates as crosses.

    With `show_circles`, one circle per ordinary vertex is drawn through the
    nearest generators (requires `generators`).
    """
    if show_circles and not generators:
        raise VorinvError("empty-circle rendering needs generator positions")
    xs = [p.x for p in t.vertices] + [p.x for p in (generators or [])]
    ys = [p.y for p in t.vertices] + [p.y for p in (generators or [])]
    if bounds is not None:
        xs += [bounds.xmin, bounds.xmax]
        ys += [bounds.ymin, bounds.ymax]
    if not xs:
        raise VorinvError("nothing to render")
    xmin, xmax = min(xs), max(xs)
    ymin, ymax = min(ys), max(ys)
    span = max(xmax - xmin, ymax - ymin, 1e-9)
    margin = 0.05 * span
    xmin -= margin
    ymin -= margin
    xmax += margin
    ymax += margin
    scale = size / max(xmax - xmin, ymax - ymin)

    def sx(x: float) -> str:
        return _fmt((x - xmin) * scale)

    def sy(y: float) -> str:
        return _fmt((ymax - y) * scale)

    w = _fmt((xmax - xmin) * scale)
    h = _fmt((ymax - ymin) * scale)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
           f'viewBox="0 0 {w} {h}">', _STYLE.rstrip("\n")]

    marker = 0.006 * size
    for a, b in t.edges():
        pa, pb = t.vertices[a], t.vertices[b]
        out.append(f'  <line class="edge" x1="{sx(pa.x)}" y1="{sy(pa.y)}" '
                   f'x2="{sx(pb.x)}" y2="{sy(pb.y)}"/>')
    if show_circles and generators:
        for v in range(t.n_ordinary):
            c = t.vertices[v]
            r = min(distance(c, g) for g in generators)
            out.append(f'  <circle class="empty-circle" cx="{sx(c.x)}" cy="{sy(c.y)}" '
                       f'r="{_fmt(r * scale)}"/>')
    for v in range(t.n_ordinary):
        p = t.vertices[v]
        out.append(f'  <circle class="vertex" cx="{sx(p.x)}" cy="{sy(p.y)}" '
                   f'r="{_fmt(0.5 * marker)}"/>')
    for g in generators or []:
        out.append(f'  <circle class="generator" cx="{sx(g.x)}" cy="{sy(g.y)}" '
                   f'r="{_fmt(marker)}"/>')
    for e in estimates or []:
        cx, cy = (e.x - xmin) * scale, (ymax - e.y) * scale
        d = 1.5 * marker
        out.append(f'  <line class="estimate" x1="{_fmt(cx - d)}" y1="{_fmt(cy - d)}" '
                   f'x2="{_fmt(cx + d)}" y2="{_fmt(cy + d)}"/>')
        out.append(f'  <line class="estimate" x1="{_fmt(cx - d)}" y1="{_fmt(cy + d)}" '
                   f'x2="{_fmt(cx + d)}" y2="{_fmt(cy - d)}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
