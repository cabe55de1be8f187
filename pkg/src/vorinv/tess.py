"""Tessellation storage: vertex list, adjacency lists, dummy vertices, faces.

A tessellation is a planar straight-line graph.  Ordinary vertices come first
in the vertex list and carry adjacency lists; dummy vertices trail the list,
mark the far end of unbounded edges, and carry no adjacency.  The text format
(see `parse_tessellation`) is:

    tess <n_ordinary> <n_dummy>
    v <x> <y>                 # one line per vertex, ordinary first
    adj <i>: <j1> <j2> ...    # one line per ordinary vertex, ascending i

Lines starting with '#' are ignored.  Reals are written with shortest
round-trip representation, so parse(serialize(t)) == t byte for byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import InputError, VorinvError
from .geom import Point2


class FormatError(InputError):
    pass


class AsymmetricAdjacency(InputError):
    pass


class DummyMisplaced(InputError):
    pass


class NonPlanarEmbedding(VorinvError):
    pass


class IsolatedVertex(VorinvError):
    pass


@dataclass(frozen=True)
class Tessellation:
    """Immutable tessellation: vertices, ordinary count, adjacency lists.

    Invariants checked at construction: adjacency entries are in range and
    free of self-loops/repeats, ordinary-ordinary adjacency is symmetric, and
    every dummy vertex appears in exactly one adjacency list.
    """

    vertices: Tuple[Point2, ...]
    n_ordinary: int
    adjacency: Tuple[Tuple[int, ...], ...]

    def __post_init__(self) -> None:
        total = len(self.vertices)
        if not (0 <= self.n_ordinary <= total):
            raise FormatError(f"ordinary count {self.n_ordinary} out of range for {total} vertices")
        if len(self.adjacency) != self.n_ordinary:
            raise DummyMisplaced(
                f"{len(self.adjacency)} adjacency lists for {self.n_ordinary} ordinary vertices")
        dummy_owner = {}
        for i, nbrs in enumerate(self.adjacency):
            seen = set()
            for j in nbrs:
                if not (0 <= j < total):
                    raise FormatError(f"vertex {i}: neighbor {j} out of range")
                if j == i:
                    raise FormatError(f"vertex {i}: self-loop")
                if j in seen:
                    raise FormatError(f"vertex {i}: repeated neighbor {j}")
                seen.add(j)
                if j >= self.n_ordinary:
                    if j in dummy_owner:
                        raise DummyMisplaced(
                            f"dummy {j} referenced by vertices {dummy_owner[j]} and {i}")
                    dummy_owner[j] = i
        for i, nbrs in enumerate(self.adjacency):
            for j in nbrs:
                if j < self.n_ordinary and i not in self.adjacency[j]:
                    raise AsymmetricAdjacency(f"edge {i}->{j} has no reverse entry")
        for d in range(self.n_ordinary, total):
            if d not in dummy_owner:
                raise DummyMisplaced(f"dummy {d} referenced by no ordinary vertex")

    @property
    def n_dummy(self) -> int:
        return len(self.vertices) - self.n_ordinary

    def is_dummy(self, index: int) -> bool:
        return index >= self.n_ordinary

    def dummy_owner(self, dummy_index: int) -> int:
        """The unique ordinary vertex adjacent to a dummy."""
        for i, nbrs in enumerate(self.adjacency):
            if dummy_index in nbrs:
                return i
        raise DummyMisplaced(f"dummy {dummy_index} has no owner")

    def edges(self) -> List[Tuple[int, int]]:
        """Undirected edges as (low, high) pairs, deduplicated and sorted."""
        out = set()
        for i, nbrs in enumerate(self.adjacency):
            for j in nbrs:
                out.add((i, j) if i < j else (j, i))
        return sorted(out)


@dataclass(frozen=True)
class Polygon:
    """One face of the tessellation.

    `vertex_indices` is counterclockwise; bounded faces are cyclic, unbounded
    faces are open chains that start and end with a dummy vertex.
    """

    vertex_indices: Tuple[int, ...]
    is_unbounded: bool

    def ordinary_indices(self, t: Tessellation) -> Tuple[int, ...]:
        return tuple(i for i in self.vertex_indices if not t.is_dummy(i))


def parse_tessellation(text: str) -> Tessellation:
    """Parse the tessellation text format; raises FormatError with line numbers."""
    header: Optional[Tuple[int, int]] = None
    verts: List[Point2] = []
    adj_lines: List[Tuple[int, Tuple[int, ...]]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        kind = tokens[0]
        try:
            if kind == "tess":
                if header is not None:
                    raise FormatError(f"line {lineno}: duplicate header")
                if len(tokens) != 3:
                    raise FormatError(f"line {lineno}: expected 'tess <n_ordinary> <n_dummy>'")
                header = (int(tokens[1]), int(tokens[2]))
            elif kind == "v":
                if len(tokens) != 3:
                    raise FormatError(f"line {lineno}: expected 'v <x> <y>'")
                x, y = float(tokens[1]), float(tokens[2])
                if not (math.isfinite(x) and math.isfinite(y)):
                    raise FormatError(f"line {lineno}: non-finite coordinate")
                verts.append(Point2(x, y))
            elif kind == "adj":
                if len(tokens) < 2 or not tokens[1].endswith(":"):
                    raise FormatError(f"line {lineno}: expected 'adj <i>: ...'")
                idx = int(tokens[1][:-1])
                nbrs = tuple(int(tok) for tok in tokens[2:])
                adj_lines.append((idx, nbrs))
            else:
                raise FormatError(f"line {lineno}: unknown record '{kind}'")
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from exc
    if header is None:
        raise FormatError("missing 'tess' header line")
    n_ord, n_dum = header
    if n_ord < 0 or n_dum < 0:
        raise FormatError("negative vertex counts in header")
    if len(verts) != n_ord + n_dum:
        raise FormatError(f"header promises {n_ord + n_dum} vertices, found {len(verts)}")
    if [i for i, _ in adj_lines] != list(range(n_ord)):
        if any(i >= n_ord for i, _ in adj_lines):
            raise DummyMisplaced("adjacency line given for a dummy vertex")
        raise FormatError("adjacency lines must cover ordinary vertices 0..n-1 in ascending order")
    adjacency = tuple(nbrs for _, nbrs in adj_lines)
    return Tessellation(tuple(verts), n_ord, adjacency)


def serialize_tessellation(t: Tessellation) -> str:
    """Canonical text form: fixed field order, repr() floats, ascending adj lines."""
    lines = [f"tess {t.n_ordinary} {t.n_dummy}"]
    for p in t.vertices:
        lines.append(f"v {p.x!r} {p.y!r}")
    for i, nbrs in enumerate(t.adjacency):
        body = " ".join(str(j) for j in nbrs)
        lines.append(f"adj {i}: {body}" if body else f"adj {i}:")
    return "\n".join(lines) + "\n"


def _ccw_neighbor_order(t: Tessellation) -> List[List[int]]:
    order: List[List[int]] = []
    for i in range(t.n_ordinary):
        nbrs = t.adjacency[i]
        if not nbrs:
            raise IsolatedVertex(f"ordinary vertex {i} has no neighbors")
        p = t.vertices[i]
        order.append(sorted(
            nbrs,
            key=lambda j: math.atan2(t.vertices[j].y - p.y, t.vertices[j].x - p.x)))
    return order


def _signed_area(points: Sequence[Point2]) -> float:
    area = 0.0
    for k in range(len(points)):
        a = points[k]
        b = points[(k + 1) % len(points)]
        area += a.x * b.y - b.x * a.y
    return 0.5 * area


def extract_polygons(t: Tessellation) -> List[Polygon]:
    """Faces of the planar subdivision by next-edge-counterclockwise traversal.

    At each vertex the incident edges are sorted by angle; the walk leaving
    vertex v after arriving from u takes the neighbor one step clockwise from
    u.  Interior faces come out counterclockwise.  Unbounded faces are walked
    as open chains between two dummy endpoints; cycle faces with nonpositive
    signed area (the outer complement) are excluded.
    """
    order = _ccw_neighbor_order(t)
    total_directed = sum(len(nbrs) for nbrs in order)
    owner = {}
    for i, nbrs in enumerate(order):
        for j in nbrs:
            if t.is_dummy(j):
                owner[j] = i

    total = len(t.vertices)

    def step(prev: int, cur: int) -> int:
        # neighbor one step clockwise from prev; lists are tiny (degree ~3)
        nbrs = order[cur]
        return nbrs[nbrs.index(prev) - 1]

    visited = set()  # directed edges encoded as prev * total + cur
    chains: List[Polygon] = []
    for d in range(t.n_ordinary, total):
        u = owner[d]
        face = [d, u]
        prev, cur = d, u
        for _ in range(total_directed + 1):
            nxt = step(prev, cur)
            visited.add(cur * total + nxt)
            face.append(nxt)
            if t.is_dummy(nxt):
                break
            prev, cur = cur, nxt
        else:
            raise NonPlanarEmbedding(f"chain from dummy {d} never terminated")
        chains.append(Polygon(tuple(face), is_unbounded=True))

    cycles: List[Polygon] = []
    for i in range(t.n_ordinary):
        for j in t.adjacency[i]:
            if t.is_dummy(j) or (i * total + j) in visited:
                continue
            start = (i, j)
            face: List[int] = []
            prev, cur = start
            closed = False
            for _ in range(total_directed + 1):
                visited.add(prev * total + cur)
                face.append(prev)
                nxt = step(prev, cur)
                if t.is_dummy(nxt):
                    raise NonPlanarEmbedding(
                        f"cycle walk from edge {start} ran into dummy {nxt}")
                prev, cur = cur, nxt
                if (prev, cur) == start:
                    closed = True
                    break
            if not closed:
                raise NonPlanarEmbedding(f"face walk from edge {start} never closed")
            if _signed_area([t.vertices[v] for v in face]) > 0.0:
                rot = face.index(min(face))
                cycles.append(Polygon(tuple(face[rot:] + face[:rot]), is_unbounded=False))

    chains.sort(key=lambda p: p.vertex_indices[0])
    cycles.sort(key=lambda p: p.vertex_indices)
    return chains + cycles


def vertex_degree_check(t: Tessellation) -> List[int]:
    """Indices of ordinary vertices whose degree differs from three (empty = all pass)."""
    return [i for i in range(t.n_ordinary) if len(t.adjacency[i]) != 3]


def perturb_vertices(t: Tessellation, sigma: float, seed: int) -> Tessellation:
    """Displace each ordinary vertex by seeded Gaussian noise, std `sigma` per axis.

    Dummy vertices and adjacency are untouched; sigma == 0 returns an
    identical tessellation (the generator is still advanced deterministically).
    """
    if sigma < 0.0:
        raise InputError(f"sigma must be >= 0, got {sigma}")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((t.n_ordinary, 2)) * sigma
    moved = [
        Point2(p.x + float(noise[i, 0]), p.y + float(noise[i, 1]))
        for i, p in enumerate(t.vertices[:t.n_ordinary])
    ]
    return Tessellation(tuple(moved) + t.vertices[t.n_ordinary:], t.n_ordinary, t.adjacency)


def polygon_points(t: Tessellation, polygon: Polygon) -> List[Point2]:
    return [t.vertices[i] for i in polygon.vertex_indices]


def polygon_area(t: Tessellation, polygon: Polygon) -> float:
    if polygon.is_unbounded:
        raise VorinvError("area undefined for unbounded polygon")
    return _signed_area(polygon_points(t, polygon))
