"""Voronoi diagram construction by per-cell half-plane intersection.

Each cell starts as the clip rectangle and is cut by the dominance half-plane
of every relevant neighbor, nearest first, stopping once no farther generator
can reach the current cell.  Ring edges keep a label identifying the clipping
constraint (generator index, or a rectangle side), which lets the cell rings
be stitched into a shared tessellation: ring corners where two bisector edges
meet are keyed by their generator triple and positioned at the circumcenter
of those generators, and clipped edge ends on the rectangle become dummy
vertices keyed by the generator pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .errors import InputError, VorinvError
from .geom import Circle, Point2, circumcircle, CollinearPoints
from .tess import Polygon, Tessellation


class DuplicateGenerators(InputError):
    pass


class GeneratorOutsideBounds(InputError):
    pass


class NotInteriorVertex(VorinvError):
    pass


# Generators closer than this are considered duplicates.
MIN_SEPARATION = 1e-9
# Default tolerance for merging coincident tessellation vertices (scene units).
DEFAULT_MERGE_TOL = 1e-9


@dataclass(frozen=True)
class Bounds:
    """Axis-aligned clip rectangle."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self) -> None:
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise InputError(f"empty bounds {self}")

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)

    @property
    def area(self) -> float:
        return self.width * self.height

    def contains(self, p: Point2, strict: bool = True) -> bool:
        if strict:
            return self.xmin < p.x < self.xmax and self.ymin < p.y < self.ymax
        return self.xmin <= p.x <= self.xmax and self.ymin <= p.y <= self.ymax

    def corners_ccw(self) -> List[Tuple[float, float]]:
        return [(self.xmin, self.ymin), (self.xmax, self.ymin),
                (self.xmax, self.ymax), (self.xmin, self.ymax)]

    @staticmethod
    def parse(text: str) -> "Bounds":
        parts = [float(tok) for tok in text.replace(",", " ").split()]
        if len(parts) != 4:
            raise InputError(f"bounds need 4 numbers, got {text!r}")
        return Bounds(*parts)


@dataclass(frozen=True)
class GeneratorSet:
    """Generator points plus the bounded region they tile."""

    points: Tuple[Point2, ...]
    bounds: Bounds

    def __post_init__(self) -> None:
        n = len(self.points)
        if n < 2:
            raise InputError(f"need at least 2 generators, got {n}")
        for k, p in enumerate(self.points):
            if not self.bounds.contains(p, strict=True):
                raise GeneratorOutsideBounds(f"generator {k} at {p} not strictly inside {self.bounds}")
        arr = np.array([[p.x, p.y] for p in self.points], dtype=float)
        if n <= 2000:
            diff = arr[:, None, :] - arr[None, :, :]
            d2 = (diff * diff).sum(axis=2)
            np.fill_diagonal(d2, np.inf)
            dmin = float(np.sqrt(d2.min()))
        else:
            tree = cKDTree(arr)
            dist, _ = tree.query(arr, k=2)
            dmin = float(dist[:, 1].min())
        if dmin <= MIN_SEPARATION:
            raise DuplicateGenerators(f"minimum generator separation {dmin} <= {MIN_SEPARATION}")

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class VoronoiDiagram:
    """Forward construction output.

    `cells[i]` is the tessellation-index polygon of generator i (chain form
    for clipped cells); `rings[i]` is its closed clipped outline including
    rectangle corners, counterclockwise.  `vertex_triples[v]` lists the
    generator indices equidistant from ordinary vertex v.
    """

    generators: GeneratorSet
    tessellation: Tessellation
    cells: Tuple[Polygon, ...]
    rings: Tuple[Tuple[Point2, ...], ...]
    vertex_triples: Tuple[Tuple[int, ...], ...]
    warnings: Tuple[str, ...] = ()

    def generator_of_cell(self, cell_index: int) -> int:
        """Cells are built per generator, so the mapping is the identity."""
        return cell_index


def _clip_labeled(ring, labs, wx, wy, c, label):
    """Cut a labeled convex ring by the half-plane wx*x + wy*y <= c."""
    m = len(ring)
    s = [wx * p[0] + wy * p[1] - c for p in ring]
    out_pts, out_labs = [], []
    for k in range(m):
        a, sa, la = ring[k], s[k], labs[k]
        kb = k + 1 if k + 1 < m else 0
        b, sb = ring[kb], s[kb]
        if sa <= 0.0:
            out_pts.append(a)
            out_labs.append(la)
            if sb > 0.0:
                f = sa / (sa - sb)
                out_pts.append((a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])))
                out_labs.append(label)
        elif sb <= 0.0:
            f = sa / (sa - sb)
            out_pts.append((a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])))
            out_labs.append(la)
    return out_pts, out_labs


def _dedup_ring(pts, labs, tol):
    """Drop zero-length ring edges; the surviving point keeps the outgoing label."""
    out_pts, out_labs = [], []
    for k in range(len(pts)):
        if out_pts and abs(pts[k][0] - out_pts[-1][0]) <= tol and abs(pts[k][1] - out_pts[-1][1]) <= tol:
            out_labs[-1] = labs[k]
        else:
            out_pts.append(pts[k])
            out_labs.append(labs[k])
    while len(out_pts) >= 2 and abs(out_pts[0][0] - out_pts[-1][0]) <= tol \
            and abs(out_pts[0][1] - out_pts[-1][1]) <= tol:
        out_pts.pop()
        out_labs.pop()
    return out_pts, out_labs


def _bisector_rect_endpoints(pa: Point2, pb: Point2, bounds: Bounds):
    """Both intersection points of bisector(pa, pb) with the rectangle, sorted.

    Computed once per generator pair (lower index first) so that every cell
    refers to bit-identical dummy positions.
    """
    mx, my = 0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y)
    ux, uy = -(pb.y - pa.y), pb.x - pa.x
    tmin, tmax = -math.inf, math.inf
    for m0, u, lo, hi in ((mx, ux, bounds.xmin, bounds.xmax), (my, uy, bounds.ymin, bounds.ymax)):
        if u == 0.0:
            if not (lo <= m0 <= hi):
                return []
        else:
            t1, t2 = (lo - m0) / u, (hi - m0) / u
            if t1 > t2:
                t1, t2 = t2, t1
            tmin = max(tmin, t1)
            tmax = min(tmax, t2)
    if tmin > tmax:
        return []
    ends = [(mx + tmin * ux, my + tmin * uy), (mx + tmax * ux, my + tmax * uy)]
    ends.sort()
    return ends


def _candidate_stream(arr: np.ndarray, i: int, tree: Optional[cKDTree]) -> Iterator[Tuple[float, int]]:
    """(distance, index) pairs for generators other than i, ascending."""
    n = arr.shape[0]
    if tree is None:
        pairs = sorted(
            (math.hypot(arr[j, 0] - arr[i, 0], arr[j, 1] - arr[i, 1]), j)
            for j in range(n) if j != i)
        yield from pairs
        return
    k = 32
    emitted = 0
    while True:
        k = min(k, n)
        dist, idx = tree.query(arr[i], k=k)
        pairs = sorted((float(d), int(j)) for d, j in zip(dist, idx) if j != i)
        yield from pairs[emitted:]
        emitted = len(pairs)
        if k == n:
            return
        k *= 4


def build_voronoi(g: GeneratorSet, merge_tol: float = DEFAULT_MERGE_TOL) -> VoronoiDiagram:
    """Construct the clipped Voronoi diagram of a generator set."""
    pts = g.points
    n = len(pts)
    bounds = g.bounds
    dedup_tol = 1e-12 * bounds.diagonal
    arr = np.array([[p.x, p.y] for p in pts], dtype=float)
    tree = cKDTree(arr) if n > 24 else None

    pair_ends_cache: Dict[Tuple[int, int], list] = {}

    def pair_ends(pair):
        if pair not in pair_ends_cache:
            pair_ends_cache[pair] = _bisector_rect_endpoints(pts[pair[0]], pts[pair[1]], bounds)
        return pair_ends_cache[pair]

    rings: List[Tuple[Point2, ...]] = []
    cell_node_keys: List[List[tuple]] = []
    triple_keys = set()
    triple_sample: Dict[tuple, Tuple[float, float]] = {}
    dummy_positions: Dict[tuple, Tuple[float, float]] = {}
    edge_map: Dict[tuple, List[Tuple[int, int]]] = {}
    warnings: List[str] = []

    for i in range(n):
        px, py = arr[i]
        ring = bounds.corners_ccw()
        labs = [-1, -2, -3, -4]
        r_max = max(math.hypot(x - px, y - py) for x, y in ring)
        for d, j in _candidate_stream(arr, i, tree):
            if d >= 2.0 * r_max:
                break
            wx, wy = arr[j, 0] - px, arr[j, 1] - py
            c = wx * (px + arr[j, 0]) * 0.5 + wy * (py + arr[j, 1]) * 0.5
            ring, labs = _clip_labeled(ring, labs, wx, wy, c, j)
            if not ring:
                raise VorinvError(f"cell {i} clipped away (inconsistent input)")
            r_max = max(math.hypot(x - px, y - py) for x, y in ring)
        ring, labs = _dedup_ring(ring, labs, dedup_tol)
        if len(ring) < 3:
            raise VorinvError(f"cell {i} degenerated to {len(ring)} points")
        rings.append(tuple(Point2(x, y) for x, y in ring))

        m = len(ring)
        nodes: List[Tuple[int, tuple]] = []
        for k in range(m):
            lab_in, lab_out = labs[k - 1], labs[k]
            gin, gout = lab_in >= 0, lab_out >= 0
            if gin and gout:
                if lab_in == lab_out:
                    continue
                key = ("v", tuple(sorted((i, lab_in, lab_out))))
                triple_keys.add(key[1])
                triple_sample.setdefault(key[1], ring[k])
            elif gin or gout:
                j = lab_in if gin else lab_out
                pair = (i, j) if i < j else (j, i)
                ends = pair_ends(pair)
                if not ends:
                    continue
                if len(ends) == 1 or (
                        (ring[k][0] - ends[0][0]) ** 2 + (ring[k][1] - ends[0][1]) ** 2
                        <= (ring[k][0] - ends[-1][0]) ** 2 + (ring[k][1] - ends[-1][1]) ** 2):
                    eid = 0
                else:
                    eid = 1
                key = ("d", pair, eid)
                dummy_positions[key] = ends[eid] if eid < len(ends) else ends[0]
            else:
                continue
            nodes.append((k, key))

        cell_node_keys.append([key for _, key in nodes])
        if len(nodes) >= 2:
            nn = len(nodes)
            for a in range(nn):
                k1, key1 = nodes[a]
                k2, key2 = nodes[(a + 1) % nn]
                run = []
                k = k1
                while True:
                    run.append(labs[k])
                    k = k + 1 if k + 1 < m else 0
                    if k == k2:
                        break
                gens = {lab for lab in run if lab >= 0}
                if not gens:
                    continue
                if len(gens) == 1 and key1 != key2:
                    ekey = (key1, key2) if key1 <= key2 else (key2, key1)
                    edge_map.setdefault(ekey, []).append((i, gens.pop()))
                else:
                    warnings.append(f"cell {i}: unexpected edge labels {sorted(gens)}")

    # Merge coincident triple vertices (degenerate, co-circular generators).
    triples = sorted(triple_keys)
    centers: Dict[tuple, Point2] = {}
    for tri in triples:
        try:
            centers[tri] = circumcircle(pts[tri[0]], pts[tri[1]], pts[tri[2]]).center
        except CollinearPoints:  # pragma: no cover - bisectors met, so nearly collinear at worst
            centers[tri] = Point2(*triple_sample[tri])
    parent = {tri: tri for tri in triples}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    buckets: Dict[Tuple[int, int], List[tuple]] = {}
    for tri in triples:
        c = centers[tri]
        bx, by = math.floor(c.x / merge_tol), math.floor(c.y / merge_tol)
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for other in buckets.get((bx + dx, by + dy), ()):
                    oc = centers[other]
                    if math.hypot(oc.x - c.x, oc.y - c.y) <= merge_tol:
                        ra, rb = find(tri), find(other)
                        if ra != rb:
                            parent[max(ra, rb)] = min(ra, rb)
        buckets.setdefault((bx, by), []).append(tri)

    clusters: Dict[tuple, List[tuple]] = {}
    for tri in triples:
        clusters.setdefault(find(tri), []).append(tri)
    reps = sorted(clusters)
    vert_index = {("v", tri): idx for idx, rep in enumerate(reps) for tri in clusters[rep]}
    n_ordinary = len(reps)
    vertex_triples = tuple(
        tuple(sorted({gidx for tri in clusters[rep] for gidx in tri})) for rep in reps)
    positions = [centers[rep] for rep in reps]

    # Keep only edges with at least one ordinary endpoint; index surviving dummies.
    kept_edges = set()
    used_dummies = set()
    for (key1, key2) in edge_map:
        k1v, k2v = key1[0] == "v", key2[0] == "v"
        if not (k1v or k2v):
            warnings.append(f"dropped edge between dummies {key1}/{key2} (no ordinary endpoint)")
            continue
        kept_edges.add((key1, key2))
        if not k1v:
            used_dummies.add(key1)
        if not k2v:
            used_dummies.add(key2)
    dummy_list = sorted(used_dummies)
    dummy_index = {key: n_ordinary + k for k, key in enumerate(dummy_list)}

    def node_index(key) -> Optional[int]:
        if key[0] == "v":
            return vert_index[key]
        return dummy_index.get(key)

    adjacency: List[set] = [set() for _ in range(n_ordinary)]
    for (key1, key2) in kept_edges:
        a, b = node_index(key1), node_index(key2)
        if a is None or b is None or a == b:
            continue
        if a < n_ordinary:
            adjacency[a].add(b)
        if b < n_ordinary:
            adjacency[b].add(a)

    vertices = tuple(positions) + tuple(Point2(*dummy_positions[key]) for key in dummy_list)
    tessellation = Tessellation(vertices, n_ordinary, tuple(tuple(sorted(s)) for s in adjacency))

    cells = []
    for i in range(n):
        seq: List[int] = []
        for key in cell_node_keys[i]:
            idx = node_index(key)
            if idx is None:
                continue
            if not seq or seq[-1] != idx:
                seq.append(idx)
        # collapse the cyclic seam left by merged vertices
        while len(seq) > 1 and seq[0] == seq[-1]:
            seq.pop()
        cells.append(_cell_polygon(seq, n_ordinary, i, warnings))

    return VoronoiDiagram(
        generators=g,
        tessellation=tessellation,
        cells=tuple(cells),
        rings=tuple(rings),
        vertex_triples=vertex_triples,
        warnings=tuple(warnings),
    )


def _cell_polygon(seq: List[int], n_ordinary: int, cell: int, warnings: List[str]) -> Polygon:
    """Assemble a cell's tessellation polygon from its ring node indices."""
    if not seq:
        return Polygon((), is_unbounded=True)
    dummy_at = [k for k, idx in enumerate(seq) if idx >= n_ordinary]
    if not dummy_at:
        rot = seq.index(min(seq))
        return Polygon(tuple(seq[rot:] + seq[:rot]), is_unbounded=False)
    m = len(seq)
    chains = []
    for p in dummy_at:
        run = [seq[p]]
        k = (p + 1) % m
        while k != p and seq[k] < n_ordinary:
            run.append(seq[k])
            k = (k + 1) % m
        if len(run) > 1 and k != p:
            run.append(seq[k])
            chains.append(run)
    if not chains:
        return Polygon((), is_unbounded=True)
    chains.sort(key=lambda r: (-len(r), r))
    if len(chains) > 1:
        warnings.append(f"cell {cell}: boundary splits into {len(chains)} arcs; keeping longest")
    return Polygon(tuple(chains[0]), is_unbounded=True)


def detect_degeneracy(d: VoronoiDiagram) -> List[int]:
    """Interior vertices where four or more edges meet (merged at tolerance)."""
    t = d.tessellation
    return [v for v in range(t.n_ordinary)
            if len(t.adjacency[v]) >= 4 or len(d.vertex_triples[v]) >= 4]


def largest_empty_circle_at(d: VoronoiDiagram, vertex_index: int) -> Circle:
    """Circle centered at an interior vertex through its nearest generators."""
    t = d.tessellation
    if not (0 <= vertex_index < t.n_ordinary):
        raise NotInteriorVertex(f"vertex {vertex_index} is not an interior vertex")
    c = t.vertices[vertex_index]
    radius = min(math.hypot(p.x - c.x, p.y - c.y) for p in d.generators.points)
    return Circle(c, radius)


def grid_growth_labels(g: GeneratorSet, resolution: int) -> np.ndarray:
    """Terminal state of the equal-rate growth model on a sample grid.

    Samples are cell centers of a resolution x resolution grid over the
    bounds; each carries the index of its nearest generator, ties broken by
    the lowest index.  Row r corresponds to the r-th y interval from ymin.
    """
    if resolution < 2:
        raise InputError(f"resolution must be >= 2, got {resolution}")
    b = g.bounds
    xs = b.xmin + (np.arange(resolution) + 0.5) * (b.width / resolution)
    ys = b.ymin + (np.arange(resolution) + 0.5) * (b.height / resolution)
    pts = np.array([[p.x, p.y] for p in g.points], dtype=float)
    labels = np.empty((resolution, resolution), dtype=np.int64)
    for r in range(resolution):
        dx = xs[:, None] - pts[None, :, 0]
        dy = ys[r] - pts[None, :, 1]
        labels[r] = np.argmin(dx * dx + dy * dy, axis=1)
    return labels


def serialize_grid_labels(labels: np.ndarray) -> str:
    lines = [f"labels {labels.shape[0]}"]
    for row in labels:
        lines.append(" ".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def random_generators(n: int, seed: int, bounds: Optional[Bounds] = None) -> GeneratorSet:
    """Uniform random generators strictly inside `bounds` (unit square default)."""
    if bounds is None:
        bounds = Bounds(0.0, 0.0, 1.0, 1.0)
    rng = np.random.default_rng(seed)
    xy = rng.random((n, 2))
    pts = tuple(Point2(bounds.xmin + float(x) * bounds.width,
                       bounds.ymin + float(y) * bounds.height) for x, y in xy)
    return GeneratorSet(pts, bounds)


def hex_lattice_generators(rows: int, cols: int, spacing: float = 1.0) -> GeneratorSet:
    """Triangular lattice of generators; its Voronoi diagram is a honeycomb."""
    if rows < 2 or cols < 2:
        raise InputError("lattice needs rows >= 2 and cols >= 2")
    pts = []
    dy = spacing * math.sqrt(3.0) / 2.0
    for r in range(rows):
        x0 = 0.5 * spacing if r % 2 else 0.0
        for c in range(cols):
            pts.append(Point2(x0 + c * spacing, r * dy))
    xs = [p.x for p in pts]
    ys = [p.y for p in pts]
    margin = spacing
    bounds = Bounds(min(xs) - margin, min(ys) - margin, max(xs) + margin, max(ys) + margin)
    return GeneratorSet(tuple(pts), bounds)


def jittered_hex_generators(rows: int, cols: int, jitter: float, seed: int,
                            spacing: float = 1.0) -> GeneratorSet:
    """Triangular lattice with each site displaced uniformly by up to jitter*spacing.

    Mimics near-crystalline arrangements: cells stay hexagon-like with edges
    of comparable length, unlike uniform-random sites.
    """
    base = hex_lattice_generators(rows, cols, spacing)
    if jitter < 0.0:
        raise InputError(f"jitter must be >= 0, got {jitter}")
    rng = np.random.default_rng(seed)
    amp = jitter * spacing
    pts = tuple(Point2(p.x + float(rng.uniform(-amp, amp)),
                       p.y + float(rng.uniform(-amp, amp))) for p in base.points)
    return GeneratorSet(pts, base.bounds)


def parse_generators(text: str) -> GeneratorSet:
    """Parse the generator file format (gen/bounds/p records)."""
    n: Optional[int] = None
    bounds: Optional[Bounds] = None
    pts: List[Point2] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        try:
            if tokens[0] == "gen" and len(tokens) == 2:
                n = int(tokens[1])
            elif tokens[0] == "bounds" and len(tokens) == 5:
                bounds = Bounds(*(float(tok) for tok in tokens[1:]))
            elif tokens[0] == "p" and len(tokens) == 3:
                pts.append(Point2(float(tokens[1]), float(tokens[2])))
            else:
                raise InputError(f"line {lineno}: malformed record {line!r}")
        except ValueError as exc:
            raise InputError(f"line {lineno}: {exc}") from exc
    if n is None or bounds is None:
        raise InputError("generator file needs 'gen' and 'bounds' lines")
    if len(pts) != n:
        raise InputError(f"header promises {n} points, found {len(pts)}")
    return GeneratorSet(tuple(pts), bounds)


def serialize_generators(g: GeneratorSet) -> str:
    lines = [f"gen {len(g.points)}",
             f"bounds {g.bounds.xmin!r} {g.bounds.ymin!r} {g.bounds.xmax!r} {g.bounds.ymax!r}"]
    for p in g.points:
        lines.append(f"p {p.x!r} {p.y!r}")
    return "\n".join(lines) + "\n"
