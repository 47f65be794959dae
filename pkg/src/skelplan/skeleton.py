"""Workspace skeleton: a medially centred curve graph through free space.

The medial axis is approximated on a grid. Each cell holds the exact
clearance of its centre; cells that are local maxima across some direction
(ridge cells) anchor a priority-ordered, topology-preserving thinning, and
the resulting unit-width chains are traced into an embedded graph.
"""
from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .geometry import Environment, GeometryError, Point2, clearance_many, segment_free

DEFAULT_MAX_CELLS = 4_000_000


class SkeletonError(RuntimeError):
    pass


class GridBudgetError(SkeletonError, MemoryError):
    pass


@dataclass(frozen=True, eq=False)
class DistanceGrid:
    resolution: float
    origin: Point2
    values: np.ndarray  # (nx, ny), indexed [x, y]
    free_mask: np.ndarray

    @property
    def shape(self):
        return self.values.shape

    def center(self, i, j) -> Point2:
        return Point2(self.origin.x + (i + 0.5) * self.resolution, self.origin.y + (j + 0.5) * self.resolution)

    def centers(self, flat_idx) -> np.ndarray:
        i, j = np.divmod(np.asarray(flat_idx, dtype=np.int64), self.values.shape[1])
        return np.column_stack(
            [self.origin.x + (i + 0.5) * self.resolution, self.origin.y + (j + 0.5) * self.resolution]
        )


@dataclass(frozen=True)
class SkeletonVertex:
    id: int
    position: Point2
    degree: int


@dataclass(frozen=True, eq=False)
class SkeletonEdge:
    id: int
    endpoints: tuple[int, int]
    polyline: np.ndarray  # (n, 2)
    clearances: np.ndarray  # (n,)
    length: float

    @property
    def u(self) -> int:
        return self.endpoints[0]

    @property
    def v(self) -> int:
        return self.endpoints[1]


@dataclass(frozen=True, eq=False)
class SkeletonGraph:
    vertices: tuple[SkeletonVertex, ...]
    edges: tuple[SkeletonEdge, ...]
    resolution: float
    _vindex: dict = field(default=None, repr=False, compare=False)
    _eindex: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_vindex", {v.id: v for v in self.vertices})
        object.__setattr__(self, "_eindex", {e.id: e for e in self.edges})

    def vertex(self, vid: int) -> SkeletonVertex:
        return self._vindex[vid]

    def edge(self, eid: int) -> SkeletonEdge:
        return self._eindex[eid]

    def incident(self, vid: int) -> list[SkeletonEdge]:
        return [e for e in self.edges if vid in e.endpoints]

    def is_empty(self) -> bool:
        return not self.edges

    def nearest_vertex(self, p, env: Environment | None = None) -> SkeletonVertex:
        """Closest vertex to ``p``; with ``env``, prefer vertices in line of sight."""
        if not self.vertices:
            raise SkeletonError("skeleton has no vertices")
        ranked = sorted(self.vertices, key=lambda v: (v.position.dist(p), v.id))
        if env is not None:
            for v in ranked:
                if segment_free(env, p, v.position, 0.0, env.robot_radius / 4):
                    return v
        return ranked[0]

    def path_exists(self, a: int, b: int) -> bool:
        adj = defaultdict(set)
        for e in self.edges:
            adj[e.u].add(e.v)
            adj[e.v].add(e.u)
        seen, stack = {a}, [a]
        while stack:
            x = stack.pop()
            if x == b:
                return True
            for y in adj[x] - seen:
                seen.add(y)
                stack.append(y)
        return False

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "resolution": self.resolution,
            "vertices": [{"id": v.id, "x": v.position.x, "y": v.position.y, "degree": v.degree} for v in self.vertices],
            "edges": [
                {
                    "id": e.id,
                    "endpoints": list(e.endpoints),
                    "length": e.length,
                    "points": e.polyline.tolist(),
                    "clearances": e.clearances.tolist(),
                }
                for e in self.edges
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> "SkeletonGraph":
        verts = tuple(SkeletonVertex(v["id"], Point2(v["x"], v["y"]), v["degree"]) for v in d["vertices"])
        edges = tuple(
            _make_edge(e["id"], tuple(e["endpoints"]), np.asarray(e["points"], float), np.asarray(e["clearances"], float))
            for e in d["edges"]
        )
        return cls(verts, edges, d["resolution"])


def _polyline_length(pts: np.ndarray) -> float:
    if len(pts) < 2:
        return 0.0
    return float(np.sum(np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1]))))


def _make_edge(eid, endpoints, polyline, clearances) -> SkeletonEdge:
    polyline = np.ascontiguousarray(polyline, dtype=np.float64)
    clearances = np.ascontiguousarray(clearances, dtype=np.float64)
    polyline.flags.writeable = False
    clearances.flags.writeable = False
    return SkeletonEdge(eid, tuple(endpoints), polyline, clearances, _polyline_length(polyline))


# -- distance grid -------------------------------------------------------------


def distance_transform(env: Environment, resolution: float | None = None, max_cells: int = DEFAULT_MAX_CELLS) -> DistanceGrid:
    """Exact clearance sampled at grid-cell centres covering ``env.bounds``."""
    if resolution is None:
        resolution = env.robot_radius / 2
    if not (resolution > 0):
        raise GeometryError("resolution must be positive")
    if resolution > env.robot_radius:
        raise GeometryError("resolution must not exceed the robot radius")
    xmin, ymin, xmax, ymax = env.bounds
    nx = int(math.ceil((xmax - xmin) / resolution - 1e-9))
    ny = int(math.ceil((ymax - ymin) / resolution - 1e-9))
    if nx * ny > max_cells:
        raise GridBudgetError(f"grid of {nx}x{ny} cells exceeds budget of {max_cells}")
    xs = xmin + (np.arange(nx) + 0.5) * resolution
    ys = ymin + (np.arange(ny) + 0.5) * resolution
    pts = np.ascontiguousarray(np.column_stack([np.repeat(xs, ny), np.tile(ys, nx)]))
    # centres past the far edge read as 0 (kernel treats out-of-bounds as blocked)
    vals = kernels.clearance_many(pts, env._segs, env._offsets, env.bounds).reshape(nx, ny)
    vals.flags.writeable = False
    free = vals > 0.0
    free.flags.writeable = False
    return DistanceGrid(float(resolution), Point2(xmin, ymin), vals, free)


# -- thinning ------------------------------------------------------------------


def _simple_point_table() -> np.ndarray:
    """256-entry table: 1 where removing the centre preserves topology.

    Foreground uses 8-connectivity, background 4-connectivity.
    """
    nb = kernels.NEIGHBORS
    table = np.zeros(256, dtype=np.uint8)
    for code in range(256):
        fg = [k for k in range(8) if code >> k & 1]
        bg = [k for k in range(8) if not code >> k & 1]

        def components(members, adjacent):
            left, count, comps = set(members), 0, []
            while left:
                seed = min(left)
                comp, stack = {seed}, [seed]
                left.discard(seed)
                while stack:
                    a = stack.pop()
                    for b in list(left):
                        if adjacent(nb[a], nb[b]):
                            left.discard(b)
                            comp.add(b)
                            stack.append(b)
                comps.append(comp)
                count += 1
            return comps

        t8 = len(components(fg, lambda p, q: max(abs(p[0] - q[0]), abs(p[1] - q[1])) == 1))
        bg_comps = components(bg, lambda p, q: abs(p[0] - q[0]) + abs(p[1] - q[1]) == 1)
        t4 = sum(1 for c in bg_comps if any(0 in nb[k] for k in c))
        table[code] = 1 if (t8 == 1 and t4 == 1) else 0
    return table


_SIMPLE = _simple_point_table()


def ridge_mask(grid: DistanceGrid) -> np.ndarray:
    """Cells that are a transverse local maximum along some direction pair.

    A cell qualifies if, for one of the four axis/diagonal directions, its
    value is >= both neighbours and strictly greater than at least one.
    """
    v = np.pad(np.asarray(grid.values), 1, constant_values=0.0)
    c = v[1:-1, 1:-1]
    out = np.zeros(c.shape, dtype=bool)
    for di, dj in ((1, 0), (0, 1), (1, 1), (1, -1)):
        a = v[1 + di : v.shape[0] - 1 + di, 1 + dj : v.shape[1] - 1 + dj]
        b = v[1 - di : v.shape[0] - 1 - di, 1 - dj : v.shape[1] - 1 - dj]
        out |= (c >= a) & (c >= b) & ((c > a) | (c > b))
    return out & grid.free_mask


def thin_grid(grid: DistanceGrid) -> np.ndarray:
    """Unit-width skeleton mask of the free cells."""
    ridge = ridge_mask(grid)
    fg = np.ascontiguousarray(grid.free_mask, dtype=np.uint8).copy()
    flat = np.asarray(grid.values).ravel()
    order = np.lexsort((np.arange(flat.size), flat)).astype(np.int64)
    order = np.ascontiguousarray(order[fg.ravel()[order] > 0])
    return kernels.thin(fg, np.ascontiguousarray(ridge, dtype=np.uint8), order, _SIMPLE).astype(bool)


# -- graph tracing -------------------------------------------------------------


def _neighbors(idx, mask_set, ny, nx):
    i, j = divmod(idx, ny)
    out = []
    for di, dj in kernels.NEIGHBORS:
        a, b = i + di, j + dj
        if 0 <= a < nx and 0 <= b < ny:
            n = a * ny + b
            if n in mask_set:
                out.append(n)
    return out


def _components(cells, ny, nx):
    cells = set(cells)
    comps = []
    for seed in sorted(cells):
        if seed not in cells:
            continue
        comp, stack = [seed], [seed]
        cells.discard(seed)
        while stack:
            for n in _neighbors(stack.pop(), cells, ny, nx):
                cells.discard(n)
                comp.append(n)
                stack.append(n)
        comps.append(sorted(comp))
    return comps


def extract_skeleton(grid: DistanceGrid, env: Environment) -> SkeletonGraph:
    """Trace the thinned ridge network of ``grid`` into a :class:`SkeletonGraph`."""
    if not grid.free_mask.any():
        raise SkeletonError("no free cells; skeleton would be empty")
    nx, ny = grid.shape
    skel = thin_grid(grid)
    cells = set(np.flatnonzero(skel.ravel()).tolist())
    values = np.asarray(grid.values).ravel()

    deg = {c: len(_neighbors(c, cells, ny, nx)) for c in cells}
    node_cells = {c for c in cells if deg[c] != 2}
    chain_cells = cells - node_cells

    # a closed chain with no junction gets one cell promoted to a vertex
    for comp in _components(chain_cells, ny, nx):
        touches = any(n in node_cells for c in comp for n in _neighbors(c, cells, ny, nx))
        if not touches:
            node_cells.add(comp[0])
            chain_cells.discard(comp[0])

    clusters = _components(node_cells, ny, nx)
    cluster_of = {}
    for k, comp in enumerate(clusters):
        for c in comp:
            cluster_of[c] = k
    # vertex cell: highest clearance in the cluster, lowest index on ties
    anchor = [max(comp, key=lambda c: (values[c], -c)) for comp in clusters]

    raw_edges = []  # (cluster_a, cluster_b, [chain cells])
    for comp in _components(chain_cells, ny, nx):
        comp_set = set(comp)
        ends = [c for c in comp if len(_neighbors(c, comp_set, ny, nx)) < 2]
        if not ends:
            continue  # unreachable after promotion above

        def attach(c):
            ks = sorted({cluster_of[n] for n in _neighbors(c, node_cells, ny, nx)})
            return ks

        start = ends[0]
        seq, seen, cur = [start], {start}, start
        while True:
            nxt = [n for n in _neighbors(cur, comp_set, ny, nx) if n not in seen]
            if not nxt:
                break
            cur = min(nxt)
            seen.add(cur)
            seq.append(cur)
        a_opts, b_opts = attach(seq[0]), attach(seq[-1])
        if not a_opts or not b_opts:
            continue
        if len(seq) == 1:
            a, b = a_opts[0], b_opts[-1]
        else:
            a, b = a_opts[0], b_opts[0]
        if a > b or (a == b and seq[0] > seq[-1]):
            a, b, seq = b, a, seq[::-1]
        raw_edges.append((a, b, seq))

    # junction clusters adjacent to each other through no chain cells are one cluster
    # by construction, so every edge above has at least one chain cell.
    min_loop = 4 * grid.resolution
    centers = lambda idxs: grid.centers(idxs)  # noqa: E731
    traced = []
    for a, b, seq in raw_edges:
        pts = np.vstack([centers([anchor[a]]), centers(seq), centers([anchor[b]])])
        if a == b and _polyline_length(pts) < min_loop:
            continue
        traced.append((a, b, seq, pts))

    used = sorted({a for a, _, _, _ in traced} | {b for _, b, _, _ in traced})
    vid = {k: n for n, k in enumerate(used)}
    traced.sort(key=lambda t: (vid[t[0]], vid[t[1]], t[2][0]))
    edges, degree = [], defaultdict(int)
    all_pts = [t[3] for t in traced]
    clr = clearance_many(env, np.vstack(all_pts)) if all_pts else np.empty(0)
    pos = 0
    for eid, (a, b, seq, pts) in enumerate(traced):
        n = len(pts)
        edges.append(_make_edge(eid, (vid[a], vid[b]), pts, clr[pos : pos + n]))
        pos += n
        degree[vid[a]] += 1
        degree[vid[b]] += 1
    verts = tuple(
        SkeletonVertex(vid[k], Point2(*map(float, centers([anchor[k]])[0])), degree[vid[k]]) for k in used
    )
    return SkeletonGraph(verts, tuple(edges), grid.resolution)


def prune_spurs(sk: SkeletonGraph, min_length: float, keep_near=()) -> SkeletonGraph:
    """Drop dangling edges shorter than ``min_length``, one at a time.

    A spur is kept when its free tip is the vertex closest to one of the
    points in ``keep_near`` (normally the query start and goal).
    """
    if min_length < 0:
        raise ValueError("min_length must be non-negative")
    protected = set()
    for p in keep_near:
        if sk.vertices:
            protected.add(sk.nearest_vertex(p).id)
    edges = list(sk.edges)
    while True:
        degree = defaultdict(int)
        for e in edges:
            degree[e.u] += 1
            degree[e.v] += 1
        victim = None
        for e in edges:
            if e.u == e.v or e.length >= min_length:
                continue
            tips = [x for x in e.endpoints if degree[x] == 1]
            if tips and not any(t in protected for t in tips):
                victim = e
                break
        if victim is None:
            break
        edges.remove(victim)
    degree = defaultdict(int)
    for e in edges:
        degree[e.u] += 1
        degree[e.v] += 1
    verts = tuple(
        SkeletonVertex(v.id, v.position, degree[v.id]) for v in sk.vertices if degree[v.id] > 0
    )
    return SkeletonGraph(verts, tuple(edges), sk.resolution)


def build_skeleton(env: Environment, resolution: float | None = None, min_spur: float | None = None,
                   max_cells: int = DEFAULT_MAX_CELLS) -> SkeletonGraph:
    """Distance grid, extraction and spur pruning with the default knobs."""
    grid = distance_transform(env, resolution, max_cells)
    sk = extract_skeleton(grid, env)
    if min_spur is None:
        min_spur = 2 * env.robot_radius
    keep = (env.query.start, env.query.goal) if env.query is not None else ()
    return prune_spurs(sk, min_spur, keep)
