"""Path extraction, smoothing and scoring."""
from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .annotation import AnnotatedSkeleton, densify
from .geometry import Environment, Point2, clearance_many, segment_free
from .planner import Roadmap


class NoPathError(RuntimeError):
    pass


@dataclass
class Path:
    waypoints: list[Point2]
    length: float = 0.0
    min_clearance: float = math.nan
    extrema: dict = field(default_factory=dict)  # metric name -> worst value

    def __post_init__(self):
        self.waypoints = [Point2(float(p[0]), float(p[1])) for p in self.waypoints]
        self.length = path_length(self.waypoints)

    def array(self) -> np.ndarray:
        return np.asarray(self.waypoints, dtype=np.float64).reshape(-1, 2)


@dataclass
class PathScore:
    length: float
    min_clearance: float
    worst: dict
    corridor: list[int]
    score: float


def path_length(pts) -> float:
    return sum(math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in zip(pts[:-1], pts[1:]))


def extract_path(rm: Roadmap, start: int, goal: int) -> Path:
    """Shortest roadmap path by Dijkstra; equal-cost ties go to the lower node id."""
    if goal is None or not (0 <= start < rm.count and 0 <= goal < rm.count):
        raise NoPathError("goal not in roadmap")
    dist = {start: 0.0}
    prev = {start: None}
    heap = [(0.0, start)]
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u == goal:
            break
        for v, w in sorted(rm.adj[u]):
            nd = d + w
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                prev[v] = u
                heapq.heappush(heap, (nd, v))
    if goal not in done:
        raise NoPathError("goal unreachable in roadmap")
    seq, u = [], goal
    while u is not None:
        seq.append(u)
        u = prev[u]
    seq.reverse()
    return Path([rm.point(i) for i in seq])


def shortcut_smooth(p: Path, env: Environment, iterations: int = 100, rng_seed: int = 0) -> Path:
    """Random shortcutting: splice in any free straight segment between two waypoints."""
    pts = list(p.waypoints)
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    r = env.robot_radius
    for _ in range(iterations):
        if len(pts) < 3:
            break
        i, j = sorted(rng.choice(len(pts), size=2, replace=False).tolist())
        if j - i < 2:
            continue
        if segment_free(env, pts[i], pts[j], r, r / 2):
            pts = pts[: i + 1] + pts[j:]
    return Path(pts)


def sample_path(p: Path, step: float) -> np.ndarray:
    arr = p.array()
    if len(arr) == 1:
        return arr
    return densify(arr, step)


def measure(p: Path, env: Environment, ann: AnnotatedSkeleton | None = None, step: float | None = None) -> Path:
    """Fill in ``min_clearance`` and per-metric worst values by dense sampling."""
    if step is None:
        step = env.robot_radius / 4
    pts = sample_path(p, step)
    p.min_clearance = float(np.min(clearance_many(env, pts)))
    p.extrema = {}
    if ann is not None:
        for m in ann.metrics:
            p.extrema[m.name] = m.worst(m.field(pts))
    return p


def classify_corridor(p: Path, ann) -> list[int]:
    """Nearest skeleton edge per waypoint, consecutive duplicates collapsed."""
    graph = ann.graph if isinstance(ann, AnnotatedSkeleton) else ann
    if graph is None or graph.is_empty():
        return []
    segs = []
    owner = []
    for e in graph.edges:
        pl = e.polyline
        if len(pl) == 1:
            pl = np.vstack([pl, pl])
        segs.append(np.hstack([pl[:-1], pl[1:]]))
        owner.append(np.full(len(pl) - 1, e.id))
    segs = np.vstack(segs)
    owner = np.concatenate(owner)
    ax, ay, bx, by = segs.T
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    L2 = np.where(L2 == 0.0, 1.0, L2)
    seq = []
    for wx, wy in p.waypoints:
        t = np.clip(((wx - ax) * dx + (wy - ay) * dy) / L2, 0.0, 1.0)
        d = np.hypot(wx - (ax + t * dx), wy - (ay + t * dy))
        eid = int(owner[int(np.argmin(d))])
        if not seq or seq[-1] != eid:
            seq.append(eid)
    return seq


def score_path(p: Path, env: Environment, ann: AnnotatedSkeleton | None = None, study: str = "clearance") -> PathScore:
    """Length, clearance, worst metric values, corridor edges and one scalar score.

    The scalar is ``min_clearance`` for clearance studies and the negated
    worst value of the named field otherwise.
    """
    measure(p, env, ann)
    corridor = classify_corridor(p, ann) if ann is not None else []
    if study == "clearance":
        score = p.min_clearance
    else:
        score = -p.extrema[study]
    return PathScore(p.length, p.min_clearance, dict(p.extrema), corridor, score)


def corridor_label(p: Path, env: Environment) -> str:
    """Name of the declared corridor(s) the path passes through.

    A path passes a corridor when it comes within the corridor's half-width
    of its probe point. Multiple hits are joined with ``+``; none gives ``none``.
    """
    if not env.corridors:
        return ""
    pts = sample_path(p, env.robot_radius / 4)
    hits = []
    for name in sorted(env.corridors):
        c = env.corridors[name]
        d = np.min(np.hypot(pts[:, 0] - c["probe"][0], pts[:, 1] - c["probe"][1]))
        if d <= c["half_width"]:
            hits.append(name)
    return "+".join(hits) if hits else "none"


def dumps_path(p: Path, score: PathScore | None = None) -> str:
    d = {"waypoints": [list(w) for w in p.waypoints], "length": p.length}
    if score is not None:
        d["score"] = {
            "length": score.length,
            "min_clearance": score.min_clearance,
            "worst": score.worst,
            "corridor": score.corridor,
            "score": score.score,
        }
    return json.dumps(d, indent=1)


def loads_path(text: str) -> Path:
    return Path(json.loads(text)["waypoints"])


def is_valid(p: Path, env: Environment) -> bool:
    r = env.robot_radius
    return all(segment_free(env, a, b, r, r / 2) for a, b in zip(p.waypoints[:-1], p.waypoints[1:])) and (
        len(p.waypoints) != 1 or segment_free(env, p.waypoints[0], p.waypoints[0], r, r / 2)
    )

