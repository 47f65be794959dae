"""Skeleton-guided RRT/RRG with annotated region selection.

Strategies:

``AB``
    regions on the annotated skeleton, weighted by edge cost raised to the
    relative edge length.
``DR``
    the same regions weighted only by their own extension success rate.
``PLAIN_RRT``
    uniform sampling, no skeleton.
``MA_RRT``
    uniform sampling with every new node pushed onto the medial axis.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .annotation import AnnotatedSkeleton, edge_cost
from .geometry import Environment, GeometryError, Point2, Query, is_free, nearest_boundary_point, segment_free
from .skeleton import SkeletonGraph, SkeletonVertex

STRATEGIES = ("AB", "DR", "PLAIN_RRT", "MA_RRT")
GROWTH = ("rrt_extend", "rrg_connect")
SELECTION = ("greedy_min", "softmin")
FORWARD, BACKWARD = 1, -1


class _WholeEnv:
    __slots__ = ()

    def __repr__(self):
        return "WHOLE_ENV"


WHOLE_ENV = _WholeEnv()


class PlannerError(RuntimeError):
    pass


@dataclass
class Region:
    edge_id: int
    direction: int
    index: int
    center: Point2
    radius: float
    successes: int = 0
    attempts: int = 0
    fail_streak: int = 0
    at_end: bool = False

    @property
    def key(self) -> tuple[int, int]:
        return (self.edge_id, self.direction)


class Roadmap:
    """Free configurations and local-plan edges; a tree or a general graph."""

    def __init__(self, mode: str = "tree", capacity: int = 1024):
        if mode not in ("tree", "graph"):
            raise ValueError(f"unknown roadmap mode {mode!r}")
        self.mode = mode
        self._xy = np.zeros((capacity, 2))
        self.count = 0
        self.parent: list[int] = []
        self.edges: list[tuple[int, int, float]] = []
        self.adj: list[list[tuple[int, float]]] = []

    def __len__(self):
        return self.count

    @property
    def xy(self) -> np.ndarray:
        return self._xy[: self.count]

    def point(self, i: int) -> Point2:
        return Point2(float(self._xy[i, 0]), float(self._xy[i, 1]))

    def add_node(self, p, parent: int = -1) -> int:
        if self.count == len(self._xy):
            self._xy = np.vstack([self._xy, np.zeros_like(self._xy)])
        i = self.count
        self._xy[i] = (p[0], p[1])
        self.count += 1
        self.parent.append(parent)
        self.adj.append([])
        if parent >= 0:
            self.add_edge(parent, i)
        return i

    def add_edge(self, i: int, j: int) -> float:
        d = float(math.hypot(*(self._xy[i] - self._xy[j])))
        self.edges.append((i, j, d))
        self.adj[i].append((j, d))
        self.adj[j].append((i, d))
        return d

    def has_edge(self, i: int, j: int) -> bool:
        return any(k == j for k, _ in self.adj[i])

    def nearest(self, p) -> int:
        return int(kernels.nearest(self._xy, self.count, float(p[0]), float(p[1])))

    def k_nearest(self, p, k: int, exclude=()) -> list[int]:
        d = (self.xy[:, 0] - p[0]) ** 2 + (self.xy[:, 1] - p[1]) ** 2
        order = np.argsort(d, kind="stable")
        out = []
        for i in order.tolist():
            if i in exclude:
                continue
            out.append(i)
            if len(out) == k:
                break
        return out

    def dumps(self) -> str:
        lines = [f"# roadmap mode={self.mode} nodes={self.count} edges={len(self.edges)}"]
        for i in range(self.count):
            x, y = self._xy[i]
            lines.append(f"n {i} {float(x)!r} {float(y)!r} {self.parent[i]}")
        for i, j, d in self.edges:
            lines.append(f"e {i} {j} {d!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Roadmap":
        mode = "tree"
        nodes, edges = [], []
        for line in text.splitlines():
            if line.startswith("#"):
                for tok in line.split():
                    if tok.startswith("mode="):
                        mode = tok[5:]
            elif line.startswith("n "):
                _, i, x, y, par = line.split()
                nodes.append((int(i), float(x), float(y), int(par)))
            elif line.startswith("e "):
                _, i, j, _d = line.split()
                edges.append((int(i), int(j)))
        rm = cls(mode, max(1, len(nodes)))
        for _, x, y, par in sorted(nodes):
            rm._xy[rm.count] = (x, y)
            rm.count += 1
            rm.parent.append(par)
            rm.adj.append([])
        for i, j in edges:
            rm.add_edge(i, j)
        return rm


@dataclass
class PlannerConfig:
    strategy: str = "AB"
    growth: str = "rrt_extend"
    bias_metric: str | None = "clearance"
    p_whole_env: float = 0.05
    extend_step: float | None = None  # defaults to the robot radius
    rrg_k: int = 5
    max_iterations: int = 20000
    time_budget: float = 10.0
    selection_rule: str = "softmin"
    softmin_temperature: float = 1.0
    rng_seed: int = 0
    stall_limit: int = 20
    stall_penalty: float = 2.0
    ma_tol: float | None = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.growth not in GROWTH:
            raise ValueError(f"unknown growth mode {self.growth!r}")
        if self.selection_rule not in SELECTION:
            raise ValueError(f"unknown selection rule {self.selection_rule!r}")
        if not 0.0 <= self.p_whole_env < 1.0:
            raise ValueError("p_whole_env must lie in [0, 1)")
        if self.strategy in ("AB", "DR") and not self.p_whole_env > 0:
            raise ValueError("guided strategies need p_whole_env > 0 to stay complete")
        if self.strategy == "AB" and not self.bias_metric:
            raise ValueError("AB needs a bias metric")
        if self.extend_step is not None and not self.extend_step > 0:
            raise ValueError("extend_step must be positive")
        if not self.softmin_temperature > 0:
            raise ValueError("softmin_temperature must be positive")
        if self.rrg_k < 0:
            raise ValueError("rrg_k must be non-negative")


@dataclass
class PlanStats:
    iterations: int = 0
    nodes: int = 0
    edges: int = 0
    wall_ms: float = 0.0
    success: bool = False
    edge_visit_order: list = field(default_factory=list)
    selections: dict = field(default_factory=dict)  # edge id -> count; -1 for whole env

    def dumps(self, timing: bool = True) -> str:
        rows = [
            ("iterations", self.iterations),
            ("nodes", self.nodes),
            ("edges", self.edges),
            ("wall_ms", f"{self.wall_ms:.3f}" if timing else ""),
            ("success", str(self.success).lower()),
            ("edge_visit_order", ",".join(map(str, self.edge_visit_order))),
            ("selections", ",".join(f"{k}:{v}" for k, v in sorted(self.selections.items()))),
        ]
        return "".join(f"{k}={v}\n" for k, v in rows)


@dataclass
class PlanResult:
    roadmap: Roadmap
    stats: PlanStats
    start_id: int = 0
    goal_id: int | None = None
    regions: list = field(default_factory=list)  # active regions when the run stopped

    @property
    def success(self) -> bool:
        return self.goal_id is not None


class PlannerState:
    def __init__(self, env: Environment, guide, config: PlannerConfig):
        self.env = env
        if isinstance(guide, AnnotatedSkeleton):
            self.ann, self.graph = guide, guide.graph
        else:
            self.ann, self.graph = None, guide
        self.active_regions: list[Region] = []
        self.visited_edges: set[tuple[int, int]] = set()
        self.roadmap = Roadmap("graph" if config.growth == "rrg_connect" else "tree")
        self.iteration = 0
        self.rng = np.random.Generator(np.random.PCG64(config.rng_seed))
        self.stats = PlanStats()
        self.last_added: int | None = None
        self.step = config.extend_step if config.extend_step is not None else env.robot_radius
        self.check_step = env.robot_radius / 2
        self.ma_tol = config.ma_tol if config.ma_tol is not None else env.robot_radius / 8


# -- regions -------------------------------------------------------------------


def _spawn_index(n: int, direction: int) -> int:
    if n < 2:
        return 0
    return 1 if direction == FORWARD else n - 2


def create_active_regions(state: PlannerState, v: SkeletonVertex) -> list[Region]:
    """Open a region on every unexplored edge leaving ``v``."""
    new = []
    for e in state.graph.incident(v.id):
        dirs = []
        if e.u == v.id:
            dirs.append(FORWARD)
        if e.v == v.id:
            dirs.append(BACKWARD)
        for d in dirs:
            if (e.id, d) in state.visited_edges:
                continue
            idx = _spawn_index(len(e.polyline), d)
            r = Region(e.id, d, idx, Point2(*map(float, e.polyline[idx])), state.env.robot_radius)
            state.visited_edges.add((e.id, d))
            state.active_regions.append(r)
            state.stats.edge_visit_order.append(e.id)
            new.append(r)
    return new


def _stall_exponent(r: Region, config: PlannerConfig) -> int:
    # one penalty factor per failure from the stall limit on, so a stuck
    # region loses priority however small its weight started
    return max(0, r.fail_streak - config.stall_limit + 1)


def region_log_weights(state: PlannerState, config: PlannerConfig, ann: AnnotatedSkeleton | None) -> np.ndarray:
    """Natural log of each active region's selection weight (lower wins)."""
    out = np.empty(len(state.active_regions))
    for k, r in enumerate(state.active_regions):
        if config.strategy == "AB":
            e = ann.graph.edge(r.edge_id)
            a = edge_cost(ann, e, config.bias_metric)
            lw = (e.length / ann.min_edge_length) * math.log(a)
        else:
            lw = math.log((1 + r.attempts) / (1 + r.successes))
        lw += _stall_exponent(r, config) * math.log(config.stall_penalty)
        out[k] = lw
    return out


def region_weights(state: PlannerState, config: PlannerConfig, ann: AnnotatedSkeleton | None) -> list[float]:
    """Selection weights in linear space; AB weights are ``a ** (l / minL)``."""
    out = []
    for r in state.active_regions:
        if config.strategy == "AB":
            e = ann.graph.edge(r.edge_id)
            w = edge_cost(ann, e, config.bias_metric) ** (e.length / ann.min_edge_length)
        else:
            w = (1 + r.attempts) / (1 + r.successes)
        w *= config.stall_penalty ** _stall_exponent(r, config)
        out.append(w)
    return out


def select_region(state: PlannerState, config: PlannerConfig, ann: AnnotatedSkeleton | None):
    """Pick the next sampling target: an active region or ``WHOLE_ENV``."""
    if config.strategy in ("PLAIN_RRT", "MA_RRT"):
        return WHOLE_ENV
    if state.rng.random() < config.p_whole_env or not state.active_regions:
        return WHOLE_ENV
    lw = region_log_weights(state, config, ann)
    if config.selection_rule == "greedy_min":
        keys = [(lw[k], r.edge_id, -r.direction) for k, r in enumerate(state.active_regions)]
        return state.active_regions[min(range(len(keys)), key=keys.__getitem__)]
    logits = -lw / config.softmin_temperature
    p = np.exp(logits - logits.max())
    cdf = np.cumsum(p / p.sum())
    k = int(np.searchsorted(cdf, state.rng.random() * cdf[-1], side="right"))
    return state.active_regions[min(k, len(cdf) - 1)]


def advance_region(state: PlannerState, r: Region) -> None:
    """Slide ``r`` ahead of a fresh node that landed inside it."""
    if state.last_added is None:
        return
    q = state.roadmap.xy[state.last_added]
    if math.hypot(q[0] - r.center.x, q[1] - r.center.y) > r.radius:
        return
    pts = state.graph.edge(r.edge_id).polyline
    idx = r.index
    while 0 <= idx < len(pts):
        if math.hypot(pts[idx, 0] - q[0], pts[idx, 1] - q[1]) > r.radius:
            break
        idx += r.direction
    if idx < 0 or idx >= len(pts):
        r.at_end = True
        return
    r.index = idx
    r.center = Point2(float(pts[idx, 0]), float(pts[idx, 1]))


def region_reached_end(state: PlannerState, r: Region) -> bool:
    return r.at_end


def _end_vertex(state: PlannerState, r: Region) -> SkeletonVertex:
    e = state.graph.edge(r.edge_id)
    return state.graph.vertex(e.v if r.direction == FORWARD else e.u)


# -- growth --------------------------------------------------------------------


def _sample(state: PlannerState, target) -> tuple[float, float]:
    rng = state.rng
    if target is WHOLE_ENV:
        xmin, ymin, xmax, ymax = state.env.bounds
        return xmin + (xmax - xmin) * rng.random(), ymin + (ymax - ymin) * rng.random()
    rho = target.radius * math.sqrt(rng.random())
    theta = 2.0 * math.pi * rng.random()
    return target.center.x + rho * math.cos(theta), target.center.y + rho * math.sin(theta)


def grow_roadmap(state: PlannerState, target, config: PlannerConfig, env: Environment) -> bool:
    """One extend step toward a sample drawn from ``target``."""
    rm = state.roadmap
    state.last_added = None
    qx, qy = _sample(state, target)
    n = rm.nearest((qx, qy))
    nx, ny = rm.xy[n]
    dx, dy = qx - nx, qy - ny
    d = math.hypot(dx, dy)
    ok = False
    if d > 0.0:
        if d > state.step:
            qx, qy = nx + dx * (state.step / d), ny + dy * (state.step / d)
        rad = env.robot_radius
        if config.strategy == "MA_RRT" and is_free(env, (qx, qy), 0.0):
            qx, qy = ma_retract(env, (qx, qy), state.ma_tol)
        if is_free(env, (qx, qy), rad) and segment_free(env, (nx, ny), (qx, qy), rad, state.check_step):
            new = rm.add_node((qx, qy), n)
            if config.growth == "rrg_connect":
                for m in rm.k_nearest((qx, qy), config.rrg_k, exclude=(n, new)):
                    if segment_free(env, (qx, qy), rm.xy[m], rad, state.check_step):
                        rm.add_edge(new, m)
            state.last_added = new
            ok = True
    if target is not WHOLE_ENV:
        target.attempts += 1
        if ok:
            target.successes += 1
            target.fail_streak = 0
        else:
            target.fail_streak += 1
    return ok


def ma_retract(env: Environment, p, tol: float) -> Point2:
    """Push ``p`` directly away from its closest boundary point onto the medial axis."""
    if not is_free(env, p, 0.0):
        raise GeometryError(f"cannot retract non-free point {tuple(p)}")
    px, py = float(p[0]), float(p[1])
    c, d = nearest_boundary_point(env, (px, py))
    ux, uy = (px - c.x) / d, (py - c.y) / d
    same_tol = 1e-7 * (1.0 + env.width + env.height)

    def same(t):
        q = (px + ux * t, py + uy * t)
        if not env.contains(q):
            return False
        c2, _ = nearest_boundary_point(env, q)
        return abs(c2.x - c.x) <= same_tol and abs(c2.y - c.y) <= same_tol

    lo, hi = 0.0, None
    h = max(tol, 0.25 * d)
    while hi is None:
        if same(lo + h):
            lo += h
            h *= 1.5
        else:
            hi = lo + h
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if same(mid):
            lo = mid
        else:
            hi = mid
    return Point2(px + ux * lo, py + uy * lo)


# -- main loop -----------------------------------------------------------------


def _try_goal(state: PlannerState, config: PlannerConfig, node: int, goal) -> int | None:
    rm, env = state.roadmap, state.env
    q = rm.xy[node]
    if math.hypot(q[0] - goal[0], q[1] - goal[1]) > state.step:
        return None
    if not segment_free(env, q, goal, env.robot_radius, state.check_step):
        return None
    g = rm.add_node(goal, node)
    if config.growth == "rrg_connect":
        for m in rm.k_nearest(goal, config.rrg_k, exclude=(node, g)):
            if segment_free(env, goal, rm.xy[m], env.robot_radius, state.check_step):
                rm.add_edge(g, m)
    return g


def plan(env: Environment, ann, query: Query, config: PlannerConfig) -> PlanResult:
    """Grow a roadmap from ``query.start`` until the goal connects or the budget runs out.

    ``ann`` is an :class:`AnnotatedSkeleton` (required for AB), a plain
    :class:`SkeletonGraph` (enough for DR), or ``None`` for the unguided
    baselines.
    """
    r = env.robot_radius
    if not is_free(env, query.start, r) or not is_free(env, query.goal, r):
        raise PlannerError("query endpoints must be free")
    if config.strategy in ("AB", "DR") and ann is None:
        raise PlannerError(f"strategy {config.strategy} needs a skeleton")
    if config.strategy == "AB":
        if not isinstance(ann, AnnotatedSkeleton):
            raise PlannerError("AB needs an annotated skeleton")
        if not ann.has_metric(config.bias_metric):
            raise PlannerError(f"bias metric {config.bias_metric!r} not annotated")
    guided = config.strategy in ("AB", "DR")
    state = PlannerState(env, ann if guided else None, config)
    annotated = state.ann
    rm, stats = state.roadmap, state.stats
    t0 = time.perf_counter()
    deadline = t0 + config.time_budget
    start = rm.add_node(query.start)
    goal_id = _try_goal(state, config, start, query.goal)
    if guided and state.graph is not None and not state.graph.is_empty():
        create_active_regions(state, state.graph.nearest_vertex(query.start, env))

    while goal_id is None and state.iteration < config.max_iterations:
        if time.perf_counter() > deadline:
            break
        state.iteration += 1
        target = select_region(state, config, annotated)
        key = -1 if target is WHOLE_ENV else target.edge_id
        stats.selections[key] = stats.selections.get(key, 0) + 1
        grown = grow_roadmap(state, target, config, env)
        if target is not WHOLE_ENV:
            advance_region(state, target)
            if region_reached_end(state, target):
                state.active_regions.remove(target)
                state.visited_edges.add((target.edge_id, -target.direction))
                create_active_regions(state, _end_vertex(state, target))
        if grown:
            goal_id = _try_goal(state, config, state.last_added, query.goal)

    stats.iterations = state.iteration
    stats.nodes = rm.count
    stats.edges = len(rm.edges)
    stats.success = goal_id is not None
    stats.wall_ms = (time.perf_counter() - t0) * 1000.0
    return PlanResult(rm, stats, start, goal_id, list(state.active_regions))
