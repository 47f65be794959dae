"""Environment representation and disc-robot validity checks."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels


class GeometryError(ValueError):
    """Invalid geometry, or a query outside the environment's domain."""


class Point2(NamedTuple):
    x: float
    y: float

    def dist(self, other) -> float:
        return math.hypot(self.x - other[0], self.y - other[1])


def as_point(p) -> Point2:
    x, y = float(p[0]), float(p[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise GeometryError(f"non-finite point {p!r}")
    return Point2(x, y)


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return (v > 0) - (v < 0)

    def on_seg(a, b, c):
        return min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    return (
        (o1 == 0 and on_seg(p1, p2, q1))
        or (o2 == 0 and on_seg(p1, p2, q2))
        or (o3 == 0 and on_seg(q1, q2, p1))
        or (o4 == 0 and on_seg(q1, q2, p2))
    )


@dataclass(frozen=True)
class Polygon:
    """Simple polygon; vertices are stored counter-clockwise."""

    vertices: tuple[Point2, ...]

    def __post_init__(self):
        verts = tuple(as_point(v) for v in self.vertices)
        if len(verts) >= 2 and verts[0] == verts[-1]:
            verts = verts[:-1]
        if len(verts) < 3:
            raise GeometryError("polygon needs at least 3 vertices")
        n = len(verts)
        for k in range(n):
            if verts[k] == verts[(k + 1) % n]:
                raise GeometryError("polygon has repeated consecutive vertices")
        if self._signed_area(verts) == 0.0:
            raise GeometryError("degenerate polygon (zero area)")
        for a in range(n):
            for b in range(a + 1, n):
                if b == a + 1 or (a == 0 and b == n - 1):
                    continue
                if _segments_cross(verts[a], verts[(a + 1) % n], verts[b], verts[(b + 1) % n]):
                    raise GeometryError("polygon is not simple")
        if self._signed_area(verts) < 0:
            verts = tuple(reversed(verts))
        object.__setattr__(self, "vertices", verts)

    @staticmethod
    def _signed_area(verts) -> float:
        s = 0.0
        for k in range(len(verts)):
            x0, y0 = verts[k]
            x1, y1 = verts[(k + 1) % len(verts)]
            s += x0 * y1 - x1 * y0
        return 0.5 * s

    @classmethod
    def rect(cls, x0, y0, x1, y1) -> "Polygon":
        return cls(((x0, y0), (x1, y0), (x1, y1), (x0, y1)))

    def edges(self):
        n = len(self.vertices)
        for k in range(n):
            yield self.vertices[k], self.vertices[(k + 1) % n]


@dataclass(frozen=True)
class Query:
    start: Point2
    goal: Point2


@dataclass(frozen=True)
class Environment:
    """Axis-aligned bounded world with polygonal obstacles and a disc robot.

    ``bounds`` is ``(xmin, ymin, xmax, ymax)``. ``fields`` holds named scalar
    fields (see :mod:`skelplan.annotation`), ``corridors`` optional named
    probe points used to label which passage a path took.
    """

    bounds: tuple[float, float, float, float]
    obstacles: tuple[Polygon, ...] = ()
    robot_radius: float = 0.5
    query: Query | None = None
    fields: dict = field(default_factory=dict)
    corridors: dict = field(default_factory=dict)

    def __post_init__(self):
        b = tuple(float(v) for v in self.bounds)
        if len(b) != 4 or not all(math.isfinite(v) for v in b) or b[2] <= b[0] or b[3] <= b[1]:
            raise GeometryError(f"invalid bounds {self.bounds!r}")
        object.__setattr__(self, "bounds", b)
        obstacles = tuple(o if isinstance(o, Polygon) else Polygon(tuple(o)) for o in self.obstacles)
        object.__setattr__(self, "obstacles", obstacles)
        for poly in obstacles:
            for v in poly.vertices:
                if not (b[0] <= v.x <= b[2] and b[1] <= v.y <= b[3]):
                    raise GeometryError(f"obstacle vertex {tuple(v)} outside bounds")
        r = float(self.robot_radius)
        if not (r > 0 and r < min(b[2] - b[0], b[3] - b[1]) / 2):
            raise GeometryError(f"robot_radius {r} out of range")
        object.__setattr__(self, "robot_radius", r)
        if self.query is not None:
            q = Query(as_point(self.query.start), as_point(self.query.goal))
            object.__setattr__(self, "query", q)

        segs = [(a.x, a.y, c.x, c.y) for poly in obstacles for a, c in poly.edges()]
        offsets = np.zeros(len(obstacles) + 1, dtype=np.int64)
        offsets[1:] = np.cumsum([len(p.vertices) for p in obstacles])
        object.__setattr__(self, "_segs", np.ascontiguousarray(np.asarray(segs, dtype=np.float64).reshape(-1, 4)))
        object.__setattr__(self, "_offsets", offsets)

    @property
    def width(self) -> float:
        return self.bounds[2] - self.bounds[0]

    @property
    def height(self) -> float:
        return self.bounds[3] - self.bounds[1]

    def contains(self, p) -> bool:
        xmin, ymin, xmax, ymax = self.bounds
        return xmin <= p[0] <= xmax and ymin <= p[1] <= ymax

    def with_robot_radius(self, r: float) -> "Environment":
        return Environment(self.bounds, self.obstacles, r, self.query, dict(self.fields), dict(self.corridors))

    def with_query(self, query: Query) -> "Environment":
        return Environment(self.bounds, self.obstacles, self.robot_radius, query, dict(self.fields), dict(self.corridors))

    def boundary_segments(self) -> np.ndarray:
        """All obstacle edges plus the four world edges, as ``(m, 4)``."""
        xmin, ymin, xmax, ymax = self.bounds
        box = np.array(
            [[xmin, ymin, xmax, ymin], [xmax, ymin, xmax, ymax], [xmax, ymax, xmin, ymax], [xmin, ymax, xmin, ymin]]
        )
        return np.vstack([self._segs, box])

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "bounds": list(self.bounds),
            "robot_radius": self.robot_radius,
            "obstacles": [[list(v) for v in p.vertices] for p in self.obstacles],
        }
        if self.query is not None:
            d["query"] = {"start": list(self.query.start), "goal": list(self.query.goal)}
        if self.fields:
            d["fields"] = [f.to_dict() for f in self.fields.values()]
        if self.corridors:
            d["corridors"] = {
                k: {"probe": list(v["probe"]), "half_width": v["half_width"]} for k, v in self.corridors.items()
            }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Environment":
        from .annotation import ScalarField

        try:
            query = None
            if "query" in d:
                query = Query(as_point(d["query"]["start"]), as_point(d["query"]["goal"]))
            fields = {}
            for fd in d.get("fields", []):
                f = ScalarField.from_dict(fd)
                fields[f.name] = f
            return cls(
                bounds=tuple(d["bounds"]),
                obstacles=tuple(Polygon(tuple(map(tuple, p))) for p in d.get("obstacles", [])),
                robot_radius=d["robot_radius"],
                query=query,
                fields=fields,
                corridors={
                    k: {"probe": as_point(v["probe"]), "half_width": float(v["half_width"])}
                    for k, v in d.get("corridors", {}).items()
                },
            )
        except (KeyError, TypeError, IndexError) as exc:
            raise GeometryError(f"malformed environment description: {exc}") from exc

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def load(cls, path) -> "Environment":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise GeometryError(f"{path}: {exc}") from exc
        return cls.from_dict(data)


def clearance(env: Environment, p) -> float:
    """Distance from ``p`` to the nearest obstacle edge or world edge.

    Points inside an obstacle have clearance 0.
    """
    x, y = float(p[0]), float(p[1])
    if not env.contains((x, y)):
        raise GeometryError(f"point {(x, y)} outside environment bounds")
    return kernels.clearance(x, y, env._segs, env._offsets, env.bounds)


def clearance_many(env: Environment, pts) -> np.ndarray:
    pts = np.ascontiguousarray(np.asarray(pts, dtype=np.float64).reshape(-1, 2))
    xmin, ymin, xmax, ymax = env.bounds
    if pts.size and (
        pts[:, 0].min() < xmin or pts[:, 0].max() > xmax or pts[:, 1].min() < ymin or pts[:, 1].max() > ymax
    ):
        raise GeometryError("points outside environment bounds")
    return kernels.clearance_many(pts, env._segs, env._offsets, env.bounds)


def is_free(env: Environment, p, radius: float) -> bool:
    """True iff a disc of ``radius`` at ``p`` clears every obstacle strictly."""
    if radius < 0:
        raise GeometryError("radius must be non-negative")
    return bool(kernels.is_free(float(p[0]), float(p[1]), float(radius), env._segs, env._offsets, env.bounds))


def segment_free(env: Environment, a, b, radius: float, step: float | None = None) -> bool:
    """Check ``is_free`` at points spaced at most ``step`` along ``a -> b``.

    ``step`` defaults to half the robot radius.
    """
    if step is None:
        step = env.robot_radius / 2
    if step <= 0:
        raise GeometryError("step must be positive")
    return bool(
        kernels.segment_free(
            float(a[0]), float(a[1]), float(b[0]), float(b[1]), float(radius), float(step),
            env._segs, env._offsets, env.bounds,
        )
    )


def point_segment_distance(p, a, b) -> float:
    dx, dy = b[0] - a[0], b[1] - a[1]
    L2 = dx * dx + dy * dy
    if L2 == 0.0:
        return math.hypot(p[0] - a[0], p[1] - a[1])
    t = min(max(((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / L2, 0.0), 1.0)
    return math.hypot(p[0] - (a[0] + t * dx), p[1] - (a[1] + t * dy))


def nearest_boundary_point(env: Environment, p) -> tuple[Point2, float]:
    """Closest point on any obstacle or world edge, and its distance."""
    segs = env.boundary_segments()
    ax, ay, bx, by = segs[:, 0], segs[:, 1], segs[:, 2], segs[:, 3]
    dx, dy = bx - ax, by - ay
    t = np.clip(((p[0] - ax) * dx + (p[1] - ay) * dy) / (dx * dx + dy * dy), 0.0, 1.0)
    cx, cy = ax + t * dx, ay + t * dy
    d = np.hypot(p[0] - cx, p[1] - cy)
    k = int(np.argmin(d))
    return Point2(float(cx[k]), float(cy[k])), float(d[k])
