"""Per-edge bottleneck annotation of a skeleton and its normalised costs."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .geometry import Environment, clearance_many
from .skeleton import SkeletonEdge, SkeletonGraph

HIGHER_BETTER = "higher_better"
LOWER_BETTER = "lower_better"
COST_FLOOR = 0.05


class AnnotationError(ValueError):
    pass


@dataclass(frozen=True)
class Gaussian:
    cx: float
    cy: float
    amplitude: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise AnnotationError("gaussian sigma must be positive")


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Clearance, or a baseline plus a sum of signed Gaussian wells/barriers."""

    name: str
    kind: Literal["clearance", "synthetic"] = "synthetic"
    baseline: float = 0.0
    gaussians: tuple[Gaussian, ...] = ()
    env: Environment | None = None
    sense: str = LOWER_BETTER

    @classmethod
    def clearance(cls, env: Environment, name: str = "clearance") -> "ScalarField":
        return cls(name, "clearance", env=env, sense=HIGHER_BETTER)

    def __call__(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.float64).reshape(-1, 2)
        if self.kind == "clearance":
            if self.env is None:
                raise AnnotationError("clearance field needs an environment")
            return clearance_many(self.env, pts)
        out = np.full(len(pts), float(self.baseline))
        for g in self.gaussians:
            d2 = (pts[:, 0] - g.cx) ** 2 + (pts[:, 1] - g.cy) ** 2
            out += g.amplitude * np.exp(-d2 / (2.0 * g.sigma * g.sigma))
        return out

    def lipschitz(self) -> float:
        """Upper bound on the field's gradient norm."""
        if self.kind == "clearance":
            return 1.0
        return sum(abs(g.amplitude) / g.sigma for g in self.gaussians) * math.exp(-0.5)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "sense": self.sense,
            "baseline": self.baseline,
            "gaussians": [[g.cx, g.cy, g.amplitude, g.sigma] for g in self.gaussians],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScalarField":
        gs = []
        for g in d.get("gaussians", []):
            if isinstance(g, dict):
                gs.append(Gaussian(float(g["cx"]), float(g["cy"]), float(g["amplitude"]), float(g["sigma"])))
            else:
                gs.append(Gaussian(*map(float, g)))
        sense = d.get("sense", LOWER_BETTER)
        if sense not in (HIGHER_BETTER, LOWER_BETTER):
            raise AnnotationError(f"unknown sense {sense!r}")
        return cls(str(d["name"]), "synthetic", float(d.get("baseline", 0.0)), tuple(gs), sense=sense)


@dataclass(frozen=True)
class MetricSpec:
    name: str
    field: ScalarField
    sense: str = HIGHER_BETTER

    def __post_init__(self):
        if self.sense not in (HIGHER_BETTER, LOWER_BETTER):
            raise AnnotationError(f"unknown sense {self.sense!r}")

    def worst(self, values) -> float:
        """Bottleneck of a sample set: min if higher is better, else max."""
        return float(np.min(values) if self.sense == HIGHER_BETTER else np.max(values))


def env_metrics(env: Environment) -> list[MetricSpec]:
    """Clearance plus every synthetic field declared on ``env``."""
    out = [MetricSpec("clearance", ScalarField.clearance(env), HIGHER_BETTER)]
    for name in sorted(env.fields):
        f = env.fields[name]
        out.append(MetricSpec(name, f, f.sense))
    return out


@dataclass(frozen=True, eq=False)
class AnnotatedSkeleton:
    graph: SkeletonGraph
    metrics: tuple[MetricSpec, ...]
    edge_values: dict  # (edge id, metric name) -> bottleneck value
    min_edge_length: float
    ranges: dict = field(default_factory=dict)  # metric name -> (vmin, vmax)

    def metric(self, name: str) -> MetricSpec:
        for m in self.metrics:
            if m.name == name:
                return m
        raise AnnotationError(f"metric {name!r} not registered")

    def has_metric(self, name: str) -> bool:
        return any(m.name == name for m in self.metrics)

    def cost(self, edge, metric: str) -> float:
        return edge_cost(self, edge, metric)

    def triples(self) -> list[tuple[int, str, float]]:
        return [(e.id, m.name, self.edge_values[e.id, m.name]) for e in self.graph.edges for m in self.metrics]

    def to_dict(self) -> dict:
        d = self.graph.to_dict()
        d["min_edge_length"] = self.min_edge_length
        d["annotations"] = [[eid, name, v] for eid, name, v in self.triples()]
        return d


def _densify_batch(polylines, spacing: float) -> tuple[np.ndarray, np.ndarray]:
    """Densify several polylines at once; returns the stacked points and each one's start row."""
    firsts, seg_a, seg_b, owner = [], [], [], []
    for k, pl in enumerate(polylines):
        pl = np.asarray(pl, dtype=np.float64).reshape(-1, 2)
        firsts.append(pl[:1])
        seg_a.append(pl[:-1])
        seg_b.append(pl[1:])
        owner.append(np.full(len(pl) - 1, k))
    a, b, owner = np.vstack(seg_a), np.vstack(seg_b), np.concatenate(owner)
    n = np.maximum(1, np.ceil(np.hypot(b[:, 0] - a[:, 0], b[:, 1] - a[:, 1]) / spacing)).astype(np.int64)
    seg = np.repeat(np.arange(len(a)), n)
    j = np.arange(len(seg)) - np.repeat(np.cumsum(n) - n, n) + 1
    t = (j / n[seg])[:, None]
    interp = a[seg] + (b[seg] - a[seg]) * t
    # each polyline contributes its first point followed by its interpolated run
    counts = np.bincount(owner[seg], minlength=len(polylines)) + 1
    starts = np.cumsum(counts) - counts
    out = np.empty((int(counts.sum()), 2))
    out[starts] = np.vstack(firsts)
    mask = np.ones(len(out), dtype=bool)
    mask[starts] = False
    out[mask] = interp
    return out, starts


def densify(polyline: np.ndarray, spacing: float) -> np.ndarray:
    """Polyline points plus interpolated points so no gap exceeds ``spacing``."""
    pts = np.asarray(polyline, dtype=np.float64)
    if len(pts) < 2:
        return pts.copy()
    return _densify_batch([pts], spacing)[0]


def annotate(sk: SkeletonGraph, metrics) -> AnnotatedSkeleton:
    """Record each metric's worst value along every skeleton edge."""
    if sk.is_empty():
        raise AnnotationError("cannot annotate an empty skeleton")
    metrics = tuple(metrics)
    names = [m.name for m in metrics]
    if len(set(names)) != len(names):
        raise AnnotationError("metric names must be unique")
    polys = [e.polyline if len(e.polyline) > 1 else np.vstack([e.polyline, e.polyline]) for e in sk.edges]
    allpts, starts = _densify_batch(polys, sk.resolution)
    values, ranges = {}, {}
    for m in metrics:
        v = m.field(allpts)
        if not np.all(np.isfinite(v)):
            raise AnnotationError(f"metric {m.name!r} is not finite on the skeleton")
        reduce = np.minimum if m.sense == HIGHER_BETTER else np.maximum
        per_edge = reduce.reduceat(v, starts).tolist()
        for e, val in zip(sk.edges, per_edge):
            values[e.id, m.name] = val
        ranges[m.name] = (min(per_edge), max(per_edge))
    min_len = min(e.length for e in sk.edges)
    if not min_len > 0:
        raise AnnotationError("skeleton has a zero-length edge")
    return AnnotatedSkeleton(sk, metrics, values, min_len, ranges)


def edge_cost(ann: AnnotatedSkeleton, edge, metric: str) -> float:
    """Map an edge's bottleneck into ``[COST_FLOOR, 1]``; smaller is better."""
    m = ann.metric(metric)
    eid = edge.id if isinstance(edge, SkeletonEdge) else int(edge)
    v = ann.edge_values[eid, metric]
    vmin, vmax = ann.ranges[metric]
    if vmax == vmin:
        return 1.0
    t = (v - vmin) / (vmax - vmin)
    if m.sense == HIGHER_BETTER:
        t = 1.0 - t
    return COST_FLOOR + (1.0 - COST_FLOOR) * t
