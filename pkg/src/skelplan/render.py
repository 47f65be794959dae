"""SVG snapshots of environments, skeletons, roadmaps and paths."""
from __future__ import annotations

from dataclasses import dataclass

from .annotation import COST_FLOOR, AnnotatedSkeleton, edge_cost
from .geometry import Environment

LAYERS = ("environment", "skeleton", "regions", "roadmap", "path")

_GREEN = (26, 152, 80)
_YELLOW = (240, 200, 30)
_RED = (215, 48, 39)


class RenderError(ValueError):
    pass


@dataclass(frozen=True)
class RenderSpec:
    layers: tuple[str, ...] = ("environment", "skeleton", "path")
    metric: str = "clearance"
    size_px: int = 800

    def __post_init__(self):
        if not self.layers:
            raise RenderError("at least one layer is required")
        bad = [x for x in self.layers if x not in LAYERS]
        if bad:
            raise RenderError(f"unknown layer(s): {', '.join(bad)}")
        if self.size_px < 16:
            raise RenderError("canvas too small")


def _lerp(a, b, t):
    return tuple(round(x + (y - x) * t) for x, y in zip(a, b))


def cost_color(cost: float) -> tuple[int, int, int]:
    """Green for the best cost, yellow in the middle, red for the worst."""
    t = min(1.0, max(0.0, (cost - COST_FLOOR) / (1.0 - COST_FLOOR)))
    if t <= 0.5:
        return _lerp(_GREEN, _YELLOW, t * 2.0)
    return _lerp(_YELLOW, _RED, (t - 0.5) * 2.0)


def _hex(rgb) -> str:
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def render_svg(env: Environment, sk=None, ann: AnnotatedSkeleton | None = None, rm=None, path=None,
               spec: RenderSpec = RenderSpec(), regions=None) -> str:
    """One SVG 1.1 document; identical inputs give identical bytes."""
    if "skeleton" in spec.layers and sk is None and ann is None:
        raise RenderError("skeleton layer needs a skeleton")
    if "roadmap" in spec.layers and rm is None:
        raise RenderError("roadmap layer needs a roadmap")
    if "path" in spec.layers and path is None:
        raise RenderError("path layer needs a path")
    if "regions" in spec.layers and regions is None:
        raise RenderError("regions layer needs a region snapshot")
    if ann is not None and sk is None:
        sk = ann.graph

    xmin, ymin, xmax, ymax = env.bounds
    scale = spec.size_px / max(xmax - xmin, ymax - ymin)
    W, H = (xmax - xmin) * scale, (ymax - ymin) * scale

    def X(x):
        return f"{(x - xmin) * scale:.3f}"

    def Y(y):
        return f"{(ymax - y) * scale:.3f}"

    def pts(seq):
        return " ".join(f"{X(p[0])},{Y(p[1])}" for p in seq)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W:.3f}" height="{H:.3f}" '
        f'viewBox="0 0 {W:.3f} {H:.3f}">',
        f'<rect id="bounds" x="0" y="0" width="{W:.3f}" height="{H:.3f}" fill="white" stroke="black" stroke-width="2"/>',
    ]
    if "environment" in spec.layers:
        out.append('<g id="obstacles" fill="#555555" stroke="none">')
        for poly in env.obstacles:
            out.append(f'<polygon points="{pts(poly.vertices)}"/>')
        out.append("</g>")
    if "skeleton" in spec.layers:
        use_cost = ann is not None and ann.has_metric(spec.metric)
        out.append('<g id="skeleton" fill="none" stroke-width="3" stroke-linecap="round">')
        for e in sk.edges:
            color = _hex(cost_color(edge_cost(ann, e, spec.metric))) if use_cost else "#3366cc"
            out.append(f'<polyline data-edge="{e.id}" stroke="{color}" points="{pts(e.polyline)}"/>')
        out.append("</g>")
        out.append('<g id="skeleton-vertices" fill="black">')
        for v in sk.vertices:
            out.append(f'<circle cx="{X(v.position[0])}" cy="{Y(v.position[1])}" r="3"/>')
        out.append("</g>")
    if "regions" in spec.layers:
        out.append('<g id="regions" fill="#9ecae1" fill-opacity="0.4" stroke="#3182bd">')
        for r in regions:
            out.append(f'<circle cx="{X(r.center[0])}" cy="{Y(r.center[1])}" r="{r.radius * scale:.3f}"/>')
        out.append("</g>")
    if "roadmap" in spec.layers:
        xy = rm.xy
        out.append('<g id="roadmap" stroke="#999999" stroke-width="0.8">')
        for i, j, _ in rm.edges:
            out.append(f'<line x1="{X(xy[i, 0])}" y1="{Y(xy[i, 1])}" x2="{X(xy[j, 0])}" y2="{Y(xy[j, 1])}"/>')
        out.append("</g>")
    if "path" in spec.layers:
        out.append(f'<polyline id="path" fill="none" stroke="#7b3294" stroke-width="4" points="{pts(path.waypoints)}"/>')
    if env.query is not None:
        s, g = env.query.start, env.query.goal
        out.append(f'<circle id="start" cx="{X(s[0])}" cy="{Y(s[1])}" r="6" fill="#2166ac"/>')
        out.append(f'<circle id="goal" cx="{X(g[0])}" cy="{Y(g[1])}" r="6" fill="#b2182b"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
