"""Builtin environments and the multi-seed planner comparison harness."""
from __future__ import annotations

import csv
import io
import json
import math
import statistics
import time
from dataclasses import dataclass, field

from .annotation import Gaussian, ScalarField, annotate, env_metrics
from .geometry import Environment, Point2, Polygon, Query
from .pathing import NoPathError, corridor_label, extract_path, score_path
from .planner import PlannerConfig, plan
from .skeleton import build_skeleton

BUILTINS = ("walls", "boxes2d", "twotunnel")
ROBOT_RADIUS = 0.5


class BenchError(ValueError):
    pass


def _walls(r: float) -> Environment:
    # A ring of hallways around a central block. The bottom hallway is
    # pinched to a short narrow passage on the direct start-goal line; the
    # safe route goes the long way round through wide hallways.
    wide = 2 * r * 3
    narrow = 2 * r * 1.2
    W, H = 30.0, 20.0
    block = Polygon.rect(wide, wide, W - wide, H - wide)
    pinch = Polygon.rect(13.0, 0.0, 17.0, wide - narrow)
    return Environment(
        bounds=(0.0, 0.0, W, H),
        obstacles=(block, pinch),
        robot_radius=r,
        query=Query(Point2(wide / 2, wide / 2), Point2(W - wide / 2, wide / 2)),
        corridors={
            "narrow": {"probe": Point2(15.0, wide - narrow / 2), "half_width": narrow / 2},
            "wide": {"probe": Point2(15.0, H - wide / 2), "half_width": wide / 2},
        },
    )


def _boxes2d(r: float) -> Environment:
    # Three boxes in a column; the gap on the straight start-goal line is
    # narrow, the one above it wide. The narrow gap is a little roomier than
    # the walls pinch so that unguided trees actually pass it.
    wide = 2 * r * 3
    narrow = 2 * r * 1.4
    y_narrow = 4.4
    lo = y_narrow - narrow / 2
    hi = y_narrow + narrow / 2
    top = hi + 3.0
    return Environment(
        bounds=(0.0, 0.0, 20.0, 12.0),
        obstacles=(
            Polygon.rect(8.0, 0.0, 12.0, lo),
            Polygon.rect(8.0, hi, 12.0, top),
            Polygon.rect(8.0, top + wide, 12.0, 12.0),
        ),
        robot_radius=r,
        query=Query(Point2(4.0, y_narrow), Point2(16.0, y_narrow)),
        corridors={
            "narrow": {"probe": Point2(10.0, y_narrow), "half_width": narrow / 2},
            "wide": {"probe": Point2(10.0, top + wide / 2), "half_width": wide / 2},
        },
    )


def _twotunnel(r: float) -> Environment:
    # Two tunnels through a slab. The wide tunnel carries an energy barrier,
    # the narrow one a shallow well: clearance and energy disagree.
    wide = 2 * r * 3
    narrow = 2 * r * 1.6
    y_n, y_w = 4.0, 10.0
    energy = ScalarField(
        "energy",
        baseline=0.0,
        gaussians=(Gaussian(12.0, y_w, 5.0, 1.0), Gaussian(12.0, y_n, -1.0, 1.0)),
    )
    return Environment(
        bounds=(0.0, 0.0, 24.0, 14.0),
        obstacles=(
            Polygon.rect(10.0, 0.0, 14.0, y_n - narrow / 2),
            Polygon.rect(10.0, y_n + narrow / 2, 14.0, y_w - wide / 2),
            Polygon.rect(10.0, y_w + wide / 2, 14.0, 14.0),
        ),
        robot_radius=r,
        query=Query(Point2(5.0, 7.0), Point2(19.0, 7.0)),
        fields={"energy": energy},
        corridors={
            "narrow": {"probe": Point2(12.0, y_n), "half_width": narrow / 2},
            "wide": {"probe": Point2(12.0, y_w), "half_width": wide / 2},
        },
    )


def builtin_env(name: str, robot_radius: float = ROBOT_RADIUS) -> Environment:
    try:
        make = {"walls": _walls, "boxes2d": _boxes2d, "twotunnel": _twotunnel}[name]
    except KeyError:
        raise BenchError(f"unknown builtin environment {name!r}; choose from {', '.join(BUILTINS)}") from None
    return make(robot_radius)


# -- benchmark spec ------------------------------------------------------------

_SHORT = {"AB": "AB", "DR": "DR", "PLAIN_RRT": "RRT", "MA_RRT": "MA"}
_ALIASES = {"ab": "AB", "dr": "DR", "rrt": "PLAIN_RRT", "plain_rrt": "PLAIN_RRT", "ma": "MA_RRT", "ma_rrt": "MA_RRT"}


@dataclass(frozen=True)
class StrategySpec:
    strategy: str
    growth: str = "rrt_extend"
    metric: str | None = None
    selection: str = "softmin"

    def __post_init__(self):
        if self.strategy not in _SHORT:
            raise BenchError(f"unknown strategy {self.strategy!r}")
        if self.strategy == "AB" and self.metric is None:
            object.__setattr__(self, "metric", "clearance")

    @property
    def label(self) -> str:
        if self.strategy == "PLAIN_RRT":
            return "RRT" if self.growth == "rrt_extend" else "RRG"
        base = f"{_SHORT[self.strategy]}-{'RRT' if self.growth == 'rrt_extend' else 'RRG'}"
        if self.strategy == "AB":
            base += f"[{self.metric}]"
            if self.selection == "greedy_min":
                base += "/greedy"
        return base

    @classmethod
    def parse(cls, d) -> "StrategySpec":
        if isinstance(d, str):
            d = {"strategy": d}
        s = _ALIASES.get(str(d["strategy"]).lower(), str(d["strategy"]).upper())
        growth = {"rrt": "rrt_extend", "rrg": "rrg_connect"}.get(d.get("growth", "rrt"), d.get("growth", "rrt_extend"))
        sel = {"greedy": "greedy_min"}.get(d.get("selection", "softmin"), d.get("selection", "softmin"))
        metric = d.get("metric", "clearance" if s == "AB" else None)
        return cls(s, growth, metric, sel)


@dataclass(frozen=True)
class BenchmarkSpec:
    """What to run and how to judge each run.

    ``criterion`` is one of ``corridor`` (``expected``: a label, or a map
    from bias metric to label with ``"*"`` as fallback), ``min_clearance``
    (``threshold``) or ``worst_energy`` (``field``, ``threshold``).
    """

    environment: str
    strategies: tuple[StrategySpec, ...]
    seeds: tuple[int, ...]
    budget_ms: int = 10_000
    criterion: str = "corridor"
    params: dict = field(default_factory=dict)
    max_iterations: int = 20_000
    robot_radius: float | None = None

    def __post_init__(self):
        if not self.seeds:
            raise BenchError("benchmark needs at least one seed")
        if self.criterion not in ("corridor", "min_clearance", "worst_energy"):
            raise BenchError(f"unknown success criterion {self.criterion!r}")
        thr = self.params.get("threshold")
        if thr is not None and not math.isfinite(thr):
            raise BenchError("threshold must be finite")

    def load_env(self) -> Environment:
        if self.environment in BUILTINS:
            return builtin_env(self.environment, self.robot_radius or ROBOT_RADIUS)
        env = Environment.load(self.environment)
        return env if self.robot_radius is None else env.with_robot_radius(self.robot_radius)

    @classmethod
    def from_dict(cls, d: dict) -> "BenchmarkSpec":
        seeds = d.get("seeds", 10)
        seeds = tuple(range(1, seeds + 1)) if isinstance(seeds, int) else tuple(int(s) for s in seeds)
        return cls(
            environment=d["environment"],
            strategies=tuple(StrategySpec.parse(s) for s in d["strategies"]),
            seeds=seeds,
            budget_ms=int(d.get("budget_ms", 10_000)),
            criterion=d.get("criterion", "corridor"),
            params=dict(d.get("params", {})),
            max_iterations=int(d.get("max_iterations", 20_000)),
            robot_radius=d.get("robot_radius"),
        )

    @classmethod
    def load(cls, path) -> "BenchmarkSpec":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def default_spec(name: str, n_seeds: int = 40, budget_ms: int = 10_000) -> BenchmarkSpec:
    """The comparison run for a builtin environment."""
    seeds = tuple(range(1, n_seeds + 1))
    if name == "twotunnel":
        strategies = (
            StrategySpec("AB", "rrg_connect", "energy"),
            StrategySpec("AB", "rrg_connect", "clearance"),
            StrategySpec("DR", "rrg_connect"),
        )
        params = {"expected": {"energy": "narrow", "*": "wide"}}
    else:
        strategies = (
            StrategySpec("AB", "rrt_extend", "clearance"),
            StrategySpec("DR", "rrt_extend"),
            StrategySpec("PLAIN_RRT", "rrt_extend"),
            StrategySpec("MA_RRT", "rrt_extend"),
        )
        params = {"expected": "wide"}
    if name not in BUILTINS:
        raise BenchError(f"unknown builtin environment {name!r}")
    return BenchmarkSpec(name, strategies, seeds, budget_ms, "corridor", params)


# -- running -------------------------------------------------------------------

ROW_FIELDS = (
    "strategy", "seed", "skeleton_ms", "annotate_ms", "plan_ms", "solved", "success",
    "path_length", "min_clearance", "worst_energy", "corridor",
)


@dataclass
class BenchRow:
    strategy: str
    seed: int
    skeleton_ms: float
    annotate_ms: float
    plan_ms: float
    solved: bool
    success: bool
    path_length: float = math.nan
    min_clearance: float = math.nan
    worst_energy: float = math.nan
    corridor: str = ""

    def key(self):
        """Every non-timing field, NaN mapped to None so keys compare equal."""
        vals = (getattr(self, f) for f in ROW_FIELDS if not f.endswith("_ms"))
        return tuple(None if isinstance(v, float) and math.isnan(v) else v for v in vals)


def _judge(spec: BenchmarkSpec, strat: StrategySpec, min_clr: float, worst_energy: float, label: str) -> bool:
    p = spec.params
    if spec.criterion == "min_clearance":
        return min_clr >= p["threshold"]
    if spec.criterion == "worst_energy":
        return worst_energy <= p["threshold"]
    expected = p.get("expected", "wide")
    if isinstance(expected, dict):
        expected = expected.get(strat.metric or "", expected.get("*"))
    return label == expected


def run_one(env, sk, skeleton_ms, spec: BenchmarkSpec, strat: StrategySpec, seed: int) -> BenchRow:
    t0 = time.perf_counter()
    ann = annotate(sk, env_metrics(env))
    annotate_ms = (time.perf_counter() - t0) * 1000.0
    cfg = PlannerConfig(
        strategy=strat.strategy,
        growth=strat.growth,
        bias_metric=strat.metric if strat.strategy == "AB" else None,
        selection_rule=strat.selection,
        rng_seed=seed,
        time_budget=spec.budget_ms / 1000.0,
        max_iterations=spec.max_iterations,
    )
    res = plan(env, ann, env.query, cfg)
    row = BenchRow(strat.label, seed, skeleton_ms, annotate_ms, res.stats.wall_ms, res.success, False)
    if not res.success:
        return row
    try:
        path = extract_path(res.roadmap, res.start_id, res.goal_id)
    except NoPathError:
        row.solved = False
        return row
    sc = score_path(path, env, ann)
    fname = spec.params.get("field") or next((m for m in sorted(env.fields)), None)
    row.path_length = sc.length
    row.min_clearance = sc.min_clearance
    row.worst_energy = sc.worst.get(fname, math.nan) if fname else math.nan
    row.corridor = corridor_label(path, env)
    row.success = _judge(spec, strat, row.min_clearance, row.worst_energy, row.corridor)
    return row


def run_benchmark(spec: BenchmarkSpec, jobs: int = 1) -> list[BenchRow]:
    """Every (strategy, seed) pair; failed runs become unsolved rows."""
    env = spec.load_env()
    if env.query is None:
        raise BenchError("environment has no query")
    t0 = time.perf_counter()
    sk = build_skeleton(env)
    skeleton_ms = (time.perf_counter() - t0) * 1000.0
    tasks = [(s, seed) for s in spec.strategies for seed in spec.seeds]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(jobs) as pool:
            futs = [pool.submit(run_one, env, sk, skeleton_ms, spec, s, seed) for s, seed in tasks]
            return [f.result() for f in futs]
    return [run_one(env, sk, skeleton_ms, spec, s, seed) for s, seed in tasks]


# -- reporting -----------------------------------------------------------------


@dataclass
class SummaryRow:
    strategy: str
    runs: int
    skeleton_avg: float
    skeleton_sd: float
    plan_avg: float
    plan_sd: float
    solved_pct: float
    success_pct: float


def _sd(xs) -> float:
    return statistics.stdev(xs) if len(xs) > 1 else 0.0


def summarize(rows: list[BenchRow]) -> list[SummaryRow]:
    """Per-strategy timing mean/sample-sd and success percentage, in first-seen order."""
    if not rows:
        raise BenchError("no rows to summarise")
    groups: dict[str, list[BenchRow]] = {}
    for r in rows:
        groups.setdefault(r.strategy, []).append(r)
    out = []
    for name, rs in groups.items():
        sk = [r.skeleton_ms for r in rs]
        pl = [r.plan_ms for r in rs]
        out.append(
            SummaryRow(
                name, len(rs), statistics.fmean(sk), _sd(sk), statistics.fmean(pl), _sd(pl),
                100.0 * sum(r.solved for r in rs) / len(rs), 100.0 * sum(r.success for r in rs) / len(rs),
            )
        )
    return out


def _fmt(x: float) -> str:
    return "" if isinstance(x, float) and math.isnan(x) else repr(round(x, 6)) if isinstance(x, float) else str(x)


def rows_csv(rows: list[BenchRow], timing: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ROW_FIELDS)
    for r in rows:
        vals = []
        for f in ROW_FIELDS:
            v = getattr(r, f)
            if f.endswith("_ms") and not timing:
                vals.append("")
            elif isinstance(v, bool):
                vals.append(str(v).lower())
            else:
                vals.append(_fmt(v))
        w.writerow(vals)
    return buf.getvalue()


def summary_text(summary: list[SummaryRow], timing: bool = True) -> str:
    head = f"{'strategy':<22}{'runs':>5}{'skel avg':>11}{'skel sd':>10}{'plan avg':>11}{'plan sd':>10}{'solved%':>9}{'success%':>10}"
    lines = [head, "-" * len(head)]
    for s in summary:
        t = (
            f"{s.skeleton_avg:>11.3f}{s.skeleton_sd:>10.3f}{s.plan_avg:>11.3f}{s.plan_sd:>10.3f}"
            if timing
            else f"{'':>11}{'':>10}{'':>11}{'':>10}"
        )
        lines.append(f"{s.strategy:<22}{s.runs:>5}{t}{s.solved_pct:>9.1f}{s.success_pct:>10.1f}")
    lines.append("times in milliseconds; sd is the sample standard deviation")
    return "\n".join(lines) + "\n"


def summary_csv(summary: list[SummaryRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["strategy", "runs", "skeleton_ms_avg", "skeleton_ms_sd", "plan_ms_avg", "plan_ms_sd", "solved_pct", "success_pct"])
    for s in summary:
        w.writerow([s.strategy, s.runs, *(_fmt(float(v)) for v in (s.skeleton_avg, s.skeleton_sd, s.plan_avg, s.plan_sd, s.solved_pct, s.success_pct))])
    return buf.getvalue()


__all__ = [
    "BUILTINS", "BenchError", "BenchRow", "BenchmarkSpec", "StrategySpec", "builtin_env", "default_spec",
    "rows_csv", "run_benchmark", "summarize", "summary_csv", "summary_text",
]
