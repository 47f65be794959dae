"""Command-line entry point: ``skelplan {skeletonize,annotate,plan,bench,plot}``.

Exit codes: 0 on success, 1 when the planner finds no path, 2 on bad usage
or unreadable input. Relative output paths are resolved against
``$SKELPLAN_OUT_DIR`` when that variable is set.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path as FsPath

from .annotation import AnnotationError, annotate, env_metrics
from .bench import BUILTINS, BenchError, BenchmarkSpec, builtin_env, default_spec, rows_csv, run_benchmark, summarize, summary_text
from .geometry import Environment, GeometryError
from .pathing import NoPathError, dumps_path, extract_path, loads_path, score_path
from .planner import PlannerConfig, PlannerError, Roadmap, plan
from .render import LAYERS, RenderError, RenderSpec, render_svg
from .skeleton import SkeletonError, build_skeleton

EXIT_OK, EXIT_NO_PATH, EXIT_USAGE = 0, 1, 2

_STRATEGY = {"ab": "AB", "dr": "DR", "rrt": "PLAIN_RRT", "ma": "MA_RRT"}
_GROWTH = {"rrt": "rrt_extend", "rrg": "rrg_connect"}
_SELECTION = {"greedy": "greedy_min", "softmin": "softmin"}


class UsageError(Exception):
    pass


def _out_path(p: str) -> FsPath:
    path = FsPath(p)
    base = os.environ.get("SKELPLAN_OUT_DIR")
    if base and not path.is_absolute():
        path = FsPath(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _write(p: str, text: str) -> FsPath:
    path = _out_path(p)
    path.write_text(text)
    return path


def _add_env_args(sp):
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--env", metavar="FILE", help="environment description (JSON)")
    g.add_argument("--builtin", choices=BUILTINS, help="use a builtin environment")
    sp.add_argument("--robot-radius", type=float, default=None, metavar="R", help="override the robot radius")
    sp.add_argument("--resolution", type=float, default=None, metavar="H",
                    help="distance-grid cell size (default: robot radius / 2)")


def _load_env(args) -> Environment:
    env = builtin_env(args.builtin) if args.builtin else Environment.load(args.env)
    if args.robot_radius is not None:
        env = env.with_robot_radius(args.robot_radius)
    return env


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="skelplan", description="Annotated-skeleton guided RRT/RRG planning in 2D.")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")

    sp = sub.add_parser("skeletonize", help="extract the workspace skeleton")
    _add_env_args(sp)
    sp.add_argument("--out", default="skeleton", metavar="PREFIX", help="writes PREFIX.skeleton.json")
    sp.add_argument("--svg", action="store_true", help="also write PREFIX.skeleton.svg")

    sp = sub.add_parser("annotate", help="skeleton plus per-edge bottleneck values")
    _add_env_args(sp)
    sp.add_argument("--out", default="annotated", metavar="PREFIX", help="writes PREFIX.annotated.json")
    sp.add_argument("--svg", action="store_true", help="also write PREFIX.annotated.svg")
    sp.add_argument("--metric", default="clearance", help="metric used to colour the SVG")

    sp = sub.add_parser("plan", help="solve the environment's query")
    _add_env_args(sp)
    sp.add_argument("--strategy", choices=sorted(_STRATEGY), default="ab", help="region selection strategy")
    sp.add_argument("--growth", choices=sorted(_GROWTH), default="rrt", help="tree (rrt) or graph (rrg) growth")
    sp.add_argument("--metric", default="clearance", metavar="NAME", help="bias metric for ab")
    sp.add_argument("--seed", type=int, default=0, metavar="N", help="random seed")
    sp.add_argument("--budget-ms", type=int, default=10_000, metavar="N", help="wall-clock budget in milliseconds")
    sp.add_argument("--max-iterations", type=int, default=20_000, metavar="N", help="iteration cap")
    sp.add_argument("--selection", choices=sorted(_SELECTION), default="softmin", help="region selection rule")
    sp.add_argument("--p-whole-env", type=float, default=0.05, metavar="P", help="whole-environment sampling probability")
    sp.add_argument("--out", default="plan", metavar="PREFIX",
                    help="writes PREFIX.path.json, PREFIX.roadmap.txt and PREFIX.stats.txt")

    sp = sub.add_parser("bench", help="multi-seed strategy comparison")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--spec", metavar="FILE", help="benchmark description (JSON)")
    g.add_argument("--builtin", choices=BUILTINS, help="default comparison on a builtin environment")
    sp.add_argument("--seeds", type=int, default=None, metavar="N", help="run seeds 1..N (overrides the spec)")
    sp.add_argument("--budget-ms", type=int, default=None, metavar="N", help="per-run budget (overrides the spec)")
    sp.add_argument("--jobs", type=int, default=1, metavar="N", help="worker processes")
    sp.add_argument("--no-timing", action="store_true", help="blank timing columns for byte-stable output")
    sp.add_argument("--out", default="bench", metavar="DIR", help="writes DIR/rows.csv and DIR/summary.txt")

    sp = sub.add_parser("plot", help="render an SVG")
    _add_env_args(sp)
    sp.add_argument("--path", metavar="FILE", help="path file written by plan")
    sp.add_argument("--roadmap", metavar="FILE", help="roadmap file written by plan")
    sp.add_argument("--layers", default=None, metavar="L1,L2",
                    help=f"comma-separated subset of {','.join(LAYERS)} (default: what the inputs allow)")
    sp.add_argument("--metric", default="clearance", help="metric used to colour skeleton edges")
    sp.add_argument("--size", type=int, default=800, metavar="PX", help="canvas size in pixels")
    sp.add_argument("--out", default="plot.svg", metavar="FILE", help="output SVG file")
    return ap


def _cmd_skeletonize(args) -> int:
    env = _load_env(args)
    sk = build_skeleton(env, args.resolution)
    _write(f"{args.out}.skeleton.json", sk.dumps() + "\n")
    if args.svg:
        _write(f"{args.out}.skeleton.svg", render_svg(env, sk, spec=RenderSpec(("environment", "skeleton"))))
    print(f"skeleton: {len(sk.vertices)} vertices, {len(sk.edges)} edges")
    return EXIT_OK


def _cmd_annotate(args) -> int:
    env = _load_env(args)
    ann = annotate(build_skeleton(env, args.resolution), env_metrics(env))
    _write(f"{args.out}.annotated.json", json.dumps(ann.to_dict(), indent=1) + "\n")
    if args.svg:
        spec = RenderSpec(("environment", "skeleton"), metric=args.metric)
        _write(f"{args.out}.annotated.svg", render_svg(env, ann=ann, spec=spec))
    print(f"annotated {len(ann.graph.edges)} edges with {', '.join(m.name for m in ann.metrics)}")
    return EXIT_OK


def _cmd_plan(args) -> int:
    env = _load_env(args)
    if env.query is None:
        raise UsageError("environment has no query")
    strategy = _STRATEGY[args.strategy]
    if args.budget_ms < 0:
        raise UsageError("--budget-ms must be non-negative")
    cfg = PlannerConfig(
        strategy=strategy,
        growth=_GROWTH[args.growth],
        bias_metric=args.metric if strategy == "AB" else None,
        selection_rule=_SELECTION[args.selection],
        rng_seed=args.seed,
        time_budget=args.budget_ms / 1000.0,
        max_iterations=args.max_iterations,
        p_whole_env=args.p_whole_env,
    )
    ann = None
    if strategy in ("AB", "DR"):
        ann = annotate(build_skeleton(env, args.resolution), env_metrics(env))
        if strategy == "AB" and not ann.has_metric(args.metric):
            raise UsageError(f"unknown metric {args.metric!r}; have {', '.join(m.name for m in ann.metrics)}")
    res = plan(env, ann, env.query, cfg)
    _write(f"{args.out}.stats.txt", res.stats.dumps())
    _write(f"{args.out}.roadmap.txt", res.roadmap.dumps())
    if not res.success:
        print(f"no path after {res.stats.iterations} iterations", file=sys.stderr)
        return EXIT_NO_PATH
    path = extract_path(res.roadmap, res.start_id, res.goal_id)
    sc = score_path(path, env, ann)
    _write(f"{args.out}.path.json", dumps_path(path, sc) + "\n")
    print(f"path length {sc.length:.3f}, min clearance {sc.min_clearance:.3f}, {res.stats.iterations} iterations")
    return EXIT_OK


def _cmd_bench(args) -> int:
    if args.spec:
        spec = BenchmarkSpec.load(args.spec)
        if args.seeds is not None:
            spec = BenchmarkSpec(spec.environment, spec.strategies, tuple(range(1, args.seeds + 1)), spec.budget_ms,
                                 spec.criterion, spec.params, spec.max_iterations, spec.robot_radius)
    else:
        spec = default_spec(args.builtin, args.seeds if args.seeds is not None else 40)
    if args.budget_ms is not None:
        spec = BenchmarkSpec(spec.environment, spec.strategies, spec.seeds, args.budget_ms,
                             spec.criterion, spec.params, spec.max_iterations, spec.robot_radius)
    rows = run_benchmark(spec, jobs=args.jobs)
    timing = not args.no_timing
    _write(os.path.join(args.out, "rows.csv"), rows_csv(rows, timing=timing))
    text = summary_text(summarize(rows), timing=timing)
    _write(os.path.join(args.out, "summary.txt"), text)
    print(text, end="")
    return EXIT_OK


def _cmd_plot(args) -> int:
    env = _load_env(args)
    path = loads_path(FsPath(args.path).read_text()) if args.path else None
    rm = Roadmap.loads(FsPath(args.roadmap).read_text()) if args.roadmap else None
    if args.layers:
        layers = tuple(x.strip() for x in args.layers.split(",") if x.strip())
    else:
        layers = ("environment", "skeleton") + (("roadmap",) if rm else ()) + (("path",) if path else ())
    ann = None
    if "skeleton" in layers:
        ann = annotate(build_skeleton(env, args.resolution), env_metrics(env))
    svg = render_svg(env, ann=ann, rm=rm, path=path, spec=RenderSpec(layers, args.metric, args.size))
    _write(args.out, svg)
    return EXIT_OK


_COMMANDS = {
    "skeletonize": _cmd_skeletonize,
    "annotate": _cmd_annotate,
    "plan": _cmd_plan,
    "bench": _cmd_bench,
    "plot": _cmd_plot,
}

_INPUT_ERRORS = (
    UsageError, GeometryError, SkeletonError, AnnotationError, PlannerError, BenchError, RenderError,
    NoPathError, OSError, ValueError, KeyError, json.JSONDecodeError,
)


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except _INPUT_ERRORS as exc:
        print(f"skelplan {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
