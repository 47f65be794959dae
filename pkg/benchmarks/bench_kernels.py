"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Both backends are imported side by side, fed identical inputs, and checked
for identical results before timing.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from skelplan import kernels
from skelplan.bench import builtin_env
from skelplan.planner import PlannerConfig, plan
from skelplan.skeleton import _SIMPLE, distance_transform, ridge_mask


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best * 1000.0


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    backends = kernels.backends()
    if "cython" not in backends:
        raise SystemExit("compiled backend not built; run `pip install -e . --no-build-isolation` first")
    env = builtin_env("walls")
    segs, offs, bounds = env._segs, env._offsets, env.bounds
    rng = np.random.default_rng(0)
    pts = np.column_stack([rng.uniform(0, 30, 20_000), rng.uniform(0, 20, 20_000)])
    grid = distance_transform(env)
    fg0 = np.ascontiguousarray(grid.free_mask.astype(np.uint8))
    ridge = np.ascontiguousarray(ridge_mask(grid).astype(np.uint8))
    flat = np.asarray(grid.values).ravel()
    order = np.lexsort((np.arange(flat.size), flat)).astype(np.int64)
    order = np.ascontiguousarray(order[fg0.ravel()[order] > 0])
    segments = rng.uniform([0, 0, 0, 0], [30, 20, 30, 20], (2_000, 4))
    xy = np.ascontiguousarray(rng.uniform(0, 30, (5_000, 2)))

    cases = {
        "clearance_many (20k points)": lambda k: k.clearance_many(pts, segs, offs, bounds),
        "segment_free (2k segments)": lambda k: [k.segment_free(*s, 0.5, 0.25, segs, offs, bounds) for s in segments],
        "nearest (5k nodes x 500)": lambda k: [k.nearest(xy, len(xy), x, y) for x, y in pts[:500]],
        "thin (walls grid)": lambda k: k.thin(fg0.copy(), ridge, order, _SIMPLE),
    }
    print(f"{'kernel':<30}{'python ms':>12}{'cython ms':>12}{'speedup':>10}")
    for name, fn in cases.items():
        a, b = fn(backends["python"]), fn(backends["cython"])
        if not np.array_equal(np.asarray(a), np.asarray(b)):
            raise SystemExit(f"{name}: backends disagree")
        tp = _time(lambda: fn(backends["python"]), args.repeat)
        tc = _time(lambda: fn(backends["cython"]), args.repeat)
        print(f"{name:<30}{tp:>12.2f}{tc:>12.2f}{tp / tc:>9.1f}x")

    cfg = PlannerConfig(strategy="PLAIN_RRT", rng_seed=1)
    t = _time(lambda: plan(env, None, env.query, cfg), 1)
    print(f"\nend-to-end RRT on walls with the {kernels.BACKEND} backend: {t:.1f} ms")


if __name__ == "__main__":
    main()
