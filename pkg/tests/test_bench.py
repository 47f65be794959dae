import math
import pathlib

import pytest

from skelplan.bench import (
    BenchError, BenchmarkSpec, BenchRow, StrategySpec, builtin_env, rows_csv, run_benchmark, summarize,
    summary_csv, summary_text,
)

GOLDEN = pathlib.Path(__file__).parent / "golden"


def small_spec(seeds=(1, 2, 3)):
    return BenchmarkSpec("walls", (StrategySpec("AB"), StrategySpec("DR")), tuple(seeds), 5_000)


def row(strategy, plan_ms, solved=True, success=True):
    return BenchRow(strategy, 1, 10.0, 1.0, plan_ms, solved, success)


def test_row_count_and_order():
    rows = run_benchmark(small_spec())
    assert len(rows) == 6
    assert [(r.strategy, r.seed) for r in rows] == [(s, k) for s in ("AB-RRT[clearance]", "DR-RRT") for k in (1, 2, 3)]
    assert all(r.solved for r in rows if r.success)


def test_deterministic_and_seed_isolated():
    a = run_benchmark(small_spec())
    b = run_benchmark(small_spec())
    assert [r.key() for r in a] == [r.key() for r in b]
    assert rows_csv(a, timing=False) == rows_csv(b, timing=False)
    only2 = run_benchmark(small_spec((2,)))
    assert [r.key() for r in only2] == [r.key() for r in a if r.seed == 2]


def test_parallel_matches_serial():
    a = run_benchmark(small_spec((1, 2)))
    b = run_benchmark(small_spec((1, 2)), jobs=2)
    assert [r.key() for r in a] == [r.key() for r in b]


def test_summary_statistics():
    s = summarize([row("A", 1.0)])
    assert s[0].plan_sd == 0.0 and s[0].success_pct == 100.0
    s = summarize([row("A", 1.0), row("A", 3.0, success=False)])
    assert s[0].plan_avg == 2.0 and s[0].plan_sd == pytest.approx(math.sqrt(2))
    assert s[0].success_pct == 50.0
    with pytest.raises(BenchError):
        summarize([])


def test_summary_matches_golden():
    rows = run_benchmark(small_spec())
    text = summary_text(summarize(rows), timing=False)
    assert text == (GOLDEN / "walls_small_summary.txt").read_text()
    assert rows_csv(rows, timing=False) == (GOLDEN / "walls_small_rows.csv").read_text()


def test_csv_layout():
    rows = run_benchmark(small_spec((1,)))
    header = rows_csv(rows).splitlines()[0]
    assert header == "strategy,seed,skeleton_ms,annotate_ms,plan_ms,solved,success,path_length,min_clearance,worst_energy,corridor"
    assert summary_csv(summarize(rows)).splitlines()[0].startswith("strategy,runs,")


def test_spec_validation_and_parsing(tmp_path):
    with pytest.raises(BenchError):
        BenchmarkSpec("walls", (StrategySpec("AB"),), ())
    with pytest.raises(BenchError):
        BenchmarkSpec("walls", (StrategySpec("AB"),), (1,), criterion="min_clearance", params={"threshold": math.inf})
    f = tmp_path / "spec.json"
    f.write_text('{"environment": "twotunnel", "seeds": 2, "criterion": "worst_energy",'
                 ' "params": {"field": "energy", "threshold": 1.0},'
                 ' "strategies": [{"strategy": "ab", "growth": "rrg", "metric": "energy"}, "dr"]}')
    spec = BenchmarkSpec.load(f)
    assert spec.seeds == (1, 2)
    assert [s.label for s in spec.strategies] == ["AB-RRG[energy]", "DR-RRT"]
    rows = run_benchmark(spec)
    for r in rows:
        assert r.success == (r.solved and r.worst_energy <= 1.0)


def test_min_clearance_criterion():
    spec = BenchmarkSpec("walls", (StrategySpec("AB"),), (1,), criterion="min_clearance", params={"threshold": 0.8})
    (r,) = run_benchmark(spec)
    assert r.success == (r.min_clearance >= 0.8)


def test_builtins():
    with pytest.raises(BenchError):
        builtin_env("maze")
    walls = builtin_env("walls")
    assert set(walls.corridors) == {"narrow", "wide"}
    tt = builtin_env("twotunnel")
    assert tt.fields["energy"]((12.0, 10.0))[0] == pytest.approx(5.0, abs=1e-3)
