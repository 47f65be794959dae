import json
import re

import pytest

from skelplan.annotation import annotate, env_metrics
from skelplan.cli import main
from skelplan.render import RenderError, RenderSpec, cost_color, render_svg
from skelplan.skeleton import build_skeleton

from conftest import open_world


def test_empty_world_render():
    svg = render_svg(open_world(), spec=RenderSpec(("environment",)))
    assert svg.startswith('<?xml version="1.0"')
    assert 'version="1.1"' in svg
    assert svg.count("<rect") == 1 and "<polygon" not in svg


def test_render_requires_inputs():
    env = open_world()
    with pytest.raises(RenderError):
        render_svg(env, spec=RenderSpec(("environment", "path")))
    with pytest.raises(RenderError):
        render_svg(env, spec=RenderSpec(("roadmap",)))
    with pytest.raises(RenderError):
        RenderSpec(())
    with pytest.raises(RenderError):
        RenderSpec(("heatmap",))


def test_colour_ramp():
    assert cost_color(0.05) == (26, 152, 80)
    assert cost_color(1.0) == (215, 48, 39)
    mid = cost_color(0.525)
    assert mid == (240, 200, 30)


def _edge_colors(svg):
    return {int(m.group(1)): m.group(2) for m in re.finditer(r'data-edge="(\d+)" stroke="#([0-9a-f]{6})"', svg)}


def test_wide_edge_greener_than_narrow(walls, walls_skeleton):
    import numpy as np

    ann = annotate(walls_skeleton, env_metrics(walls))
    colors = _edge_colors(render_svg(walls, ann=ann, spec=RenderSpec(("environment", "skeleton"))))

    def through(name):
        c = walls.corridors[name]
        return [e.id for e in walls_skeleton.edges if np.min(np.hypot(*(e.polyline - c["probe"]).T)) <= c["half_width"]]

    def rg(hexcol):
        return int(hexcol[:2], 16), int(hexcol[2:4], 16)

    (w,), (n,) = through("wide"), through("narrow")
    wr, wg = rg(colors[w])
    nr, ng = rg(colors[n])
    assert wg - wr > ng - nr


def test_render_deterministic(walls, walls_skeleton):
    ann = annotate(walls_skeleton, env_metrics(walls))
    a = render_svg(walls, ann=ann, spec=RenderSpec(("environment", "skeleton")))
    b = render_svg(walls, ann=annotate(build_skeleton(walls), env_metrics(walls)), spec=RenderSpec(("environment", "skeleton")))
    assert a == b


def test_cli_plan_success(tmp_path, monkeypatch):
    monkeypatch.delenv("SKELPLAN_OUT_DIR", raising=False)
    out = tmp_path / "w"
    rc = main(["plan", "--builtin", "walls", "--strategy", "ab", "--metric", "clearance", "--seed", "7", "--out", str(out)])
    assert rc == 0
    doc = json.loads((tmp_path / "w.path.json").read_text())
    assert len(doc["waypoints"]) > 2 and doc["score"]["min_clearance"] > 0.5
    assert "success=true" in (tmp_path / "w.stats.txt").read_text()


def test_cli_starved_plan(tmp_path):
    rc = main(["plan", "--builtin", "walls", "--budget-ms", "1", "--out", str(tmp_path / "s")])
    assert rc == 1
    stats = (tmp_path / "s.stats.txt").read_text()
    assert "success=false" in stats and "iterations=" in stats
    assert not (tmp_path / "s.path.json").exists()


def test_cli_usage_errors(tmp_path, capsys):
    assert main(["plan", "--builtin", "walls", "--frobnicate"]) == 2
    assert main(["plan"]) == 2
    assert main(["nonsense"]) == 2
    assert main(["plan", "--env", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["skeletonize", "--env", str(bad)]) == 2
    assert main(["plan", "--builtin", "walls", "--metric", "energy"]) == 2


def test_cli_help_lists_flags(capsys):
    assert main(["plan", "--help"]) == 0
    text = capsys.readouterr().out
    for flag in ("--env", "--builtin", "--strategy", "--growth", "--metric", "--seed", "--budget-ms", "--selection", "--out"):
        assert flag in text
    assert main(["bench", "--help"]) == 0
    text = capsys.readouterr().out
    for flag in ("--spec", "--builtin", "--seeds", "--out"):
        assert flag in text


def test_cli_pipeline(tmp_path, monkeypatch):
    monkeypatch.setenv("SKELPLAN_OUT_DIR", str(tmp_path))
    assert main(["skeletonize", "--builtin", "twotunnel", "--svg", "--out", "t"]) == 0
    assert json.loads((tmp_path / "t.skeleton.json").read_text())["edges"]
    assert main(["annotate", "--builtin", "twotunnel", "--out", "t"]) == 0
    ann = json.loads((tmp_path / "t.annotated.json").read_text())
    assert {m for _, m, _ in ann["annotations"]} == {"clearance", "energy"}
    assert main(["plan", "--builtin", "twotunnel", "--growth", "rrg", "--metric", "energy", "--seed", "2", "--out", "p"]) == 0
    assert main(["plot", "--builtin", "twotunnel", "--path", str(tmp_path / "p.path.json"),
                 "--roadmap", str(tmp_path / "p.roadmap.txt"), "--out", "p.svg"]) == 0
    svg = (tmp_path / "p.svg").read_text()
    assert 'id="path"' in svg and 'id="roadmap"' in svg
    assert main(["bench", "--builtin", "walls", "--seeds", "2", "--no-timing", "--out", "b"]) == 0
    rows = (tmp_path / "b" / "rows.csv").read_text().splitlines()
    assert len(rows) == 1 + 4 * 2
    assert (tmp_path / "b" / "summary.txt").exists()
