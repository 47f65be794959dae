import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skelplan.annotation import COST_FLOOR, LOWER_BETTER, AnnotatedSkeleton, MetricSpec, ScalarField, annotate, edge_cost, env_metrics
from skelplan.geometry import Environment, GeometryError, Point2, Polygon, Query, clearance, is_free, segment_free
from skelplan.planner import (
    BACKWARD, FORWARD, WHOLE_ENV, PlannerConfig, PlannerError, PlannerState, Region, Roadmap, advance_region,
    create_active_regions, grow_roadmap, ma_retract, plan, region_log_weights, region_reached_end, region_weights,
    select_region,
)
from skelplan.skeleton import SkeletonEdge, SkeletonGraph, SkeletonVertex, build_skeleton

from conftest import corridor_env, open_world

ENV = open_world(10, 10, 0.5, query=Query(Point2(1, 1), Point2(9, 9)))


def fixed_cost_ann(costs, lengths):
    """Disjoint straight edges whose normalised costs are exactly ``costs``."""
    verts, edges = [], []
    for k, L in enumerate(lengths):
        pl = np.array([[1.0, 1.0 + k], [1.0 + L, 1.0 + k]])
        verts += [SkeletonVertex(2 * k, Point2(*pl[0]), 1), SkeletonVertex(2 * k + 1, Point2(*pl[1]), 1)]
        edges.append(SkeletonEdge(k, (2 * k, 2 * k + 1), pl, np.ones(2), float(L)))
    g = SkeletonGraph(tuple(verts), tuple(edges), 0.25)
    vals = {(k, "m"): (a - COST_FLOOR) / (1 - COST_FLOOR) for k, a in enumerate(costs)}
    return AnnotatedSkeleton(g, (MetricSpec("m", ScalarField("m"), LOWER_BETTER),), vals, min(lengths), {"m": (0.0, 1.0)})


def state_with_regions(ann, cfg, dirs=None):
    st_ = PlannerState(ENV, ann, cfg)
    dirs = dirs or [FORWARD] * len(ann.graph.edges)
    st_.active_regions = [Region(e.id, d, 0, Point2(*e.polyline[0]), 0.5) for e, d in zip(ann.graph.edges, dirs)]
    return st_


def first_region(st_, cfg, ann):
    while True:
        t = select_region(st_, cfg, ann)
        if t is not WHOLE_ENV:
            return t


# -- weights and selection --------------------------------------------------------


def test_weight_examples():
    cfg = PlannerConfig(bias_metric="m", selection_rule="greedy_min")
    ann = fixed_cost_ann([0.05, 1.0], [2.0, 2.0])
    st_ = state_with_regions(ann, cfg)
    w = region_weights(st_, cfg, ann)
    assert w[0] == pytest.approx(0.05, abs=1e-12) and w[1] == pytest.approx(1.0, abs=1e-12)
    assert first_region(st_, cfg, ann).edge_id == 0

    ann = fixed_cost_ann([0.5, 0.5], [1.0, 2.0])
    w = region_weights(state_with_regions(ann, cfg), cfg, ann)
    assert w[1] == pytest.approx(0.25, abs=1e-12)

    ann = fixed_cost_ann([0.9, 0.9], [1.0, 3.0])
    st_ = state_with_regions(ann, cfg)
    w = region_weights(st_, cfg, ann)
    assert w[0] == pytest.approx(0.9, abs=1e-12) and w[1] == pytest.approx(0.729, abs=1e-12)
    assert first_region(st_, cfg, ann).edge_id == 1
    np.testing.assert_allclose(np.exp(region_log_weights(st_, cfg, ann)), w, rtol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.sampled_from([0.05, 0.2, 0.5, 0.9, 1.0]), st.sampled_from([1.0, 1.5, 2.0, 3.0])),
                min_size=1, max_size=6),
       st.lists(st.sampled_from([FORWARD, BACKWARD]), min_size=6, max_size=6))
def test_greedy_matches_bruteforce_argmin(pairs, dirs):
    costs, lengths = zip(*pairs)
    ann = fixed_cost_ann(list(costs), list(lengths))
    cfg = PlannerConfig(bias_metric="m", selection_rule="greedy_min")
    st_ = state_with_regions(ann, cfg, dirs[: len(pairs)])
    minL = min(lengths)
    w = [edge_cost(ann, k, "m") ** (lengths[k] / minL) for k in range(len(pairs))]
    best = min(range(len(w)), key=lambda k: (w[k], k))
    assert first_region(st_, cfg, ann).edge_id == best


def test_softmin_prefers_low_cost():
    ann = fixed_cost_ann([0.05, 1.0], [2.0, 2.0])
    hits = 0
    for seed in range(1000):
        cfg = PlannerConfig(bias_metric="m", rng_seed=seed)
        hits += first_region(state_with_regions(ann, cfg), cfg, ann).edge_id == 0
    assert hits >= 950
    # the exact preference is 20/21; stay within four standard deviations of it
    p = 20 / 21
    assert abs(hits - 1000 * p) <= 4 * math.sqrt(1000 * p * (1 - p))


def test_greedy_always_low_cost():
    ann = fixed_cost_ann([0.05, 1.0], [2.0, 2.0])
    for seed in range(100):
        cfg = PlannerConfig(bias_metric="m", rng_seed=seed, selection_rule="greedy_min")
        assert first_region(state_with_regions(ann, cfg), cfg, ann).edge_id == 0


@pytest.mark.parametrize("p", [0.05, 0.3])
def test_whole_env_frequency(p):
    ann = fixed_cost_ann([0.5, 0.5], [1.0, 1.0])
    cfg = PlannerConfig(bias_metric="m", p_whole_env=p, rng_seed=11)
    st_ = state_with_regions(ann, cfg)
    n = 20000
    count = sum(select_region(st_, cfg, ann) is WHOLE_ENV for _ in range(n))
    assert abs(count - n * p) <= 4 * math.sqrt(n * p * (1 - p))


def test_no_active_regions_means_whole_env():
    ann = fixed_cost_ann([0.5], [1.0])
    cfg = PlannerConfig(bias_metric="m")
    st_ = PlannerState(ENV, ann, cfg)
    assert all(select_region(st_, cfg, ann) is WHOLE_ENV for _ in range(20))


def test_degenerate_metric_reduces_to_dr():
    graph = fixed_cost_ann([1.0] * 4, [1.0, 2.0, 3.0, 1.5]).graph
    ann = AnnotatedSkeleton(graph, (MetricSpec("m", ScalarField("m"), LOWER_BETTER),),
                            {(k, "m"): 0.0 for k in range(4)}, 1.0, {"m": (0.0, 0.0)})
    ab = PlannerConfig(bias_metric="m", rng_seed=5)
    dr = PlannerConfig(strategy="DR", bias_metric=None, rng_seed=5)
    sa, sd = state_with_regions(ann, ab), state_with_regions(ann, dr)
    wa, wd = region_weights(sa, ab, ann), region_weights(sd, dr, ann)
    assert wa == wd == [1.0] * 4
    seq_a = [getattr(select_region(sa, ab, ann), "edge_id", -1) for _ in range(300)]
    seq_d = [getattr(select_region(sd, dr, graph), "edge_id", -1) for _ in range(300)]
    assert seq_a == seq_d


def test_dr_prefers_successful_regions():
    ann = fixed_cost_ann([0.5, 0.5], [1.0, 1.0])
    cfg = PlannerConfig(strategy="DR", bias_metric=None, selection_rule="greedy_min")
    st_ = state_with_regions(ann, cfg)
    st_.active_regions[0].attempts, st_.active_regions[0].successes = 10, 1
    st_.active_regions[1].attempts, st_.active_regions[1].successes = 10, 9
    assert first_region(st_, cfg, ann.graph).edge_id == 1


def test_stall_penalty_escapes():
    ann = fixed_cost_ann([0.05, 1.0], [2.0, 2.0])
    cfg = PlannerConfig(bias_metric="m", selection_rule="greedy_min")
    st_ = state_with_regions(ann, cfg)
    st_.active_regions[0].fail_streak = 19
    assert first_region(st_, cfg, ann).edge_id == 0
    w0 = region_weights(st_, cfg, ann)[0]
    st_.active_regions[0].fail_streak = 20
    assert region_weights(st_, cfg, ann)[0] == pytest.approx(2 * w0)
    st_.active_regions[0].fail_streak = 25
    assert first_region(st_, cfg, ann).edge_id == 1


# -- regions ----------------------------------------------------------------------


def star_graph():
    # centre vertex 0 with three straight arms
    c = (5.0, 5.0)
    ends = [(9.0, 5.0), (5.0, 9.0), (1.0, 5.0)]
    verts = [SkeletonVertex(0, Point2(*c), 3)] + [SkeletonVertex(k + 1, Point2(*p), 1) for k, p in enumerate(ends)]
    edges = []
    for k, p in enumerate(ends):
        t = np.linspace(0, 1, 17)[:, None]
        pl = np.asarray(c) + (np.asarray(p) - np.asarray(c)) * t
        edges.append(SkeletonEdge(k, (0, k + 1), pl, np.ones(len(pl)), 4.0))
    return SkeletonGraph(tuple(verts), tuple(edges), 0.25)


def test_create_active_regions():
    g = star_graph()
    cfg = PlannerConfig(strategy="DR", bias_metric=None)
    st_ = PlannerState(ENV, g, cfg)
    st_.visited_edges.add((1, FORWARD))
    new = create_active_regions(st_, g.vertex(0))
    assert sorted(r.edge_id for r in new) == [0, 2]
    assert all(r.index == 1 and tuple(r.center) == tuple(g.edge(r.edge_id).polyline[1]) for r in new)
    assert create_active_regions(st_, g.vertex(0)) == []
    fresh = PlannerState(ENV, g, cfg)
    assert len(create_active_regions(fresh, g.vertex(0))) == 3
    # spawning from the far end walks the edge backwards
    back = create_active_regions(fresh, g.vertex(1))
    assert back[0].direction == BACKWARD and back[0].index == len(g.edge(0).polyline) - 2


def test_advance_region():
    g = star_graph()
    cfg = PlannerConfig(strategy="DR", bias_metric=None)
    st_ = PlannerState(ENV, g, cfg)
    st_.roadmap.add_node((5.0, 5.0))
    (r,) = [x for x in create_active_regions(st_, g.vertex(0)) if x.edge_id == 0]
    st_.last_added = None
    advance_region(st_, r)
    assert r.index == 1
    st_.last_added = st_.roadmap.add_node(r.center, 0)
    advance_region(st_, r)
    assert r.index > 1
    assert math.hypot(r.center.x - 5.25, r.center.y - 5.0) > r.radius
    # a node right at the end of the edge pushes the region off it
    st_.last_added = st_.roadmap.add_node((8.8, 5.0), 0)
    r.index, r.center = 15, Point2(*g.edge(0).polyline[15])
    advance_region(st_, r)
    assert region_reached_end(st_, r)


# -- growth -----------------------------------------------------------------------


def test_first_growth_succeeds_in_open_space():
    for seed in range(100):
        cfg = PlannerConfig(strategy="PLAIN_RRT", bias_metric=None, rng_seed=seed)
        st_ = PlannerState(ENV, None, cfg)
        st_.roadmap.add_node((5.0, 5.0))
        target = Region(0, FORWARD, 0, Point2(6.0, 5.0), 0.5)
        assert grow_roadmap(st_, target, cfg, ENV)
        assert target.attempts == target.successes == 1


def test_growth_into_inflated_zone_fails():
    env = open_world(10, 10, 0.5, obstacles=[Polygon.rect(4, 4, 6, 6)])
    cfg = PlannerConfig(strategy="DR", bias_metric=None, rng_seed=1)
    st_ = PlannerState(env, None, cfg)
    st_.roadmap.add_node((5.0, 6.55))
    target = Region(0, FORWARD, 0, Point2(5.0, 6.1), 0.3)
    assert not any(grow_roadmap(st_, target, cfg, env) for _ in range(50))
    assert target.fail_streak == 50 and st_.roadmap.count == 1


def test_rrg_connect_degree():
    cfg = PlannerConfig(strategy="PLAIN_RRT", bias_metric=None, growth="rrg_connect", rrg_k=3, rng_seed=2)
    st_ = PlannerState(ENV, None, cfg)
    st_.roadmap.add_node((5.0, 5.0))
    while st_.roadmap.count < 10:
        grow_roadmap(st_, WHOLE_ENV, cfg, ENV)
    while not grow_roadmap(st_, WHOLE_ENV, cfg, ENV):
        pass
    deg = len(st_.roadmap.adj[st_.last_added])
    assert 1 <= deg <= 4


# -- medial axis retraction -------------------------------------------------------


def test_retract_to_corridor_centre():
    env = corridor_env(width=2.0, r=0.25)
    q = ma_retract(env, (6.0, 2.4), 1e-3)
    assert abs(q.y - 3.0) <= 1e-3 and q.x == pytest.approx(6.0)


def test_retract_fixpoint():
    env = corridor_env(width=2.0, r=0.25)
    q = ma_retract(env, (6.0, 3.0), 1e-3)
    assert math.hypot(q.x - 6.0, q.y - 3.0) <= 1e-3


def test_retract_near_convex_corner():
    env = open_world(10, 10, 0.5, obstacles=[Polygon.rect(4, 4, 6, 6)])
    rng = np.random.default_rng(4)
    for _ in range(20):
        p = (6.0 + rng.uniform(0.05, 0.4), 6.0 + rng.uniform(0.05, 0.4))
        assert clearance(env, ma_retract(env, p, 1e-3)) > clearance(env, p)


def test_retract_rejects_blocked_point():
    env = open_world(10, 10, 0.5, obstacles=[Polygon.rect(4, 4, 6, 6)])
    with pytest.raises(GeometryError):
        ma_retract(env, (5, 5), 1e-3)


# -- whole runs -------------------------------------------------------------------


def audit(env, rm):
    r = env.robot_radius
    bad = [i for i in range(rm.count) if not is_free(env, rm.point(i), r)]
    bad += [(i, j) for i, j, _ in rm.edges if not segment_free(env, rm.point(i), rm.point(j), r, r / 2)]
    return bad


def test_open_world_straight_line():
    env = open_world(10, 10, 0.5, query=Query(Point2(1, 5), Point2(9, 5)))
    res = plan(env, None, env.query, PlannerConfig(strategy="PLAIN_RRT", bias_metric=None, rng_seed=0))
    assert res.success and not audit(env, res.roadmap)


@pytest.mark.parametrize("strategy", ["AB", "DR", "PLAIN_RRT", "MA_RRT"])
def test_runs_are_valid_and_deterministic(walls, walls_skeleton, strategy):
    ann = annotate(walls_skeleton, env_metrics(walls))
    cfg = PlannerConfig(strategy=strategy, bias_metric="clearance" if strategy == "AB" else None, rng_seed=3)
    a = plan(walls, ann, walls.query, cfg)
    b = plan(walls, ann, walls.query, cfg)
    assert a.success
    assert a.roadmap.dumps() == b.roadmap.dumps()
    assert a.stats.dumps(timing=False) == b.stats.dumps(timing=False)
    assert not audit(walls, a.roadmap)
    rm = a.roadmap
    assert len(rm.edges) == rm.count - 1
    assert all(rm.parent[i] >= 0 for i in range(1, rm.count)) and rm.parent[0] == -1
    keys = [r.key for r in a.regions]
    assert len(keys) == len(set(keys))


def test_rrg_roadmap_valid(twotunnel):
    ann = annotate(build_skeleton(twotunnel), env_metrics(twotunnel))
    cfg = PlannerConfig(growth="rrg_connect", bias_metric="energy", rng_seed=4)
    res = plan(twotunnel, ann, twotunnel.query, cfg)
    assert res.success and not audit(twotunnel, res.roadmap)
    assert len(res.roadmap.edges) >= res.roadmap.count - 1


def test_failure_keeps_partial_roadmap(walls, walls_skeleton):
    ann = annotate(walls_skeleton, env_metrics(walls))
    res = plan(walls, ann, walls.query, PlannerConfig(max_iterations=30, rng_seed=1))
    assert not res.success and res.goal_id is None
    assert res.stats.iterations == 30 and res.roadmap.count > 1
    assert res.stats.edge_visit_order


def test_plan_errors(walls, walls_skeleton):
    ann = annotate(walls_skeleton, env_metrics(walls))
    with pytest.raises(PlannerError):
        plan(walls, None, walls.query, PlannerConfig())
    with pytest.raises(PlannerError):
        plan(walls, ann, walls.query, PlannerConfig(bias_metric="energy"))
    with pytest.raises(PlannerError):
        plan(walls, ann, Query(Point2(0.1, 0.1), walls.query.goal), PlannerConfig())


@pytest.mark.parametrize("kw", [
    dict(strategy="XX"), dict(growth="prm"), dict(selection_rule="max"), dict(p_whole_env=1.0),
    dict(p_whole_env=0.0), dict(bias_metric=None), dict(extend_step=0.0), dict(softmin_temperature=0.0),
])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        PlannerConfig(**kw)


def test_roadmap_roundtrip():
    rm = Roadmap("graph")
    a = rm.add_node((1.0, 2.0))
    b = rm.add_node((1.5, 2.25), a)
    c = rm.add_node((0.1 + 0.2, 3.0), b)
    rm.add_edge(a, c)
    again = Roadmap.loads(rm.dumps())
    assert again.dumps() == rm.dumps()
    assert again.mode == "graph" and again.has_edge(c, a)
