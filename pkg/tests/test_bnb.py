import math

import pytest

from mecplan.linkgraph import link_graph_for
from mecplan.milp import (OPTIMAL_STATUS, TIME_LIMIT, SolveLimits, brute_force_plan, build_p1,
                          equal_share_total, solve_lp_relaxation, solve_p1)
from mecplan.model import GB, BaseStation, Instance, Task, validate_plan
from mecplan.pipeline import evaluate_hbh
from mecplan.bwalloc import equal_share_allocation
from conftest import tiny_instances

CASES = tiny_instances(15, seed=31, max_bs=3, max_tasks=2)


@pytest.mark.parametrize("inst", CASES, ids=lambda i: f"N{i.n_bs}B{len(i.tasks)}")
def test_matches_brute_force(inst):
    g = link_graph_for(inst)
    ref = brute_force_plan(inst, g)
    m = build_p1(inst, g)
    out = solve_p1(m)
    assert out.status == OPTIMAL_STATUS
    assert out.objective_value == pytest.approx(ref.objective_value, rel=1e-9, abs=1e-12)
    assert validate_plan(inst, out.plan, g) == []
    # root relaxation is a valid lower bound
    root = solve_lp_relaxation(m)
    assert root.objective <= ref.objective_value * (1 + 1e-9) + 1e-12
    # children never improve on parents
    assert out.stats["max_bound_drop"] <= 1e-9 * max(1.0, ref.objective_value)
    # the reported objective is the equal-share hbh total of the plan
    rep = evaluate_hbh(out.plan, inst, g, equal_share_allocation(out.plan, inst, budget=1.0))
    total = math.fsum(t.weight * rep.task(t.id).latency_hbh for t in inst.tasks)
    assert out.objective_value == pytest.approx(total, rel=1e-9)


def test_unstrengthened_model_same_optimum():
    for inst in CASES[:5]:
        g = link_graph_for(inst)
        a = solve_p1(build_p1(inst, g, strengthen=False))
        b = solve_p1(build_p1(inst, g))
        assert a.objective_value == pytest.approx(b.objective_value, rel=1e-9, abs=1e-12)


def test_deterministic():
    inst = tiny_instances(1, seed=8, max_bs=4, max_tasks=4)[0]
    g = link_graph_for(inst)
    a = solve_p1(build_p1(inst, g))
    b = solve_p1(build_p1(inst, g))
    assert a.plan == b.plan and a.nodes_explored == b.nodes_explored


def test_single_task_at_server():
    bss = (BaseStation(1, 0.0, 0.0, has_server=True, storage_capacity=1 * GB),
           BaseStation(2, 90.0, 0.0, cloud_attached=True))
    inst = Instance(bss, (Task(1, 1 * GB, 1),))
    out = solve_p1(build_p1(inst, link_graph_for(inst)))
    assert out.objective_value == 0.0 and out.plan.links == frozenset()


def test_node_limit_reports_gap_not_infeasible(six_bs):
    inst, g, _ = six_bs
    out = solve_p1(build_p1(inst, g), SolveLimits(node_limit=3))
    assert out.status == TIME_LIMIT
    assert out.nodes_explored == 3
    if out.plan is None:
        assert math.isinf(out.gap)
    else:
        assert 0.0 <= out.gap <= 1.0
        assert validate_plan(inst, out.plan, g) == []


def test_six_bs_local_and_cloud_tasks(six_bs):
    inst, g, fixture_plan = six_bs
    out = solve_p1(build_p1(inst, g))
    assert out.status == OPTIMAL_STATUS
    for b in (2, 3, 4):
        origin = inst.task(b).origin
        assert out.plan.assignment[b] == origin and out.plan.path(b) == ()
    assert out.plan.assignment[9] == "Cloud" and out.plan.path(9) == ()
    assert out.objective_value <= equal_share_total(fixture_plan, inst, g) * (1 + 1e-9)
