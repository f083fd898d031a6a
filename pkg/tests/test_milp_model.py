import dataclasses

import numpy as np
import pytest

from mecplan.linkgraph import link_graph_for
from mecplan.milp import (OPTIMAL_STATUS, build_p1, canonical_labels, equal_share_total, plan_to_vector,
                          solve_lp_relaxation, solve_p1, vector_to_plan)
from mecplan.milp.simplex import INFEASIBLE, OPTIMAL
from mecplan.model import CLOUD, GB, BaseStation, Instance, Link, Task
from mecplan.pipeline import step1_report


def pair_instance(cloud=(2,), server_cap=2 * GB, origin=1, size=0.5 * GB, tasks=1):
    bss = (BaseStation(1, 0.0, 0.0, interfaces=1),
           BaseStation(2, 100.0, 0.0, interfaces=1, has_server=server_cap > 0, storage_capacity=server_cap))
    bss = tuple(dataclasses.replace(b, cloud_attached=b.id in cloud) for b in bss)
    return Instance(bss, tuple(Task(k + 1, size, origin) for k in range(tasks)))


@pytest.mark.parametrize("cloud", [(2,), (1, 2)])
def test_variable_counts_by_hand(cloud):
    inst = pair_instance(cloud=cloud)
    m = build_p1(inst, link_graph_for(inst), strengthen=False)
    assert len(m.links) == 2  # one pair, both directions
    assert (m.count("X"), m.count("Xb"), m.count("Y"), m.count("W")) == (2, 2, 3, len(cloud))
    assert (m.count("Z"), m.count("U")) == (2, 2)
    assert m.binary.sum() == 2 + 2 + 3 + len(cloud)


def test_row_counts_by_hand():
    inst = pair_instance()
    m = build_p1(inst, link_graph_for(inst), strengthen=False)
    tags = {t: len(m.rows_tagged(t)) for t in set(m.row_tags)}
    # two ordered BS pairs, two interfaces, two directed links, one task, two BSs, one cloud BS
    assert tags == {"iface_pair": 2, "iface_use": 2, "assoc": 2, "no_idle": 2, "flow": 2,
                    "server_coloc": 2, "server_cap": 2, "server_recv": 2, "cloud_entry": 1,
                    "cloud_serve": 1, "complete": 1, "origin": 1, "zdef": 2, "u_le_x": 2,
                    "u_le_z": 2, "u_ge": 2}
    strong = build_p1(inst, link_graph_for(inst))
    assert len(strong.rows_tagged("u_floor")) == 2
    assert strong.n_vars == m.n_vars


def test_no_tasks_objective_zero():
    inst = dataclasses.replace(pair_instance(), tasks=())
    m = build_p1(inst, link_graph_for(inst))
    assert m.count("Xb") == 0 and not np.any(m.c)
    out = solve_p1(m)
    assert out.status == OPTIMAL_STATUS and out.objective_value == 0.0
    assert out.plan.links == frozenset()


def test_local_server_at_cloud_bs():
    inst = pair_instance(origin=2, server_cap=100 * GB)
    out = solve_p1(build_p1(inst, link_graph_for(inst)))
    assert out.objective_value == 0.0
    assert out.plan.assignment == {1: 2} and out.plan.links == frozenset()


def test_fully_fixed_lp_equals_equal_share_total(six_bs):
    inst, g, plan = six_bs
    for strengthen in (False, True):
        m = build_p1(inst, g, strengthen=strengthen)
        x = plan_to_vector(m, canonical_labels(plan) if strengthen else plan)
        fix = {int(j): float(x[j]) for j in np.flatnonzero(m.binary)}
        res = solve_lp_relaxation(m, fix)
        assert res.status == OPTIMAL
        assert res.objective == pytest.approx(equal_share_total(plan, inst, g), rel=1e-9)
        assert m.row_violations(x) == []


def test_fixed_plan_matches_step1_report(six_bs):
    inst, g, plan = six_bs
    rep = step1_report(plan, inst, g)
    assert rep.totals["hbh:equal-share@1"] == pytest.approx(equal_share_total(plan, inst, g), rel=1e-12)


def test_vector_round_trip(six_bs):
    inst, g, plan = six_bs
    m = build_p1(inst, g, strengthen=False)
    back = vector_to_plan(m, plan_to_vector(m, plan))
    assert back.assignment == plan.assignment and back.links == plan.links
    assert all(back.path(b) == plan.path(b) for b in plan.assignment)


def test_infeasible_fixing():
    inst = pair_instance(cloud=(2,))
    g = link_graph_for(inst)
    m = build_p1(inst, g)
    # task 1 starts at BS 1 but is forced to be served at BS 1, which has no server
    assert solve_lp_relaxation(m, {m.var("Y", (1, 1)): 1.0}).status == INFEASIBLE
    # a task forced onto a link out of a BS it never reaches
    assert solve_lp_relaxation(m, {m.var("Xb", (Link(2, 1, 1, 1), 1)): 1.0,
                                   m.var("Y", (CLOUD, 1)): 1.0}).status == INFEASIBLE


def test_symmetry_rows_keep_canonical_plan(six_bs):
    inst, g, plan = six_bs
    m = build_p1(inst, g)
    x = plan_to_vector(m, canonical_labels(plan))
    assert m.row_violations(x) == []
