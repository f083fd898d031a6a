import dataclasses

import pytest

from mecplan.linkgraph import link_graph_for
from mecplan.milp import TooLarge, brute_force_plan
from mecplan.model import CLOUD, GB, BaseStation, Instance, Task, validate_plan
from conftest import tiny_instances


def relay_instance(theta):
    # origin BS 1 has no server; BS 2 is wired to the cloud and hosts one
    bss = (BaseStation(1, 0.0, 0.0, interfaces=1),
           BaseStation(2, 100.0, 0.0, interfaces=1, has_server=True, storage_capacity=5 * GB,
                       cloud_attached=True))
    return Instance(bss, (Task(1, 0.4 * GB, 1),), cloud_latency=theta)


def test_two_bs_hand_values():
    inst = relay_instance(0.2)
    g = link_graph_for(inst)
    hop = 0.4 * GB / g.rate[0, 1]
    serve_there, via_cloud = hop, hop + 0.2
    out = brute_force_plan(inst, g)
    assert out.objective_value == pytest.approx(min(serve_there, via_cloud), rel=1e-12)
    assert out.plan.assignment == {1: 2}


def test_two_bs_cloud_when_server_full():
    inst = relay_instance(0.2)
    small = dataclasses.replace(inst.base_stations[1], storage_capacity=0.1 * GB)
    inst = dataclasses.replace(inst, base_stations=(inst.base_stations[0], small))
    g = link_graph_for(inst)
    out = brute_force_plan(inst, g)
    assert out.plan.assignment == {1: CLOUD}
    assert out.objective_value == pytest.approx(0.4 * GB / g.rate[0, 1] + 0.2, rel=1e-12)


def test_every_origin_has_server():
    bss = tuple(BaseStation(i, 80.0 * i, 0.0, has_server=True, storage_capacity=2 * GB,
                            cloud_attached=(i == 1)) for i in (1, 2, 3))
    inst = Instance(bss, tuple(Task(k, 0.5 * GB, k) for k in (1, 2, 3)))
    out = brute_force_plan(inst, link_graph_for(inst))
    assert out.objective_value == 0.0


def test_too_large():
    inst = tiny_instances(1, seed=5, max_bs=4, max_tasks=4)[0]
    with pytest.raises(TooLarge):
        brute_force_plan(inst, link_graph_for(inst), budget=1)


@pytest.mark.parametrize("inst", tiny_instances(12, seed=77), ids=lambda i: f"N{i.n_bs}B{len(i.tasks)}")
def test_pruning_does_not_change_optimum(inst):
    g = link_graph_for(inst)
    a = brute_force_plan(inst, g)
    b = brute_force_plan(inst, g, prune=False)
    assert a.objective_value == pytest.approx(b.objective_value, rel=1e-12)
    assert validate_plan(inst, a.plan, g) == []
