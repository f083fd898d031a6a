import dataclasses

import pytest

from mecplan.model import (CLOUD, GB, BaseStation, Instance, Link, Plan, Task, validate_instance,
                           validate_plan)


def _bs(i, x, y, **kw):
    return BaseStation(id=i, x=x, y=y, **kw)


def minimal():
    return Instance(
        base_stations=(_bs(1, 0.0, 0.0, has_server=True, storage_capacity=2 * GB),
                       _bs(2, 100.0, 0.0, cloud_attached=True)),
        tasks=(Task(1, 0.5 * GB, 1, 0.5), Task(2, 0.7 * GB, 2, 0.5)),
    )


def codes(violations):
    return sorted(v.code for v in violations)


def test_minimal_instance_is_valid():
    assert validate_instance(minimal()) == []


def test_no_cloud_attachment():
    inst = minimal()
    bss = tuple(dataclasses.replace(b, cloud_attached=False) for b in inst.base_stations)
    assert codes(validate_instance(dataclasses.replace(inst, base_stations=bss))) == ["NoCloudAttachment"]


def test_dangling_origin():
    inst = minimal()
    tasks = (inst.tasks[0], dataclasses.replace(inst.tasks[1], origin=7))
    assert codes(validate_instance(dataclasses.replace(inst, tasks=tasks))) == ["DanglingOrigin"]


def test_weights_default_uniform_and_normalize():
    inst = Instance(minimal().base_stations, (Task(1, 1.0, 1), Task(2, 1.0, 2), Task(3, 1.0, 2)))
    assert [t.weight for t in inst.tasks] == [1 / 3] * 3
    inst = Instance(minimal().base_stations, (Task(1, 1.0, 1, 2.0), Task(2, 1.0, 2, 6.0)))
    assert [t.weight for t in inst.tasks] == [0.25, 0.75]


@pytest.mark.parametrize("mutate, code", [
    (lambda i: dataclasses.replace(i, saturation=0.0), "BadSaturation"),
    (lambda i: dataclasses.replace(i, saturation=1.5), "BadSaturation"),
    (lambda i: dataclasses.replace(i, cloud_latency=-1.0), "BadCloudLatency"),
    (lambda i: dataclasses.replace(i, tasks=(dataclasses.replace(i.tasks[0], size=0.0), i.tasks[1])),
     "NonPositiveSize"),
    (lambda i: dataclasses.replace(i, base_stations=(dataclasses.replace(i.base_stations[0], storage_capacity=0.0),
                                                     i.base_stations[1])), "NonPositiveCapacity"),
    (lambda i: dataclasses.replace(i, base_stations=(dataclasses.replace(i.base_stations[0], interfaces=0),
                                                     i.base_stations[1])), "NoInterfaces"),
    (lambda i: dataclasses.replace(i, base_stations=(i.base_stations[0],
                                                     dataclasses.replace(i.base_stations[1], id=3))),
     "NonContiguousBSIds"),
    (lambda i: dataclasses.replace(i, base_stations=(i.base_stations[0],
                                                     dataclasses.replace(i.base_stations[1], x=0.0))),
     "CoincidentBS"),
    (lambda i: dataclasses.replace(i, base_stations=(i.base_stations[0],
                                                     dataclasses.replace(i.base_stations[1], x=float("nan")))),
     "NonFinitePosition"),
    (lambda i: dataclasses.replace(i, rate_overrides=((1, 1, 5.0),)), "BadRateOverride"),
])
def test_instance_mutations(mutate, code):
    assert code in codes(validate_instance(mutate(minimal())))


def test_unreachable_task():
    inst = minimal()
    far = dataclasses.replace(inst.base_stations[1], x=10_000.0)
    inst = dataclasses.replace(inst, base_stations=(inst.base_stations[0], far),
                               tasks=(inst.tasks[0], dataclasses.replace(inst.tasks[1], origin=1, size=5 * GB)))
    # reachability ignores storage size: both tasks can reach BS 1's server
    assert validate_instance(inst) == []
    lonely = dataclasses.replace(inst, base_stations=(
        dataclasses.replace(inst.base_stations[0], has_server=False, storage_capacity=0.0), far))
    assert codes(validate_instance(lonely)) == ["UnreachableTask", "UnreachableTask"]


# -- plans, checked against the six-BS reference plan ------------------

def test_six_bs_plan_is_valid(six_bs):
    inst, g, plan = six_bs
    assert validate_plan(inst, plan, g) == []


def _edit(plan, paths=None, assignment=None, entry=None):
    return Plan.from_paths({**plan.task_links, **(paths or {})},
                           {**plan.assignment, **(assignment or {})},
                           entry if entry is not None else plan.cloud_entry)


def test_server_colocation(six_bs):
    inst, g, plan = six_bs
    # task 9 sits at BS 6, which has no server
    bad = _edit(plan, assignment={9: 6}, entry={k: v for k, v in plan.cloud_entry.items() if k != 9})
    assert "ServerColocation" in codes(validate_plan(inst, bad, g))


def test_interface_reuse(six_bs):
    inst, g, plan = six_bs
    # move task 1 onto a link that reuses interface 1 of BS 4 (already on 4(1)->1(2))
    bad = _edit(plan, paths={1: (Link(2, 2, 3, 1),), 6: (Link(4, 1, 1, 2),), 8: (Link(4, 1, 1, 1),)})
    assert "InterfaceReuse" in codes(validate_plan(inst, bad, g))


def test_storage_capacity(six_bs):
    inst, g, plan = six_bs
    # task 7 (1.96 GB) on top of BS 1's 2.96 GB exceeds its 3.2 GB
    bad = _edit(plan, paths={7: ()}, assignment={7: 1},
                entry={k: v for k, v in plan.cloud_entry.items() if k != 7})
    assert codes(validate_plan(inst, bad, g)) == ["StorageCapacity"]


def test_flow_conservation_and_missing_assignment(six_bs):
    inst, g, plan = six_bs
    broken = _edit(plan, paths={1: ()})
    assert "FlowConservation" in codes(validate_plan(inst, broken, g))
    idle = Plan(plan.links | {Link(3, 2, 6, 2)}, plan.task_links, plan.assignment, plan.cloud_entry)
    assert "IdleLink" in codes(validate_plan(inst, idle, g))
    partial = Plan(plan.links, plan.task_links, {k: v for k, v in plan.assignment.items() if k != 4},
                   plan.cloud_entry)
    assert codes(validate_plan(inst, partial, g)) == ["MissingAssignment"]


def test_cloud_entry_rules(six_bs):
    inst, g, plan = six_bs
    no_entry = _edit(plan, entry={k: v for k, v in plan.cloud_entry.items() if k != 9})
    assert codes(validate_plan(inst, no_entry, g)) == ["CloudUnreachable"]
    wrong = _edit(plan, entry={**plan.cloud_entry, 9: 5})
    assert "CloudUnreachable" in codes(validate_plan(inst, wrong, g))


def test_infeasible_link_and_pair_duplicate(six_bs):
    inst, g, plan = six_bs
    # 4 -> 6 has no link in the fixture
    bad = _edit(plan, paths={9: (Link(6, 2, 4, 2),)}, assignment={9: CLOUD})
    got = codes(validate_plan(inst, bad, g))
    assert "InfeasibleLink" in got
    dup = _edit(plan, paths={8: (Link(4, 2, 1, 1),)})
    assert "DuplicatePairLink" in codes(validate_plan(inst, dup, g))


def test_strict_path_order(six_bs):
    inst, g, plan = six_bs
    swapped = _edit(plan, paths={7: tuple(reversed(plan.path(7)))})
    assert codes(validate_plan(inst, swapped, g)) == ["NotSimplePath"]
    assert validate_plan(inst, swapped, g, strict=False) == []
