import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mecplan.linkgraph import (CoincidentBS, ShapeMismatch, build_link_graph, link_graph_for, modeled_rate,
                               override_rates)
from mecplan.model import GBPS, BaseStation, Instance, LinkModelConfig, Task


def line(*xs, interfaces=2, lm=None):
    bss = tuple(BaseStation(i + 1, x, 0.0, interfaces=interfaces, cloud_attached=(i == 0))
                for i, x in enumerate(xs))
    return Instance(bss, (Task(1, 1.0, 1),), link_model=lm or LinkModelConfig())


def test_rate_at_reference_distance():
    lm = LinkModelConfig()
    g = build_link_graph(line(0.0, lm.reference_distance))
    assert g.rate[0, 1] == lm.rate_at_reference
    # closer than the reference distance is capped, not amplified
    assert modeled_rate(1.0, lm) == lm.rate_at_reference


def test_power_law_by_hand():
    lm = LinkModelConfig(rate_at_reference=8.0 * GBPS, reference_distance=50.0, path_loss_exponent=2.0)
    # 100 m is twice the reference distance: a quarter of the reference rate
    assert modeled_rate(100.0, lm) == pytest.approx(2.0 * GBPS, rel=1e-15)


def test_beyond_max_range_is_absent():
    lm = LinkModelConfig()
    g = build_link_graph(line(0.0, lm.max_range + 1.0))
    assert not g.delta[0, 1]
    assert g.candidate_links == []


def test_three_in_range_count_matches_listing():
    g = build_link_graph(line(0.0, 60.0, 120.0))
    listed = [(a, i, b, j) for a in (1, 2, 3) for b in (1, 2, 3) if a != b
              for i in (1, 2) for j in (1, 2)]
    assert len(g.candidate_links) == 3 * 2 * (2 * 2) == 24
    assert sorted(tuple(l) for l in g.candidate_links) == sorted(listed)


def test_candidate_count_formula_with_mixed_interfaces():
    inst = line(0.0, 60.0, 120.0)
    inst = dataclasses.replace(inst, base_stations=(
        inst.base_stations[0], dataclasses.replace(inst.base_stations[1], interfaces=3), inst.base_stations[2]))
    g = build_link_graph(inst)
    I = [2, 3, 2]
    expected = sum(I[a] * I[b] for a in range(3) for b in range(3) if a != b)
    assert len(g.candidate_links) == expected


def test_coincident():
    with pytest.raises(CoincidentBS):
        build_link_graph(line(5.0, 5.0))


def test_override_identity_floor_and_shape():
    g = build_link_graph(line(0.0, 60.0, 120.0))
    assert override_rates(g, g.rate) == g
    t = g.rate.copy()
    t[0, 1] = t[1, 0] = 0.5 * g.rate_floor
    h = override_rates(g, t)
    assert not h.delta[0, 1] and h.rate[0, 1] == 0.0
    with pytest.raises(ShapeMismatch):
        override_rates(g, np.zeros((2, 2)))
    t = g.rate.copy()
    t[0, 1] = 1.0
    with pytest.raises(ShapeMismatch):
        override_rates(g, t)


def test_override_pins_reference_task_one(six_bs):
    inst, g, _ = six_bs
    # 1.28 GB alone on link 2-3 at the usable rate xi * R takes 1.27 s
    assert 1.28e9 / (inst.saturation * g.rate[1, 2]) == pytest.approx(1.27, abs=5e-5)


def test_instance_overrides_applied():
    inst = dataclasses.replace(line(0.0, 60.0), rate_overrides=((1, 2, 3.0 * GBPS),))
    assert link_graph_for(inst).rate[0, 1] == 3.0 * GBPS


@given(st.floats(1.0, 400.0), st.floats(1.0, 400.0))
def test_range_monotone(r1, r2):
    lo, hi = sorted((r1, r2))
    xs = (0.0, 37.0, 91.0, 160.0, 230.0)
    a = build_link_graph(line(*xs, lm=LinkModelConfig(max_range=max(lo, 50.0))))
    b = build_link_graph(line(*xs, lm=LinkModelConfig(max_range=max(hi, 50.0))))
    assert np.all(b.delta | ~a.delta)


@given(st.floats(0.5, 300.0), st.floats(0.5, 300.0))
def test_rate_nonincreasing_in_distance(d1, d2):
    lm = LinkModelConfig()
    lo, hi = sorted((d1, d2))
    assert modeled_rate(lo, lm) >= modeled_rate(hi, lm)


def test_delta_consistent_with_candidates():
    g = build_link_graph(line(0.0, 100.0, 240.0, 480.0))
    pairs = {(l.src, l.dst) for l in g.candidate_links}
    for a in range(4):
        for b in range(4):
            assert ((a + 1, b + 1) in pairs) == bool(g.delta[a, b])
    assert np.array_equal(g.delta, g.delta.T) and np.array_equal(g.rate, g.rate.T)
    assert math.isclose(g.rate[0, 1], modeled_rate(100.0, LinkModelConfig()))
