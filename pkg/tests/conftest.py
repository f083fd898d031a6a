import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from mecplan import data_path
from mecplan.generate import generate_instance
from mecplan.io import load_instance, load_plan
from mecplan.linkgraph import link_graph_for
from mecplan.model import GB, validate_instance

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def tiny_instances(count, seed=2024, max_bs=4, max_tasks=4, interfaces=2):
    """``count`` valid random instances with N <= max_bs, B <= max_tasks.

    BS 1 hosts a small server, BS 3 (when present) a smaller one, and the
    last BS is wired to the cloud; invalid draws are skipped.
    """
    rng = np.random.default_rng(seed)
    out = []
    s = 0
    while len(out) < count:
        n = int(rng.integers(2, max_bs + 1))
        b = int(rng.integers(1, max_tasks + 1))
        servers = [(1, 1.5 * GB)] + ([(3, 1.0 * GB)] if n >= 3 else [])
        inst = generate_instance(10_000 + s, n, interfaces, b, servers=servers, cloud_bs=[n])
        s += 1
        if validate_instance(inst):
            continue
        out.append(inst)
    return out


@pytest.fixture(scope="session")
def six_bs():
    inst = load_instance(data_path("six_bs_instance.json"))
    return inst, link_graph_for(inst), load_plan(data_path("six_bs_plan.json"))


# one summary line per acceptance criterion, collected by test_acceptance
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
