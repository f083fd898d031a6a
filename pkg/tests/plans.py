"""Plan builders for tests that need a fixed Step-1 decision."""

import numpy as np

from mecplan.generate import generate_instance
from mecplan.linkgraph import link_graph_for
from mecplan.model import CLOUD, GB, BaseStation, Instance, Link, Plan, Task, validate_instance, validate_plan


def random_plan(inst, g, rng):
    """Random simple walks from each origin (up to three hops), served at the
    walk's end by a server or the cloud.  Each ordered BS pair gets a single
    link whose interface numbers are the partner ids, so interfaces never
    clash when every BS has N interfaces."""
    pair_link = {}
    paths, assign, entry = {}, {}, {}
    for t in inst.tasks:
        for _ in range(50):
            walk = [t.origin]
            for _ in range(int(rng.integers(0, 4))):
                nb = [m for m in g.neighbours(walk[-1]) if m not in walk]
                if not nb:
                    break
                walk.append(int(rng.choice(nb)))
            end = inst.bs(walk[-1])
            opts = ([walk[-1]] if end.capacity > 0 else []) + ([CLOUD] if end.cloud_attached else [])
            if opts:
                break
        else:
            return None
        loc = opts[int(rng.integers(len(opts)))]
        links = []
        for a, b in zip(walk, walk[1:]):
            links.append(pair_link.setdefault((a, b), Link(a, b, b, a)))
        paths[t.id] = tuple(links)
        assign[t.id] = loc
        if loc == CLOUD:
            entry[t.id] = walk[-1]
    return Plan.from_paths(paths, assign, entry)


def random_plans(count, seed=0):
    """``count`` (inst, g, plan) triples with feasible multi-hop plans."""
    out = []
    s = seed
    while len(out) < count:
        rng = np.random.default_rng(s)
        n = int(rng.integers(3, 8))
        b = int(rng.integers(2, 12))
        inst = generate_instance(s, n, n, b, servers=[(1, 100 * GB)], cloud_bs=[n])
        s += 1
        if validate_instance(inst):
            continue
        g = link_graph_for(inst)
        p = random_plan(inst, g, rng)
        if p is None or validate_plan(inst, p, g):
            continue
        out.append((inst, g, p))
    return out


def chain(rates, tasks, xi=1.0, theta=0.2):
    """BSs 1..k on a line 50 m apart with the consecutive rates pinned (every
    other pair zeroed).  BS 1 hosts a large server and BS k is wired to the
    cloud; ``tasks`` is a list of (size, origin, weight)."""
    k = len(rates) + 1
    bss = tuple(BaseStation(i, 50.0 * (i - 1), 0.0, interfaces=2, has_server=(i == 1),
                            storage_capacity=100 * GB if i == 1 else 0.0, cloud_attached=(i == k))
                for i in range(1, k + 1))
    over = []
    for a in range(1, k + 1):
        for b in range(a + 1, k + 1):
            over.append((a, b, float(rates[a - 1]) if b == a + 1 else 0.0))
    ts = tuple(Task(j + 1, s, o, w) for j, (s, o, w) in enumerate(tasks))
    inst = Instance(bss, ts, cloud_latency=theta, saturation=xi, rate_overrides=tuple(over))
    return inst, link_graph_for(inst)


def toward_server(origin):
    """Links from ``origin`` down the chain to BS 1."""
    return tuple(Link(a, 1, a - 1, 2) for a in range(origin, 1, -1))
