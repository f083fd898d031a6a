"""Exhaustive Step-1 oracle for tiny instances.

Works at BS level: every established link is some directed BS pair, at most
one per ordered pair, and a BS with ``I`` interfaces can terminate at most
``I`` such pairs.  Any pair set meeting that degree bound admits an interface
labelling, and latency does not depend on the labels, so enumerating
per-task (simple path, serving location) choices covers every topology.
A depth-first walk over tasks prunes on partial cost, which only grows as
tasks are added.
"""

from __future__ import annotations

import math
from typing import Dict, List, Optional, Tuple

from ..linkgraph import LinkGraph
from ..model import CLOUD, Instance, Link, Plan
from .bnb import OPTIMAL_STATUS, SolveOutcome, equal_share_total

DEFAULT_BUDGET = 10_000_000


class TooLarge(ValueError):
    pass


Option = Tuple[Tuple[Tuple[int, int], ...], object, Optional[int]]


def _task_options(inst: Instance, g: LinkGraph, origin: int) -> List[Option]:
    bs = {b.id: b for b in inst.base_stations}
    out: List[Option] = []

    def walk(path: List[int]) -> None:
        here = path[-1]
        edges = tuple(zip(path, path[1:]))
        if bs[here].capacity > 0:
            out.append((edges, here, None))
        if bs[here].cloud_attached:
            out.append((edges, CLOUD, here))
        for nxt in g.neighbours(here):
            if nxt not in path:
                walk(path + [nxt])

    walk([origin])
    return out


def brute_force_plan(inst: Instance, g: LinkGraph, *, budget: int = DEFAULT_BUDGET,
                     prune: bool = True) -> SolveOutcome:
    tasks = list(inst.tasks)
    options = [_task_options(inst, g, t.origin) for t in tasks]
    space = 1
    for o in options:
        space *= max(len(o), 1)
        if space > budget:
            raise TooLarge(f"enumeration space exceeds budget {budget}")
    if any(not o for o in options):
        return SolveOutcome(None, math.inf, "Infeasible", math.inf, 0, math.inf)

    rate = {(a + 1, b + 1): float(g.rate[a, b]) for a in range(g.n_bs) for b in range(g.n_bs)}
    iface = {b.id: b.interfaces for b in inst.base_stations}
    cap = {b.id: b.capacity for b in inst.base_stations}
    theta = inst.cloud_latency

    def standalone(t, opt):
        edges, loc, _ = opt
        c = sum(t.size / rate[e] for e in edges)
        return t.weight * (c + (theta if loc == CLOUD else 0.0))

    for t, opts in zip(tasks, options):
        opts.sort(key=lambda o: (standalone(t, o), len(o[0])))

    count: Dict[Tuple[int, int], int] = {}
    wsum: Dict[Tuple[int, int], float] = {}
    deg: Dict[int, int] = {k: 0 for k in iface}
    load: Dict[int, float] = {k: 0.0 for k in iface}
    choice: List[Option] = [None] * len(tasks)  # type: ignore[list-item]
    best = [math.inf, None]
    visited = [0]

    def rec(k: int, partial: float) -> None:
        if prune and partial >= best[0]:
            return
        if k == len(tasks):
            visited[0] += 1
            if partial < best[0]:
                best[0] = partial
                best[1] = list(choice)
            return
        t = tasks[k]
        w = t.weight * t.size
        for opt in options[k]:
            edges, loc, _ = opt
            if loc != CLOUD and load[loc] + t.size > cap[loc] * (1 + 1e-12):
                continue
            new_edges = [e for e in edges if count.get(e, 0) == 0]
            ok = True
            for e in new_edges:
                deg[e[0]] += 1
                deg[e[1]] += 1
            for e in new_edges:
                if deg[e[0]] > iface[e[0]] or deg[e[1]] > iface[e[1]]:
                    ok = False
            if ok:
                inc = 0.0
                for e in edges:
                    z, s = count.get(e, 0), wsum.get(e, 0.0)
                    inc += (s + (z + 1) * w) / rate[e]
                    count[e] = z + 1
                    wsum[e] = s + w
                if loc == CLOUD:
                    inc += t.weight * theta
                else:
                    load[loc] += t.size
                choice[k] = opt
                rec(k + 1, partial + inc)
                if loc != CLOUD:
                    load[loc] -= t.size
                for e in edges:
                    count[e] -= 1
                    wsum[e] -= w
                    if count[e] == 0:
                        del count[e]
                        del wsum[e]
            for e in new_edges:
                deg[e[0]] -= 1
                deg[e[1]] -= 1

    rec(0, 0.0)
    if best[1] is None:
        return SolveOutcome(None, math.inf, "Infeasible", math.inf, visited[0], math.inf)
    plan = _label(tasks, best[1])
    obj = equal_share_total(plan, inst, g)
    return SolveOutcome(plan, obj, OPTIMAL_STATUS, 0.0, visited[0], obj)


def _label(tasks, chosen: List[Option]) -> Plan:
    pairs = sorted({e for edges, _, _ in chosen for e in edges})
    nxt: Dict[int, int] = {}
    link_of: Dict[Tuple[int, int], Link] = {}
    for a, b in pairs:
        i = nxt.get(a, 0) + 1
        nxt[a] = i
        j = nxt.get(b, 0) + 1
        nxt[b] = j
        link_of[(a, b)] = Link(a, i, b, j)
    paths = {}
    assignment = {}
    entry = {}
    for t, (edges, loc, ent) in zip(tasks, chosen):
        paths[t.id] = tuple(link_of[e] for e in edges)
        assignment[t.id] = loc
        if ent is not None:
            entry[t.id] = ent
    return Plan.from_paths(paths, assignment, entry)
