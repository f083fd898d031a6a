"""Best-first LP-based branch-and-bound for the Step-1 model."""

from __future__ import annotations

import heapq
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from ..linkgraph import LinkGraph
from ..model import CLOUD, Instance, Plan
from .model import MilpModel, vector_to_plan
from .simplex import DEADLINE, INFEASIBLE, OPTIMAL, LPResult, solve_bounded_lp

log = logging.getLogger(__name__)

OPTIMAL_STATUS = "Optimal"
TIME_LIMIT = "TimeLimitWithGap"
INFEASIBLE_STATUS = "Infeasible"

INT_TOL = 1e-6


class InfeasibleModel(RuntimeError):
    """The root relaxation has no feasible point."""


@dataclass
class SolveLimits:
    node_limit: Optional[int] = None
    time_limit: Optional[float] = None  # seconds
    backend: str = "auto"
    warm_start: bool = True
    progress: Optional[Callable[[str], None]] = None


@dataclass
class SolveOutcome:
    plan: Optional[Plan]
    objective_value: float
    status: str
    gap: float = 0.0
    nodes_explored: int = 0
    best_bound: float = 0.0
    stats: Dict[str, float] = field(default_factory=dict)

    @property
    def is_optimal(self) -> bool:
        return self.status == OPTIMAL_STATUS


def equal_share_total(plan: Plan, inst: Instance, g: LinkGraph) -> float:
    """Weighted hbh latency of ``plan`` when every link is split evenly."""
    users = plan.users()
    total = []
    for t in inst.tasks:
        lat = [t.size * len(users[l]) / g.capacity(l) for l in plan.path(t.id)]
        if plan.assignment.get(t.id) == CLOUD:
            lat.append(inst.cloud_latency)
        total.append(t.weight * math.fsum(lat))
    return math.fsum(total)


def solve_lp_relaxation(m: MilpModel, fixings: Optional[Dict[int, float]] = None, *,
                        deadline: Optional[float] = None, backend: str = "auto",
                        basis=None) -> LPResult:
    """LP relaxation of ``m`` with binaries relaxed to [0, 1] and ``fixings``
    (column index -> 0/1) applied together with association propagation.

    ``basis`` optionally warm-starts the simplex from a parent node's result.
    """
    bounds = _propagate(m, fixings or {})
    if bounds is None:
        return LPResult(INFEASIBLE, None, np.nan, 0)
    lb, ub = bounds
    return solve_bounded_lp(m.c, m.A, m.row_lo, m.row_hi, lb, ub, deadline=deadline,
                            backend=backend, basis=basis)


def _propagate(m: MilpModel, fixings: Dict[int, float]):
    lb = m.lb.copy()
    ub = m.ub.copy()
    for j, v in fixings.items():
        if not m.binary[j]:
            raise ValueError(f"cannot fix continuous variable {m.names[j]}")
        lb[j] = ub[j] = float(v)
    X = m.index["X"]
    Xb = m.index["Xb"]
    tasks = [t.id for t in m.inst.tasks]
    for l in m.links:
        xj = X[l]
        cols = [Xb[l, b] for b in tasks]
        if any(lb[c] >= 1.0 for c in cols):
            if ub[xj] < 1.0:
                return None
            lb[xj] = 1.0
        if ub[xj] <= 0.0 or all(ub[c] <= 0.0 for c in cols):
            if lb[xj] > 0.0 or any(lb[c] > 0.0 for c in cols):
                return None
            ub[xj] = 0.0
            for c in cols:
                ub[c] = 0.0
    return lb, ub


@dataclass(order=True)
class _Node:
    bound: float
    neg_depth: int
    seq: int
    fixings: Dict[int, float] = field(compare=False)
    basis: object = field(compare=False, default=None)


def solve_p1(m: MilpModel, limits: Optional[SolveLimits] = None) -> SolveOutcome:
    limits = limits or SolveLimits()
    start = time.monotonic()
    deadline = start + limits.time_limit if limits.time_limit is not None else None
    inst, g = m.inst, m.graph

    branch_cols = np.array(
        sorted(j for f in ("Xb", "Y", "W") for j in m.index[f].values()), dtype=np.int64)
    all_bin = np.flatnonzero(m.binary)
    cost = np.abs(m.c)

    incumbent: Optional[Plan] = None
    inc_val = math.inf
    heap: List[_Node] = []
    dive: List[_Node] = []
    seq = 0
    nodes = 0
    worst_drop = 0.0
    limit_hit = False

    def prune_level() -> float:
        if not math.isfinite(inc_val):
            return math.inf
        return inc_val - (1e-10 * abs(inc_val) + 1e-12)

    def push(node: _Node) -> None:
        heapq.heappush(heap, node)

    root = _Node(-math.inf, 0, 0, {})
    dive.append(root)
    while dive or heap:
        if limits.node_limit is not None and nodes >= limits.node_limit:
            limit_hit = True
            break
        if deadline is not None and time.monotonic() > deadline:
            limit_hit = True
            break
        if dive and incumbent is None:
            node = dive.pop()
        else:
            heap.extend(dive)
            heapq.heapify(heap)
            dive.clear()
            node = heapq.heappop(heap)
        if node.bound >= prune_level():
            continue

        res = solve_lp_relaxation(m, node.fixings, deadline=deadline, backend=limits.backend,
                                  basis=node.basis if limits.warm_start else None)
        if res.status == DEADLINE:
            push(node)
            limit_hit = True
            break
        nodes += 1
        if res.status != OPTIMAL:
            if node.seq == 0:
                raise InfeasibleModel("root relaxation is infeasible")
            continue
        val = res.objective
        if node.seq != 0:
            worst_drop = max(worst_drop, node.bound - val)
        if val >= prune_level():
            continue
        x = res.x
        xb = x[branch_cols]
        frac = np.minimum(xb - np.floor(xb), np.ceil(xb) - xb)
        if frac.max(initial=0.0) <= INT_TOL:
            rest = x[all_bin]
            if np.max(np.abs(rest - np.round(rest)), initial=0.0) <= INT_TOL:
                xr = x.copy()
                xr[all_bin] = np.round(rest)
                plan = vector_to_plan(m, xr)
                obj = equal_share_total(plan, inst, g)
                if obj < inc_val:
                    incumbent, inc_val = plan, obj
                    _report(limits, f"incumbent {obj:.9g} after {nodes} nodes")
                continue
            cand = all_bin
            frac = np.abs(x[all_bin] - np.round(x[all_bin]))
        else:
            cand = branch_cols
        j = _pick_branch(cand, frac, cost)
        first = 1.0 if x[j] >= 0.5 else 0.0
        depth = -node.neg_depth + 1
        kids = []
        for v in (1.0 - first, first):
            seq += 1
            fx = dict(node.fixings)
            fx[int(j)] = v
            kids.append(_Node(val, -depth, seq, fx, res.basis))
        if incumbent is None:
            # depth-first until the first incumbent: the rounded side is
            # explored first and the other side is the backtrack point
            dive.append(kids[0])
            dive.append(kids[1])
        else:
            for k in kids:
                push(k)
        if nodes % 200 == 0:
            _report(limits, f"{nodes} nodes, open {len(heap) + len(dive)}, incumbent {inc_val:.6g}")

    open_bounds = [nd.bound for nd in heap + dive if nd.bound < prune_level()]
    stats = {"max_bound_drop": worst_drop, "elapsed": time.monotonic() - start}
    if not limit_hit or not open_bounds:
        if incumbent is None:
            return SolveOutcome(None, math.inf, INFEASIBLE_STATUS, math.inf, nodes, math.inf, stats)
        return SolveOutcome(incumbent, inc_val, OPTIMAL_STATUS, 0.0, nodes, inc_val, stats)
    best_bound = min(min(open_bounds), inc_val)
    if incumbent is None:
        gap = math.inf
    elif inc_val <= 0:
        gap = 0.0
    else:
        gap = max(0.0, (inc_val - max(best_bound, 0.0)) / inc_val) if math.isfinite(best_bound) else 1.0
    return SolveOutcome(incumbent, inc_val, TIME_LIMIT, gap, nodes, best_bound, stats)


def _pick_branch(cand: np.ndarray, frac: np.ndarray, cost: np.ndarray) -> int:
    """Most fractional; ties by larger objective coefficient, then lowest index."""
    best = frac.max()
    tie = cand[frac >= best - 1e-9]
    if tie.size > 1:
        cmax = cost[tie].max()
        tie = tie[cost[tie] >= cmax - 1e-12]
    return int(tie.min())


def _report(limits: SolveLimits, msg: str) -> None:
    log.debug(msg)
    if limits.progress is not None:
        limits.progress(msg)
