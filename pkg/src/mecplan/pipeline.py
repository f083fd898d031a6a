"""Two-step planning: topology and routing first, bandwidth split second."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

from .bwalloc import allocate_p2a, allocate_p2b, equal_share_allocation
from .linkgraph import LinkGraph, link_graph_for
from .milp.bnb import SolveLimits, SolveOutcome, solve_p1
from .milp.model import build_p1
from .model import CLOUD, Allocation, Instance, Link, Location, Plan

POLICIES = ("hbh", "minR")
LOCAL_PATH = "*"


class MissingAllocation(KeyError):
    """The allocation has no share for a (link, task) pair the plan uses."""


class NoPlan(RuntimeError):
    """Step 1 ended without any feasible plan."""

    def __init__(self, outcome: SolveOutcome) -> None:
        super().__init__(f"no feasible plan (status {outcome.status})")
        self.outcome = outcome


@dataclass(frozen=True)
class TaskLatency:
    id: int
    size: float
    origin: int
    location: Location
    path: Tuple[str, ...]
    hops: int
    latency_hbh: Optional[float] = None
    latency_minR: Optional[float] = None

    @property
    def path_text(self) -> str:
        return " ".join(self.path) if self.path else LOCAL_PATH


@dataclass(frozen=True)
class LatencyReport:
    """Per-task serving details and weighted totals.

    ``totals`` is keyed ``"<metric>:<allocation label>"``; ``"step1"`` holds
    the Step-1 objective when the report comes from :func:`run_two_step`.
    """

    tasks: Tuple[TaskLatency, ...]
    totals: Dict[str, float] = field(default_factory=dict)
    meta: Dict[str, object] = field(default_factory=dict)

    def task(self, task_id: int) -> TaskLatency:
        for row in self.tasks:
            if row.id == task_id:
                return row
        raise KeyError(task_id)


def hop_labels(plan: Plan, inst: Instance, task_id: int) -> Tuple[str, ...]:
    """``n(i)→m(j)`` per link, plus ``p(I+1)→Cloud`` for the wired hop."""
    hops = [l.label for l in plan.path(task_id)]
    if plan.assignment.get(task_id) == CLOUD:
        p = plan.cloud_entry[task_id]
        hops.append(f"{p}({inst.bs(p).interfaces + 1})→{CLOUD}")
    return tuple(hops)


def _share(alloc: Allocation, l: Link, b: int) -> float:
    try:
        r = alloc.rho[l, b]
    except KeyError:
        raise MissingAllocation(f"no share for task {b} on {l.label}") from None
    if not r > 0:
        raise MissingAllocation(f"non-positive share {r!r} for task {b} on {l.label}")
    return r


def _cloud_term(plan: Plan, inst: Instance, b: int) -> float:
    return inst.cloud_latency if plan.assignment.get(b) == CLOUD else 0.0


def hbh_latency(plan: Plan, inst: Instance, g: LinkGraph, alloc: Allocation, b: int) -> float:
    size = inst.task(b).size
    parts = [size / (_share(alloc, l, b) * g.capacity(l)) for l in plan.path(b)]
    parts.append(_cloud_term(plan, inst, b))
    return math.fsum(parts)


def path_rate(plan: Plan, g: LinkGraph, alloc: Allocation, b: int) -> float:
    if alloc.psi is not None and b in alloc.psi:
        return alloc.psi[b]
    return min(_share(alloc, l, b) * g.capacity(l) for l in plan.path(b))


def minr_latency(plan: Plan, inst: Instance, g: LinkGraph, alloc: Allocation, b: int) -> float:
    path = plan.path(b)
    cloud = _cloud_term(plan, inst, b)
    if not path:
        return cloud
    for l in path:
        _share(alloc, l, b)
    return len(path) * inst.task(b).size / path_rate(plan, g, alloc, b) + cloud


def _rows(plan: Plan, inst: Instance, metric: str, values: Dict[int, float]) -> Tuple[TaskLatency, ...]:
    out = []
    for t in inst.tasks:
        out.append(TaskLatency(
            id=t.id, size=t.size, origin=t.origin, location=plan.assignment[t.id],
            path=hop_labels(plan, inst, t.id), hops=len(plan.path(t.id)),
            **{f"latency_{metric}": values[t.id]},
        ))
    return tuple(out)


def _weighted(inst: Instance, values: Dict[int, float]) -> float:
    return math.fsum(t.weight * values[t.id] for t in inst.tasks)


def evaluate_hbh(plan: Plan, inst: Instance, g: LinkGraph, alloc: Allocation) -> LatencyReport:
    lat = {t.id: hbh_latency(plan, inst, g, alloc, t.id) for t in inst.tasks}
    return LatencyReport(_rows(plan, inst, "hbh", lat), {f"hbh:{alloc.label}": _weighted(inst, lat)})


def evaluate_minR(plan: Plan, inst: Instance, g: LinkGraph, alloc: Allocation) -> LatencyReport:
    lat = {t.id: minr_latency(plan, inst, g, alloc, t.id) for t in inst.tasks}
    return LatencyReport(_rows(plan, inst, "minR", lat), {f"minR:{alloc.label}": _weighted(inst, lat)})


def evaluate(plan: Plan, inst: Instance, g: LinkGraph, alloc: Allocation) -> LatencyReport:
    """Both metrics under one allocation, merged into a single report."""
    return merge_reports(evaluate_hbh(plan, inst, g, alloc), evaluate_minR(plan, inst, g, alloc))


def merge_reports(first: LatencyReport, second: LatencyReport) -> LatencyReport:
    """Per-task columns filled from ``second`` where ``first`` lacks them; totals unioned."""
    other = {r.id: r for r in second.tasks}
    rows = []
    for r in first.tasks:
        o = other.get(r.id)
        if o is not None:
            r = replace(
                r,
                latency_hbh=r.latency_hbh if r.latency_hbh is not None else o.latency_hbh,
                latency_minR=r.latency_minR if r.latency_minR is not None else o.latency_minR,
            )
        rows.append(r)
    return LatencyReport(tuple(rows), {**first.totals, **second.totals}, {**first.meta, **second.meta})


def allocate(plan: Plan, inst: Instance, g: LinkGraph, policy: str) -> Allocation:
    if policy == "hbh":
        return allocate_p2a(plan, inst, g)
    if policy == "minR":
        return allocate_p2b(plan, inst, g)
    raise ValueError(f"unknown policy {policy!r}; expected one of {POLICIES}")


def step1_report(plan: Plan, inst: Instance, g: LinkGraph) -> LatencyReport:
    """Hop-by-hop latency under the Step-1 equal split (shares summing to one)."""
    return evaluate_hbh(plan, inst, g, equal_share_allocation(plan, inst, budget=1.0))


def solve_report(plan: Plan, inst: Instance, g: LinkGraph, policy: str,
                 outcome: Optional[SolveOutcome] = None) -> Tuple[Allocation, LatencyReport]:
    """Step 2 on a fixed plan: allocate, evaluate, and attach baseline totals."""
    alloc = allocate(plan, inst, g, policy)
    report = evaluate(plan, inst, g, alloc)
    baseline = evaluate(plan, inst, g, equal_share_allocation(plan, inst))
    totals = dict(report.totals)
    totals.update(baseline.totals)
    meta = {"policy": policy, "allocation": alloc.label}
    if outcome is not None:
        totals["step1"] = outcome.objective_value
        meta.update(status=outcome.status, gap=outcome.gap, nodes=outcome.nodes_explored)
    return alloc, LatencyReport(report.tasks, totals, meta)


class TwoStepResult(NamedTuple):
    plan: Plan
    allocation: Allocation
    report: LatencyReport
    outcome: SolveOutcome


def run_two_step(inst: Instance, policy: str = "hbh", limits: Optional[SolveLimits] = None, *,
                 graph: Optional[LinkGraph] = None) -> TwoStepResult:
    """Step 1 always minimizes equal-share hop-by-hop latency; ``policy``
    only picks the Step-2 split and the headline metric."""
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}; expected one of {POLICIES}")
    g = graph if graph is not None else link_graph_for(inst)
    outcome = solve_p1(build_p1(inst, g), limits)
    if outcome.plan is None:
        raise NoPlan(outcome)
    alloc, report = solve_report(outcome.plan, inst, g, policy, outcome)
    return TwoStepResult(outcome.plan, alloc, report, outcome)


# -- sweeps ------------------------------------------------------------------

@dataclass(frozen=True)
class SizeSweepRow:
    scale: float  # percent of the base task sizes
    metric: str
    equal_share_total: float
    optimized_total: float
    status: str
    gap: float

    @property
    def improvement(self) -> float:
        """Relative saving of the optimized split over the equal split."""
        if self.equal_share_total <= 0:
            return 0.0
        return (self.equal_share_total - self.optimized_total) / self.equal_share_total


@dataclass(frozen=True)
class InfraSweepRow:
    interfaces: int
    capacity_factor: float
    policy: str
    equal_share_total: float
    optimized_total: float
    cloud_fraction: float
    status: str
    gap: float


def scale_sizes(inst: Instance, percent: float) -> Instance:
    if not percent > 0:
        raise ValueError(f"scale must be positive, got {percent!r}")
    f = percent / 100.0
    tasks = tuple(replace(t, size=t.size * f) for t in inst.tasks)
    return replace(inst, tasks=tasks)


def rebuild_infrastructure(inst: Instance, interfaces: int, capacity_factor: float) -> Instance:
    """Same geometry and tasks with ``interfaces`` per BS and server storage
    scaled by ``capacity_factor``; factor 0 removes the servers."""
    if interfaces < 1:
        raise ValueError(f"interface count must be >= 1, got {interfaces}")
    if capacity_factor < 0:
        raise ValueError(f"capacity factor must be >= 0, got {capacity_factor}")
    bss = []
    for b in inst.base_stations:
        if b.has_server and capacity_factor > 0:
            b = replace(b, storage_capacity=b.storage_capacity * capacity_factor)
        elif b.has_server:
            b = replace(b, has_server=False, storage_capacity=0.0)
        bss.append(replace(b, interfaces=interfaces))
    return replace(inst, base_stations=tuple(bss))


def _totals(report: LatencyReport, metric: str, label: str) -> Tuple[float, float]:
    return report.totals[f"{metric}:equal-share"], report.totals[f"{metric}:{label}"]


def sweep_task_size(inst: Instance, scale_percents: Sequence[float], policy: Optional[str] = None,
                    limits: Optional[SolveLimits] = None) -> List[SizeSweepRow]:
    """Re-plan at each size scale and compare equal vs optimized splits.

    With ``policy=None`` rows are emitted for both metrics, each under its
    own optimizer, from a single Step-1 solve per scale.
    """
    policies = POLICIES if policy is None else (policy,)
    rows = []
    for s in scale_percents:
        scaled = scale_sizes(inst, s)
        g = link_graph_for(scaled)
        outcome = solve_p1(build_p1(scaled, g), limits)
        if outcome.plan is None:
            raise NoPlan(outcome)
        for pol in policies:
            alloc, report = solve_report(outcome.plan, scaled, g, pol, outcome)
            eq, opt = _totals(report, pol, alloc.label)
            rows.append(SizeSweepRow(float(s), pol, eq, opt, outcome.status, outcome.gap))
    return rows


def sweep_infrastructure(inst: Instance, interface_counts: Sequence[int],
                         capacity_factors: Sequence[float] = (0.0, 0.5, 1.0), policy: str = "minR",
                         limits: Optional[SolveLimits] = None) -> List[InfraSweepRow]:
    rows = []
    for n_if in interface_counts:
        for f in capacity_factors:
            variant = rebuild_infrastructure(inst, n_if, f)
            res = run_two_step(variant, policy, limits)
            eq, opt = _totals(res.report, policy, res.allocation.label)
            cloud = sum(1 for t in variant.tasks if res.plan.assignment[t.id] == CLOUD)
            frac = cloud / variant.n_tasks if variant.n_tasks else 0.0
            rows.append(InfraSweepRow(n_if, float(f), policy, eq, opt, frac,
                                      res.outcome.status, res.outcome.gap))
    return rows
