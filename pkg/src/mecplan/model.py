"""Domain types for offloading instances, plans and allocations.

Internal units are bytes, bytes/second and seconds throughout.  Conversion
from the human units used in instance files happens once, in :mod:`mecplan.io`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Tuple, Union

CLOUD = "Cloud"

GB = 1e9
GBPS = 1e9 / 8.0

Location = Union[int, str]


class Link(NamedTuple):
    """Directed link from interface ``src_if`` of BS ``src`` to ``dst_if`` of ``dst``."""

    src: int
    src_if: int
    dst: int
    dst_if: int

    @property
    def label(self) -> str:
        return f"{self.src}({self.src_if})→{self.dst}({self.dst_if})"

    @property
    def pair(self) -> Tuple[int, int]:
        return (self.src, self.dst)


@dataclass(frozen=True)
class LinkModelConfig:
    max_range: float = 250.0
    rate_at_reference: float = 40.0 * GBPS
    reference_distance: float = 50.0
    path_loss_exponent: float = 2.0
    rate_floor: float = 0.5 * GBPS


@dataclass(frozen=True)
class BaseStation:
    id: int
    x: float
    y: float
    interfaces: int = 2
    has_server: bool = False
    storage_capacity: float = 0.0
    cloud_attached: bool = False

    @property
    def capacity(self) -> float:
        """Usable storage (Pi_n * C_n)."""
        return self.storage_capacity if self.has_server else 0.0


@dataclass(frozen=True)
class Task:
    id: int
    size: float
    origin: int
    weight: Optional[float] = None


@dataclass(frozen=True)
class Instance:
    base_stations: Tuple[BaseStation, ...]
    tasks: Tuple[Task, ...]
    cloud_latency: float = 0.2
    saturation: float = 0.95
    link_model: LinkModelConfig = field(default_factory=LinkModelConfig)
    # (n, m, rate) with n < m; applied on top of the link model
    rate_overrides: Tuple[Tuple[int, int, float], ...] = ()
    meta: Mapping[str, object] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "base_stations", tuple(self.base_stations))
        object.__setattr__(self, "tasks", _normalize_weights(tuple(self.tasks)))
        object.__setattr__(self, "rate_overrides", tuple(tuple(o) for o in self.rate_overrides))

    @property
    def n_bs(self) -> int:
        return len(self.base_stations)

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    def bs(self, bs_id: int) -> BaseStation:
        return self.base_stations[bs_id - 1]

    @property
    def cloud_bs(self) -> List[int]:
        return [b.id for b in self.base_stations if b.cloud_attached]

    def weight(self, task: Task) -> float:
        return float(task.weight)

    def task(self, task_id: int) -> Task:
        return self.tasks[task_id - 1]


def _normalize_weights(tasks: Tuple[Task, ...]) -> Tuple[Task, ...]:
    if not tasks:
        return tasks
    if all(t.weight is None for t in tasks):
        w = 1.0 / len(tasks)
        return tuple(_with_weight(t, w) for t in tasks)
    raw = [0.0 if t.weight is None else float(t.weight) for t in tasks]
    total = math.fsum(raw)
    # already-normalized weights are kept verbatim so that re-parsing a
    # saved instance is the identity
    if total <= 0 or not math.isfinite(total) or abs(total - 1.0) <= 1e-12:
        # nonpositive totals are left for validate_instance to report
        return tuple(_with_weight(t, r) for t, r in zip(tasks, raw))
    return tuple(_with_weight(t, r / total) for t, r in zip(tasks, raw))


def _with_weight(t: Task, w: float) -> Task:
    return Task(id=t.id, size=t.size, origin=t.origin, weight=w)


@dataclass(frozen=True)
class Plan:
    """Solved decision state of the Step-1 problem.

    ``task_links`` holds, per task id, the ordered links from the origin to the
    serving BS (or the cloud entry BS).  ``assignment`` maps task ids to a BS id
    or :data:`CLOUD`; ``cloud_entry`` maps cloud-served task ids to the BS that
    forwards them over its wired connection.
    """

    links: frozenset
    task_links: Mapping[int, Tuple[Link, ...]]
    assignment: Mapping[int, Location]
    cloud_entry: Mapping[int, int] = field(default_factory=dict)

    @classmethod
    def from_paths(
        cls,
        task_links: Mapping[int, Iterable[Link]],
        assignment: Mapping[int, Location],
        cloud_entry: Optional[Mapping[int, int]] = None,
    ) -> "Plan":
        paths = {b: tuple(Link(*l) for l in ls) for b, ls in task_links.items()}
        links = frozenset(l for ls in paths.values() for l in ls)
        return cls(links, paths, dict(assignment), dict(cloud_entry or {}))

    def users(self) -> Dict[Link, List[int]]:
        """Task ids per link, in ascending task order."""
        out: Dict[Link, List[int]] = {l: [] for l in sorted(self.links)}
        for b in sorted(self.task_links):
            for l in self.task_links[b]:
                out.setdefault(l, []).append(b)
        return out

    def path(self, task_id: int) -> Tuple[Link, ...]:
        return tuple(self.task_links.get(task_id, ()))


@dataclass(frozen=True)
class Allocation:
    """Bandwidth fractions per (link, task), plus path rates for minR allocations."""

    rho: Mapping[Tuple[Link, int], float]
    psi: Optional[Mapping[int, float]] = None
    label: str = "custom"


@dataclass(frozen=True)
class Violation:
    code: str
    detail: str = ""

    def __str__(self) -> str:
        return f"{self.code}: {self.detail}" if self.detail else self.code


def validate_instance(inst: Instance) -> List[Violation]:
    """Return every violated structural invariant of ``inst`` (empty when valid)."""
    out: List[Violation] = []
    ids = [b.id for b in inst.base_stations]
    if ids != list(range(1, len(ids) + 1)):
        out.append(Violation("NonContiguousBSIds", f"got {ids}"))
    n = len(ids)
    for b in inst.base_stations:
        if not (math.isfinite(b.x) and math.isfinite(b.y)):
            out.append(Violation("NonFinitePosition", f"BS {b.id}"))
        if b.interfaces < 1:
            out.append(Violation("NoInterfaces", f"BS {b.id}"))
        if b.has_server and not b.storage_capacity > 0:
            out.append(Violation("NonPositiveCapacity", f"BS {b.id}"))
    if not any(b.cloud_attached for b in inst.base_stations):
        out.append(Violation("NoCloudAttachment"))

    tids = [t.id for t in inst.tasks]
    if tids != list(range(1, len(tids) + 1)):
        out.append(Violation("NonContiguousTaskIds", f"got {tids}"))
    for t in inst.tasks:
        if not (1 <= t.origin <= n):
            out.append(Violation("DanglingOrigin", f"task {t.id} origin {t.origin}"))
        if not (t.size > 0 and math.isfinite(t.size)):
            out.append(Violation("NonPositiveSize", f"task {t.id}"))
        if t.weight is None or not t.weight > 0:
            out.append(Violation("NonPositiveWeight", f"task {t.id}"))
    if inst.tasks:
        total = math.fsum(t.weight or 0.0 for t in inst.tasks)
        if abs(total - 1.0) > 1e-9:
            out.append(Violation("WeightsNotNormalized", f"sum {total!r}"))

    if not (inst.cloud_latency >= 0 and math.isfinite(inst.cloud_latency)):
        out.append(Violation("BadCloudLatency"))
    if not (0 < inst.saturation <= 1):
        out.append(Violation("BadSaturation", f"{inst.saturation!r}"))

    lm = inst.link_model
    if not all(v > 0 for v in (lm.max_range, lm.rate_at_reference, lm.reference_distance,
                               lm.path_loss_exponent, lm.rate_floor)):
        out.append(Violation("BadLinkModel", "parameters must be positive"))
    elif lm.reference_distance > lm.max_range:
        out.append(Violation("BadLinkModel", "reference_distance > max_range"))

    for ov in inst.rate_overrides:
        a, b_, r = ov
        if not (1 <= a <= n and 1 <= b_ <= n) or a == b_ or r < 0:
            out.append(Violation("BadRateOverride", f"{ov!r}"))

    if out:
        return out

    # geometry-dependent checks only once the basics hold
    from .linkgraph import CoincidentBS, link_graph_for

    try:
        g = link_graph_for(inst)
    except CoincidentBS as exc:
        return [Violation("CoincidentBS", str(exc))]
    except ValueError as exc:
        return [Violation("BadRateOverride", str(exc))]
    sinks = {b.id for b in inst.base_stations if b.cloud_attached or b.capacity > 0}
    for t in inst.tasks:
        if not (g.reachable_from(t.origin) & sinks):
            out.append(Violation("UnreachableTask", f"task {t.id} from BS {t.origin}"))
    return out


def validate_plan(inst: Instance, plan: Plan, graph=None, *, strict: bool = True) -> List[Violation]:
    """Check ``plan`` against every Step-1 feasibility constraint.

    With ``strict=False`` the check is exactly the constraint system of the
    MILP: a task's link set only has to satisfy binary flow conservation.  The
    default additionally requires each task's links to be listed as a simple
    path in travel order, which every solver in this package guarantees.
    """
    from .linkgraph import link_graph_for

    g = graph if graph is not None else link_graph_for(inst)
    out: List[Violation] = []
    n = inst.n_bs
    bs = {b.id: b for b in inst.base_stations}
    tids = {t.id for t in inst.tasks}

    # interface connectivity
    used_if: Dict[Tuple[int, int], Link] = {}
    pairs: Dict[Tuple[int, int], Link] = {}
    for l in sorted(plan.links):
        if not (1 <= l.src <= n and 1 <= l.dst <= n) or l.src == l.dst:
            out.append(Violation("UnknownLink", l.label))
            continue
        if not (1 <= l.src_if <= bs[l.src].interfaces and 1 <= l.dst_if <= bs[l.dst].interfaces):
            out.append(Violation("UnknownInterface", l.label))
            continue
        if not g.delta[l.src - 1][l.dst - 1]:
            out.append(Violation("InfeasibleLink", l.label))
        if l.pair in pairs:
            out.append(Violation("DuplicatePairLink", f"{pairs[l.pair].label} and {l.label}"))
        pairs[l.pair] = l
        for end in ((l.src, l.src_if), (l.dst, l.dst_if)):
            if end in used_if:
                out.append(Violation("InterfaceReuse", f"{end[0]}({end[1]}) in {used_if[end].label} and {l.label}"))
            else:
                used_if[end] = l

    # task association
    carried = set()
    for b, ls in plan.task_links.items():
        if b not in tids:
            out.append(Violation("UnknownTask", f"task {b}"))
            continue
        for l in ls:
            if l not in plan.links:
                out.append(Violation("LinkNotEstablished", f"task {b} on {Link(*l).label}"))
            carried.add(l)
    for l in sorted(plan.links - carried):
        out.append(Violation("IdleLink", l.label))

    # assignment, server and cloud rows
    load: Dict[int, float] = {}
    for t in inst.tasks:
        b = t.id
        if b not in plan.assignment:
            out.append(Violation("MissingAssignment", f"task {b}"))
            continue
        loc = plan.assignment[b]
        links = tuple(plan.task_links.get(b, ()))
        if len(set(links)) != len(links):
            out.append(Violation("RepeatedLink", f"task {b}"))
        inflow: Dict[int, int] = {}
        outflow: Dict[int, int] = {}
        for l in set(links):
            outflow[l.src] = outflow.get(l.src, 0) + 1
            inflow[l.dst] = inflow.get(l.dst, 0) + 1
        entry = plan.cloud_entry.get(b)
        if loc == CLOUD:
            if entry is None:
                out.append(Violation("CloudUnreachable", f"task {b} has no cloud entry"))
                continue
            if entry not in bs or not bs[entry].cloud_attached:
                out.append(Violation("CloudUnreachable", f"task {b} entry {entry} has no wired link"))
                continue
            sink = entry
        else:
            if entry is not None:
                out.append(Violation("CloudUnreachable", f"task {b} has entry but is served at {loc}"))
            if loc not in bs:
                out.append(Violation("UnknownLocation", f"task {b} at {loc!r}"))
                continue
            if not bs[loc].has_server:
                out.append(Violation("ServerColocation", f"task {b} at BS {loc}"))
            load[loc] = load.get(loc, 0.0) + t.size
            sink = loc
        # binary flow conservation: inflow + origin = sink + outflow
        for node in range(1, n + 1):
            lhs = inflow.get(node, 0) + (1 if node == t.origin else 0)
            rhs = outflow.get(node, 0) + (1 if node == sink else 0)
            if lhs != rhs:
                out.append(Violation("FlowConservation", f"task {b} at BS {node}"))
                break
        if inflow.get(t.origin, 0):
            out.append(Violation("OriginDeparture", f"task {b} re-enters origin {t.origin}"))
        if strict and not _is_ordered_simple_path(links, t.origin, sink):
            out.append(Violation("NotSimplePath", f"task {b}"))
    for loc, tot in sorted(load.items()):
        if tot > bs[loc].capacity * (1 + 1e-12):
            out.append(Violation("StorageCapacity", f"BS {loc}: {tot:.6g} > {bs[loc].capacity:.6g}"))
    for b in plan.assignment:
        if b not in tids:
            out.append(Violation("UnknownTask", f"task {b}"))
    return out


def _is_ordered_simple_path(links: Tuple[Link, ...], origin: int, sink: int) -> bool:
    at = origin
    seen = {origin}
    for l in links:
        if l.src != at or l.dst in seen:
            return False
        seen.add(l.dst)
        at = l.dst
    return at == sink
