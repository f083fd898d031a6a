"""Step-1 MILP: fixed equal-share bandwidth, linearized with Z/U auxiliaries."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Hashable, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from ..linkgraph import LinkGraph
from ..model import CLOUD, Instance, Link, Plan

FAMILIES = ("X", "Xb", "Y", "W", "Z", "U")
BINARY_FAMILIES = ("X", "Xb", "Y", "W")


@dataclass
class MilpModel:
    inst: Instance
    graph: LinkGraph
    links: List[Link]
    z_bar: int
    names: List[str]
    family_of: List[str]
    index: Dict[str, Dict[Hashable, int]]
    c: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    binary: np.ndarray
    A: sp.csr_matrix
    row_lo: np.ndarray
    row_hi: np.ndarray
    row_tags: List[str]
    row_names: List[str]
    strengthened: bool = True
    _incoming: Dict[int, List[int]] = field(default_factory=dict, repr=False)
    _outgoing: Dict[int, List[int]] = field(default_factory=dict, repr=False)

    @property
    def n_vars(self) -> int:
        return len(self.names)

    @property
    def n_rows(self) -> int:
        return len(self.row_names)

    def count(self, family: str) -> int:
        return len(self.index[family])

    def var(self, family: str, key: Hashable) -> int:
        return self.index[family][key]

    def rows_tagged(self, tag: str) -> List[int]:
        return [r for r, t in enumerate(self.row_tags) if t == tag]

    def objective(self, x: np.ndarray) -> float:
        return float(self.c @ x)

    def row_violations(self, x: np.ndarray, tol: float = 1e-9) -> List[Tuple[str, str, float]]:
        """(tag, row name, amount) for every row or bound violated by ``x``."""
        act = self.A @ x
        out = []
        for r in np.flatnonzero((act < self.row_lo - tol) | (act > self.row_hi + tol)):
            amt = max(self.row_lo[r] - act[r], act[r] - self.row_hi[r])
            out.append((self.row_tags[r], self.row_names[r], float(amt)))
        for j in np.flatnonzero((x < self.lb - tol) | (x > self.ub + tol)):
            out.append(("bound", self.names[j], float(max(self.lb[j] - x[j], x[j] - self.ub[j]))))
        for j in np.flatnonzero(self.binary & (np.abs(x - np.round(x)) > tol)):
            out.append(("integrality", self.names[j], float(abs(x[j] - np.round(x[j])))))
        return out


class _Builder:
    def __init__(self) -> None:
        self.names: List[str] = []
        self.family_of: List[str] = []
        self.index: Dict[str, Dict[Hashable, int]] = {f: {} for f in FAMILIES}
        self.c: List[float] = []
        self.lb: List[float] = []
        self.ub: List[float] = []
        self.rows: List[int] = []
        self.cols: List[int] = []
        self.vals: List[float] = []
        self.row_lo: List[float] = []
        self.row_hi: List[float] = []
        self.row_tags: List[str] = []
        self.row_names: List[str] = []

    def add_var(self, family: str, key: Hashable, name: str, lb=0.0, ub=1.0, cost=0.0) -> int:
        j = len(self.names)
        self.names.append(name)
        self.family_of.append(family)
        self.index[family][key] = j
        self.c.append(cost)
        self.lb.append(lb)
        self.ub.append(ub)
        return j

    def add_row(self, tag: str, name: str, terms, lo: float, hi: float) -> None:
        r = len(self.row_names)
        merged: Dict[int, float] = {}
        for j, v in terms:
            merged[j] = merged.get(j, 0.0) + v
        for j in sorted(merged):
            if merged[j] != 0.0:
                self.rows.append(r)
                self.cols.append(j)
                self.vals.append(merged[j])
        self.row_lo.append(lo)
        self.row_hi.append(hi)
        self.row_tags.append(tag)
        self.row_names.append(name)


def _lname(l: Link) -> str:
    return f"{l.src}_{l.src_if}_{l.dst}_{l.dst_if}"


def _partner(l: Link, bs_id: int) -> int:
    return l.dst if l.src == bs_id else l.src


def _loc(loc) -> str:
    return "C" if loc == CLOUD else str(loc)


def build_p1(inst: Instance, g: LinkGraph, *, strengthen: bool = True,
             z_bar: Optional[int] = None) -> MilpModel:
    """Build the linearized Step-1 model.

    ``strengthen`` adds two groups of rows that keep the optimum unchanged:

    * ``U >= Xb`` (a task alone on a link still pays for the whole link).
      They hold at every integer point of the linearization and lift the LP
      bound from near zero to a shortest-path bound.
    * interface ordering: at each BS interface ``i+1`` is used only if ``i``
      is, with partner ids nondecreasing.  Interface labels carry no cost, so
      every plan has a relabelled copy satisfying these rows (see
      :func:`canonical_labels`), and the search no longer revisits
      symmetric topologies.

    With ``strengthen=False`` the model holds exactly the base rows.
    """
    inf = np.inf
    n = inst.n_bs
    tasks = list(inst.tasks)
    B = len(tasks)
    zb = B if z_bar is None else z_bar
    links = g.candidate_links
    P = set(inst.cloud_bs)
    bld = _Builder()
    theta = inst.cloud_latency

    for l in links:
        bld.add_var("X", l, f"X_{_lname(l)}")
    for l in links:
        for t in tasks:
            bld.add_var("Xb", (l, t.id), f"Xb_{_lname(l)}_{t.id}")
    for t in tasks:
        for nid in list(range(1, n + 1)) + [CLOUD]:
            bld.add_var("Y", (nid, t.id), f"Y_{_loc(nid)}_{t.id}")
    for t in tasks:
        for p in sorted(P):
            bld.add_var("W", (p, t.id), f"W_{p}_{t.id}", cost=t.weight * theta)
    for l in links:
        bld.add_var("Z", l, f"Z_{_lname(l)}", ub=inf)
    for l in links:
        R = g.capacity(l)
        for t in tasks:
            bld.add_var("U", (l, t.id), f"U_{_lname(l)}_{t.id}", ub=inf, cost=t.weight * t.size / R)

    X = bld.index["X"]
    Xb = bld.index["Xb"]
    Y = bld.index["Y"]
    W = bld.index["W"]
    Z = bld.index["Z"]
    U = bld.index["U"]

    incoming: Dict[int, List[Link]] = {k: [] for k in range(1, n + 1)}
    outgoing: Dict[int, List[Link]] = {k: [] for k in range(1, n + 1)}
    by_pair: Dict[Tuple[int, int], List[Link]] = {}
    by_iface: Dict[Tuple[int, int], List[Link]] = {}
    for l in links:
        outgoing[l.src].append(l)
        incoming[l.dst].append(l)
        by_pair.setdefault(l.pair, []).append(l)
        by_iface.setdefault((l.src, l.src_if), []).append(l)
        by_iface.setdefault((l.dst, l.dst_if), []).append(l)

    # interface connectivity
    for (a, b_), ls in sorted(by_pair.items()):
        bld.add_row("iface_pair", f"iface_pair_{a}_{b_}", [(X[l], 1.0) for l in ls], -inf, 1.0)
    for bs in inst.base_stations:
        for i in range(1, bs.interfaces + 1):
            ls = by_iface.get((bs.id, i), [])
            if ls:
                bld.add_row("iface_use", f"iface_use_{bs.id}_{i}", [(X[l], 1.0) for l in ls], -inf, 1.0)

    # task association to links
    for l in links:
        for t in tasks:
            bld.add_row("assoc", f"assoc_{_lname(l)}_{t.id}", [(Xb[l, t.id], 1.0), (X[l], -1.0)], -inf, 0.0)
    for l in links:
        bld.add_row("no_idle", f"no_idle_{_lname(l)}",
                    [(X[l], 1.0)] + [(Xb[l, t.id], -1.0) for t in tasks], -inf, 0.0)

    # binary flow conservation: in + T = Y + out (+ W at cloud BSs)
    for t in tasks:
        for k in range(1, n + 1):
            terms = [(Xb[l, t.id], 1.0) for l in incoming[k]]
            terms += [(Xb[l, t.id], -1.0) for l in outgoing[k]]
            terms.append((Y[k, t.id], -1.0))
            if k in P:
                terms.append((W[k, t.id], -1.0))
            rhs = -1.0 if t.origin == k else 0.0
            bld.add_row("flow", f"flow_{k}_{t.id}", terms, rhs, rhs)

    # servers
    for t in tasks:
        for bs in inst.base_stations:
            bld.add_row("server_coloc", f"server_coloc_{bs.id}_{t.id}", [(Y[bs.id, t.id], 1.0)],
                        -inf, 1.0 if bs.has_server else 0.0)
    for bs in inst.base_stations:
        if tasks:
            bld.add_row("server_cap", f"server_cap_{bs.id}",
                        [(Y[bs.id, t.id], t.size) for t in tasks], -inf, bs.capacity)
    for t in tasks:
        for k in range(1, n + 1):
            terms = [(Y[k, t.id], 1.0)] + [(Xb[l, t.id], -1.0) for l in incoming[k]]
            bld.add_row("server_recv", f"server_recv_{k}_{t.id}", terms, -inf, 1.0 if t.origin == k else 0.0)

    # cloud
    for t in tasks:
        for p in sorted(P):
            terms = [(W[p, t.id], 1.0)] + [(Xb[l, t.id], -1.0) for l in incoming[p]]
            bld.add_row("cloud_entry", f"cloud_entry_{p}_{t.id}", terms, -inf, 1.0 if t.origin == p else 0.0)
        terms = [(Y[CLOUD, t.id], 1.0)] + [(W[p, t.id], -1.0) for p in sorted(P)]
        bld.add_row("cloud_serve", f"cloud_serve_{t.id}", terms, -inf, 0.0)

    # every task processed exactly once
    for t in tasks:
        terms = [(Y[k, t.id], 1.0) for k in range(1, n + 1)] + [(Y[CLOUD, t.id], 1.0)]
        bld.add_row("complete", f"complete_{t.id}", terms, 1.0, 1.0)

    # origin departure: leave, serve locally, or (wired origin) go to the cloud
    for t in tasks:
        o = t.origin
        terms = [(Xb[l, t.id], 1.0) for l in outgoing[o]] + [(Y[o, t.id], 1.0)]
        if o in P:
            terms.append((W[o, t.id], 1.0))
        bld.add_row("origin", f"origin_{t.id}", terms, 1.0, 1.0)

    # linearization
    for l in links:
        terms = [(Z[l], 1.0)] + [(Xb[l, t.id], -1.0) for t in tasks]
        bld.add_row("zdef", f"zdef_{_lname(l)}", terms, 0.0, 0.0)
    for l in links:
        for t in tasks:
            u, xb, z = U[l, t.id], Xb[l, t.id], Z[l]
            nm = f"{_lname(l)}_{t.id}"
            bld.add_row("u_le_x", f"u_le_x_{nm}", [(u, 1.0), (xb, -float(zb))], -inf, 0.0)
            bld.add_row("u_le_z", f"u_le_z_{nm}", [(u, 1.0), (z, -1.0)], -inf, 0.0)
            bld.add_row("u_ge", f"u_ge_{nm}", [(u, 1.0), (z, -1.0), (xb, -float(zb))], -float(zb), inf)
            if strengthen:
                bld.add_row("u_floor", f"u_floor_{nm}", [(u, 1.0), (xb, -1.0)], 0.0, inf)

    if strengthen:
        # canonical interface labels: each BS fills its interfaces in order of
        # partner id, so relabelled copies of one topology are cut off
        for bs in inst.base_stations:
            for i in range(1, bs.interfaces):
                lo_ls = by_iface.get((bs.id, i), [])
                hi_ls = by_iface.get((bs.id, i + 1), [])
                if not hi_ls:
                    continue
                used_hi = [(X[l], 1.0) for l in hi_ls]
                bld.add_row("iface_prefix", f"iface_prefix_{bs.id}_{i}",
                            used_hi + [(X[l], -1.0) for l in lo_ls], -inf, 0.0)
                terms = [(X[l], float(_partner(l, bs.id))) for l in lo_ls]
                terms += [(X[l], float(n - _partner(l, bs.id))) for l in hi_ls]
                bld.add_row("iface_order", f"iface_order_{bs.id}_{i}", terms, -inf, float(n))

    nv = len(bld.names)
    A = sp.csr_matrix((bld.vals, (bld.rows, bld.cols)), shape=(len(bld.row_names), nv))
    binary = np.array([f in BINARY_FAMILIES for f in bld.family_of], dtype=bool)
    return MilpModel(
        inst=inst, graph=g, links=links, z_bar=zb, names=bld.names, family_of=bld.family_of,
        index=bld.index, c=np.array(bld.c, float), lb=np.array(bld.lb, float),
        ub=np.array(bld.ub, float), binary=binary, A=A, row_lo=np.array(bld.row_lo, float),
        row_hi=np.array(bld.row_hi, float), row_tags=bld.row_tags, row_names=bld.row_names,
        strengthened=strengthen,
        _incoming={k: [X[l] for l in v] for k, v in incoming.items()},
        _outgoing={k: [X[l] for l in v] for k, v in outgoing.items()},
    )


def canonical_labels(plan: Plan) -> Plan:
    """Relabel interfaces so each BS uses 1..k in order of partner id."""
    ends: Dict[int, List[Tuple[int, Link, str]]] = {}
    for l in sorted(plan.links):
        ends.setdefault(l.src, []).append((l.dst, l, "src"))
        ends.setdefault(l.dst, []).append((l.src, l, "dst"))
    new_if: Dict[Tuple[Link, str], int] = {}
    for bs_id, items in ends.items():
        for k, (_, l, side) in enumerate(sorted(items, key=lambda e: (e[0], e[1], e[2]))):
            new_if[l, side] = k + 1
    relabel = {l: Link(l.src, new_if[l, "src"], l.dst, new_if[l, "dst"]) for l in plan.links}
    paths = {b: tuple(relabel[Link(*l)] for l in ls) for b, ls in plan.task_links.items()}
    return Plan.from_paths(paths, dict(plan.assignment), dict(plan.cloud_entry))


def plan_to_vector(m: MilpModel, plan: Plan) -> Optional[np.ndarray]:
    """Encode ``plan`` as a model point, or None when it names links/locations
    the model has no variable for."""
    x = np.zeros(m.n_vars)
    for l in plan.links:
        j = m.index["X"].get(Link(*l))
        if j is None:
            return None
        x[j] = 1.0
    z: Dict[Link, int] = {}
    for b, ls in plan.task_links.items():
        for l in set(ls):
            j = m.index["Xb"].get((Link(*l), b))
            if j is None:
                return None
            x[j] = 1.0
            z[Link(*l)] = z.get(Link(*l), 0) + 1
    for l, cnt in z.items():
        x[m.index["Z"][l]] = cnt
    for b, ls in plan.task_links.items():
        for l in set(ls):
            x[m.index["U"][Link(*l), b]] = z[Link(*l)]
    for b, loc in plan.assignment.items():
        j = m.index["Y"].get((loc, b))
        if j is None:
            return None
        x[j] = 1.0
    for b, p in plan.cloud_entry.items():
        j = m.index["W"].get((p, b))
        if j is None:
            return None
        x[j] = 1.0
    return x


def vector_to_plan(m: MilpModel, x: np.ndarray) -> Plan:
    """Decode an integral model point; per-task links are ordered from the origin
    and any detached cycles (possible only at zero cost) are dropped."""
    paths: Dict[int, Tuple[Link, ...]] = {}
    assignment: Dict[int, object] = {}
    entry: Dict[int, int] = {}
    for t in m.inst.tasks:
        used = {l for l in m.links if x[m.index["Xb"][l, t.id]] > 0.5}
        loc = None
        for k in list(range(1, m.inst.n_bs + 1)) + [CLOUD]:
            if x[m.index["Y"][k, t.id]] > 0.5:
                loc = k
        assignment[t.id] = loc
        sink = loc
        if loc == CLOUD:
            for p in m.inst.cloud_bs:
                if x[m.index["W"][p, t.id]] > 0.5:
                    entry[t.id] = p
                    sink = p
        paths[t.id] = _bfs_path(used, t.origin, sink)
    return Plan.from_paths(paths, assignment, entry)


def _bfs_path(used, origin: int, sink) -> Tuple[Link, ...]:
    if sink is None or sink == origin:
        return ()
    prev: Dict[int, Link] = {}
    frontier = [origin]
    seen = {origin}
    out = sorted(used)
    while frontier and sink not in seen:
        nxt = []
        for node in frontier:
            for l in out:
                if l.src == node and l.dst not in seen:
                    seen.add(l.dst)
                    prev[l.dst] = l
                    nxt.append(l.dst)
        frontier = nxt
    if sink not in prev:
        return ()
    path = []
    at = sink
    while at != origin:
        l = prev[at]
        path.append(l)
        at = l.src
    return tuple(reversed(path))
