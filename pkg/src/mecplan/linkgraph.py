"""Feasible mmWave links and their capacities from BS geometry."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Set, Tuple

import numpy as np

from .model import Instance, Link, LinkModelConfig


class CoincidentBS(ValueError):
    pass


class ShapeMismatch(ValueError):
    pass


@dataclass(frozen=True)
class LinkGraph:
    delta: np.ndarray  # bool, N x N, symmetric
    rate: np.ndarray  # bytes/s, N x N, symmetric
    interfaces: Tuple[int, ...]
    rate_floor: float

    @property
    def n_bs(self) -> int:
        return len(self.interfaces)

    @property
    def candidate_links(self) -> List[Link]:
        out = []
        n = self.n_bs
        for a in range(n):
            for b in range(n):
                if a == b or not self.delta[a, b]:
                    continue
                for i in range(1, self.interfaces[a] + 1):
                    for j in range(1, self.interfaces[b] + 1):
                        out.append(Link(a + 1, i, b + 1, j))
        return out

    def capacity(self, link: Link) -> float:
        return float(self.rate[link.src - 1, link.dst - 1])

    def neighbours(self, bs_id: int) -> List[int]:
        return [int(m) + 1 for m in np.flatnonzero(self.delta[bs_id - 1])]

    def reachable_from(self, bs_id: int) -> Set[int]:
        seen = {bs_id}
        stack = [bs_id]
        while stack:
            n = stack.pop()
            for m in self.neighbours(n):
                if m not in seen:
                    seen.add(m)
                    stack.append(m)
        return seen

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LinkGraph):
            return NotImplemented
        return (
            self.interfaces == other.interfaces
            and self.rate_floor == other.rate_floor
            and np.array_equal(self.delta, other.delta)
            and np.array_equal(self.rate, other.rate)
        )

    __hash__ = None  # type: ignore[assignment]


def modeled_rate(distance: float, lm: LinkModelConfig) -> float:
    if distance <= lm.reference_distance:
        return lm.rate_at_reference
    return lm.rate_at_reference * (lm.reference_distance / distance) ** lm.path_loss_exponent


def build_link_graph(inst: Instance) -> LinkGraph:
    lm = inst.link_model
    n = inst.n_bs
    xy = np.array([[b.x, b.y] for b in inst.base_stations], dtype=float).reshape(n, 2)
    delta = np.zeros((n, n), dtype=bool)
    rate = np.zeros((n, n), dtype=float)
    for a in range(n):
        for b in range(a + 1, n):
            d = math.hypot(xy[a, 0] - xy[b, 0], xy[a, 1] - xy[b, 1])
            if d == 0.0:
                raise CoincidentBS(f"BS {a + 1} and BS {b + 1} share a position")
            r = modeled_rate(d, lm)
            rate[a, b] = rate[b, a] = r
            delta[a, b] = delta[b, a] = d <= lm.max_range and r >= lm.rate_floor
    rate[~delta] = 0.0
    return LinkGraph(delta, rate, tuple(b.interfaces for b in inst.base_stations), lm.rate_floor)


def override_rates(g: LinkGraph, table: Sequence[Sequence[float]]) -> LinkGraph:
    """Replace the rate matrix and recompute feasibility against the floor.

    Entries below the floor remove the link; a positive rate on a pair that the
    geometry rules out is rejected.
    """
    t = np.asarray(table, dtype=float)
    n = g.n_bs
    if t.shape != (n, n):
        raise ShapeMismatch(f"expected {n}x{n} rate table, got {t.shape}")
    if not np.array_equal(t, t.T):
        raise ShapeMismatch("rate table must be symmetric")
    off = ~np.eye(n, dtype=bool)
    bad = off & ~g.delta & (t > 0)
    if bad.any():
        a, b = np.argwhere(bad)[0]
        raise ValueError(f"override gives BS {a + 1}-{b + 1} a rate but the pair is out of range")
    delta = g.delta & off & (t >= g.rate_floor)
    rate = np.where(delta, t, 0.0)
    return LinkGraph(delta, rate, g.interfaces, g.rate_floor)


def link_graph_for(inst: Instance) -> LinkGraph:
    """Link graph of ``inst`` with its per-pair rate overrides applied."""
    g = build_link_graph(inst)
    if not inst.rate_overrides:
        return g
    table = g.rate.copy()
    for a, b, r in inst.rate_overrides:
        table[a - 1, b - 1] = table[b - 1, a - 1] = r
    return override_rates(g, table)
