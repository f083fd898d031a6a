"""Step-2 bandwidth allocation on a fixed plan.

``allocate_p2a`` splits each link independently to minimize the weighted sum
of per-hop transmission times.  ``allocate_p2b`` gives every task one
end-to-end rate and minimizes the weighted sum of path-rate latencies under
the per-link capacity rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import nnls

from .linkgraph import LinkGraph
from .model import Allocation, Instance, Link, Plan

KKT_TOL = 1e-7
MAX_ITER = 10_000


class EmptyLink(ValueError):
    """A plan link carries no task."""


class NoConvergence(RuntimeError):
    def __init__(self, residual: float, iterations: int) -> None:
        super().__init__(f"dual ascent stopped at KKT residual {residual:.3e} after {iterations} iterations")
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class LinkLoad:
    """One link's share of the capacity problem: users carry ``w = gamma * L``."""

    link: Link
    capacity: float
    users: Tuple[Tuple[int, float], ...]

    def __post_init__(self) -> None:
        if not self.users:
            raise EmptyLink(f"link {self.link.label} has no users")
        if not self.capacity > 0:
            raise ValueError(f"link {self.link.label} has non-positive capacity")


def link_loads(plan: Plan, inst: Instance, g: LinkGraph) -> List[LinkLoad]:
    out = []
    for l, users in plan.users().items():
        out.append(LinkLoad(l, g.capacity(l), tuple((b, inst.task(b).weight * inst.task(b).size) for b in users)))
    return out


def fit_to_budget(values: Sequence[float], budget: float) -> List[float]:
    """Shrink ``values`` by the least float factor so their sum is <= ``budget``,
    both exactly (rational arithmetic) and under left-to-right float summation."""
    vals = [float(v) for v in values]
    exact_budget = Fraction(budget)
    for k in range(64):
        if sum(map(Fraction, vals)) <= exact_budget and sum(vals) <= budget:
            return vals
        factor = 1.0 - 2.0 ** (k - 53)
        vals = [float(v) * factor for v in values]
    raise ArithmeticError("could not fit shares to the budget")


# -- hop-by-hop: per-link square-root rule ----------------------------------

def split_closed_form(weights: Sequence[float], budget: float) -> List[float]:
    """Minimize sum w/rho subject to sum rho <= budget: rho ~ sqrt(w)."""
    roots = [math.sqrt(w) for w in weights]
    total = math.fsum(roots)
    return fit_to_budget([budget * r / total for r in roots], budget)


def split_bisection(weights: Sequence[float], budget: float, rel_tol: float = 1e-15) -> List[float]:
    """Same problem solved by bisection on the capacity multiplier.

    Stationarity gives rho_b = sqrt(w_b / mu); the multiplier is the root of
    sum_b sqrt(w_b / mu) = budget, searched in log space between the bounds
    sum(w) / budget**2 and len(w) * sum(w) / budget**2.
    """
    w = np.asarray(weights, dtype=float)
    sw = float(w.sum())
    lo = math.log(sw / budget ** 2)
    hi = math.log(len(w) * sw / budget ** 2) + 1e-12
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        used = float(np.sqrt(w / math.exp(mid)).sum())
        if used > budget:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rel_tol:
            break
    mu = math.exp(hi)
    return fit_to_budget([math.sqrt(x / mu) for x in w], budget)


def allocate_p2a(plan: Plan, inst: Instance, g: LinkGraph, *, method: str = "closed") -> Allocation:
    xi = inst.saturation
    split = {"closed": split_closed_form, "bisection": split_bisection}[method]
    rho: Dict[Tuple[Link, int], float] = {}
    for load in link_loads(plan, inst, g):
        # dividing every weight by R does not move the optimum
        shares = split([w / load.capacity for _, w in load.users], xi)
        for (b, _), r in zip(load.users, shares):
            rho[load.link, b] = r
    return Allocation(rho=rho, psi=None, label="p2a")


# -- minimum-rate: dual ascent over link multipliers --------------------------

@dataclass
class _PathProblem:
    tasks: List[int]
    beta: np.ndarray
    links: List[Link]
    cap: np.ndarray  # xi * R per link
    incidence: np.ndarray  # tasks x links, 0/1

    def rates(self, lam: np.ndarray) -> np.ndarray:
        return np.sqrt(self.beta / (self.incidence @ lam))

    def dual_value(self, lam: np.ndarray) -> float:
        return float(2.0 * np.sqrt(self.beta * (self.incidence @ lam)).sum() - lam @ self.cap)

    def residual(self, lam: np.ndarray) -> float:
        psi = self.rates(lam)
        load = self.incidence.T @ psi
        cost = float((self.beta / psi).sum())
        primal = float(np.max(np.maximum(load / self.cap - 1.0, 0.0), initial=0.0))
        slack = float(np.max(lam * np.abs(self.cap - load), initial=0.0)) / cost
        return max(primal, slack)


def _path_problem(plan: Plan, inst: Instance, g: LinkGraph, xi: float) -> _PathProblem:
    tasks = [t.id for t in inst.tasks if plan.path(t.id)]
    links = sorted({l for b in tasks for l in plan.path(b)})
    col = {l: k for k, l in enumerate(links)}
    inc = np.zeros((len(tasks), len(links)))
    beta = np.zeros(len(tasks))
    for i, b in enumerate(tasks):
        t = inst.task(b)
        path = plan.path(b)
        beta[i] = t.weight * t.size * len(path)
        for l in path:
            inc[i, col[l]] = 1.0
    cap = np.array([xi * g.capacity(l) for l in links])
    return _PathProblem(tasks, beta, links, cap, inc)


def _dual_ascent(pp: _PathProblem, tol: float, max_iter: int) -> Tuple[np.ndarray, int, float]:
    # start from each link's single-link optimum, ignoring the other hops
    lam = (pp.incidence.T @ np.sqrt(pp.beta) / pp.cap) ** 2
    val = pp.dual_value(lam)
    step = 1.0
    res = pp.residual(lam)
    it = 0
    while res > tol and it < max_iter:
        it += 1
        load = pp.incidence.T @ pp.rates(lam)
        ratio = load / pp.cap
        while True:
            trial = lam * ratio ** (2.0 * step)
            tval = pp.dual_value(trial)
            if tval >= val - 1e-15 * abs(val) or step < 1e-12:
                break
            step *= 0.5
        lam, val = trial, tval
        step = min(1.0, 2.0 * step)
        res = pp.residual(lam)
    return lam, it, res


def allocate_p2b(plan: Plan, inst: Instance, g: LinkGraph, *, tol: float = KKT_TOL,
                 max_iter: int = MAX_ITER) -> Allocation:
    for l, users in plan.users().items():
        if not users:
            raise EmptyLink(f"link {l.label} has no users")
    xi = inst.saturation
    pp = _path_problem(plan, inst, g, xi)
    if not pp.tasks:
        return Allocation(rho={}, psi={}, label="p2b")
    # aim a decade below tol so the final rounding cannot push the
    # certificate over it
    lam, it, res = _dual_ascent(pp, 0.1 * tol, max_iter)
    if res > tol:
        raise NoConvergence(res, it)
    psi = pp.rates(lam)
    # land exactly inside every capacity row: scale each task by its path's
    # worst overload, then let per-link rounding shrink shares if needed
    load = pp.incidence.T @ psi
    shrink = np.minimum(1.0, pp.cap / load)
    per_task = np.where(pp.incidence > 0, shrink[None, :], 1.0).min(axis=1)
    psi = psi * per_task

    rho: Dict[Tuple[Link, int], float] = {}
    users = plan.users()
    index = {b: i for i, b in enumerate(pp.tasks)}
    for l in pp.links:
        R = g.capacity(l)
        shares = fit_to_budget([psi[index[b]] / R for b in users[l]], xi)
        for b, r in zip(users[l], shares):
            rho[l, b] = r
    psi_out = {b: min(rho[l, b] * g.capacity(l) for l in plan.path(b)) for b in pp.tasks}
    return Allocation(rho=rho, psi=psi_out, label="p2b")


# -- optimality certificates --------------------------------------------------

@dataclass(frozen=True)
class KKTReport:
    primal: float
    dual: float
    stationarity: float
    complementary: float

    @property
    def max_residual(self) -> float:
        return max(self.primal, self.dual, self.stationarity, self.complementary)

    def ok(self, tol: float = KKT_TOL) -> bool:
        return self.max_residual <= tol


def verify_kkt(plan: Plan, inst: Instance, g: LinkGraph, alloc: Allocation) -> KKTReport:
    """Residuals of the optimality conditions for ``alloc``.

    Allocations with ``psi`` are checked against the minimum-rate problem,
    others against the per-link hop-by-hop problem.  Multipliers are
    recovered from the allocation itself, so any feasible but suboptimal
    point shows up as a stationarity or slackness residual.
    """
    if alloc.psi is not None:
        return _kkt_minrate(plan, inst, g, alloc)
    return _kkt_hbh(plan, inst, g, alloc)


def _kkt_hbh(plan, inst, g, alloc) -> KKTReport:
    xi = inst.saturation
    primal = dual = stat = comp = 0.0
    for load in link_loads(plan, inst, g):
        w = np.array([wb / load.capacity for _, wb in load.users])
        r = np.array([alloc.rho[load.link, b] for b, _ in load.users])
        if np.any(r <= 0):
            primal = math.inf
            continue
        used = math.fsum(r)
        primal = max(primal, max(0.0, used - xi) / xi)
        grad = w / r ** 2  # each must equal the link multiplier
        mu = float(np.dot(grad, r) / used)
        stat = max(stat, float(np.max(np.abs(grad - mu))) / mu)
        comp = max(comp, abs(xi - used) / xi)
    return KKTReport(primal, dual, stat, comp)


def _kkt_minrate(plan, inst, g, alloc) -> KKTReport:
    xi = inst.saturation
    pp = _path_problem(plan, inst, g, xi)
    if not pp.tasks:
        return KKTReport(0.0, 0.0, 0.0, 0.0)
    psi = np.array([alloc.psi[b] for b in pp.tasks])
    if np.any(psi <= 0):
        return KKTReport(math.inf, 0.0, math.inf, 0.0)
    users = plan.users()
    load = np.array([math.fsum(alloc.rho[l, b] for b in users[l]) * g.capacity(l) for l in pp.links])
    primal = float(np.max(np.maximum(load / pp.cap - 1.0, 0.0)))
    # psi must be the path bottleneck of the shares it was given
    for i, b in enumerate(pp.tasks):
        path_min = min(alloc.rho[l, b] * g.capacity(l) for l in plan.path(b))
        primal = max(primal, abs(path_min - psi[i]) / psi[i])
    # nonnegative multipliers minimizing the stationarity residual (rows scaled
    # to be relative) together with the slackness residual they would cause
    used = pp.incidence.T @ psi
    need = pp.beta / psi ** 2
    cost = float((pp.beta / psi).sum())
    A = np.vstack([pp.incidence / need[:, None], np.diag(np.abs(pp.cap - used) / cost)])
    rhs = np.concatenate([np.ones(len(pp.tasks)), np.zeros(len(pp.links))])
    lam, _ = nnls(A, rhs)
    stat = float(np.max(np.abs(pp.incidence @ lam - need) / need))
    comp = float(np.max(lam * np.abs(pp.cap - used))) / cost
    dual = float(np.max(np.maximum(-lam, 0.0)))
    return KKTReport(primal, dual, stat, comp)


def equal_share_allocation(plan: Plan, inst: Instance, budget: Optional[float] = None) -> Allocation:
    """Every link split evenly among its users.

    ``budget=1.0`` is the Step-1 model (shares sum to one); the default uses
    the instance saturation so that it competes with the Step-2 solvers on the
    same usable capacity.
    """
    xi = inst.saturation if budget is None else budget
    rho = {}
    for l, users in plan.users().items():
        if not users:
            raise EmptyLink(f"link {l.label} has no users")
        shares = fit_to_budget([xi / len(users)] * len(users), xi)
        for b, r in zip(users, shares):
            rho[l, b] = r
    return Allocation(rho=rho, psi=None, label="equal-share" if budget is None else f"equal-share@{xi:g}")
