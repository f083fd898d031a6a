"""Bounded-variable revised simplex, dual first with a primal cleanup.

Solves ``min c.x  s.t.  row_lo <= A x <= row_hi,  lb <= x <= ub`` with one
logical variable per row (``A x - s = 0``), a sparse LU of the basis and
product-form eta updates between refactorizations.  The dual pass runs on
slightly perturbed costs from the given (or all-logical) basis; the primal
pass then finishes on the true costs.  Its phase 1 minimizes the sum of bound
violations of the basic variables, and degenerate stalls switch pricing and
the ratio test to Bland's rule until the objective moves again.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from . import kernels as _kernels

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
DEADLINE = "deadline"

FEAS_TOL = 1e-9
DUAL_TOL = 1e-9
PIVOT_TOL = 1e-7
COST_PERTURB = 1e-7
REFACTOR_EVERY = 64
STALL_LIMIT = 60
MISMATCH_LIMIT = 20
CERT_DROP = 1e-11


class NumericalStall(RuntimeError):
    """The simplex made no progress within its iteration budget."""


@dataclass
class LPResult:
    status: str
    x: Optional[np.ndarray]
    objective: float
    iterations: int
    basis: Optional[Tuple[np.ndarray, ...]] = None


class _EtaFile:
    def __init__(self, m: int, cap: int) -> None:
        self.pos = np.zeros(cap, dtype=np.int64)
        self.piv = np.zeros(cap, dtype=np.float64)
        self.ptr = np.zeros(cap + 1, dtype=np.int64)
        self.idx = np.zeros(16 * m + 16, dtype=np.int32)
        self.val = np.zeros(16 * m + 16, dtype=np.float64)
        self.k = 0

    def clear(self) -> None:
        self.k = 0

    def push(self, p: int, alpha: np.ndarray) -> None:
        nz = np.flatnonzero(np.abs(alpha) > 1e-14)
        nz = nz[nz != p]
        s = int(self.ptr[self.k])
        t = s + nz.size
        if t > self.idx.size:
            grow = max(t, 2 * self.idx.size)
            self.idx = np.resize(self.idx, grow)
            self.val = np.resize(self.val, grow)
        self.idx[s:t] = nz
        self.val[s:t] = alpha[nz]
        self.pos[self.k] = p
        self.piv[self.k] = alpha[p]
        self.k += 1
        self.ptr[self.k] = t


class _Simplex:
    def __init__(self, c, A, row_lo, row_hi, lb, ub, kern, deadline, max_iter, basis=None):
        A = sp.csr_matrix(A, dtype=float)
        m, n = A.shape
        scale = np.ones(m)
        if A.nnz:
            amax = np.asarray(abs(A).max(axis=1).todense()).ravel()
            scale = np.where(amax > 0, amax, 1.0)
        A = sp.diags(1.0 / scale) @ A
        self.m, self.n = m, n
        self.A = A.tocsc()
        self.AT = A.T.tocsr()
        self.full = sp.hstack([self.A, -sp.identity(m, format="csc")], format="csc")
        self.c = np.asarray(c, dtype=float)
        self.lo = np.concatenate([np.asarray(lb, float), np.asarray(row_lo, float) / scale])
        self.up = np.concatenate([np.asarray(ub, float), np.asarray(row_hi, float) / scale])
        self.k = kern
        self.deadline = deadline
        self.max_iter = max_iter if max_iter is not None else 200 * (m + n) + 1000

        N = n + m
        self.status = np.ones(N, dtype=np.int8)
        self.x = np.zeros(N)
        lo_f = np.isfinite(self.lo[:n])
        up_f = np.isfinite(self.up[:n])
        self.x[:n] = np.where(lo_f, self.lo[:n], np.where(up_f, self.up[:n], 0.0))
        self.status[:n] = np.where(lo_f, 1, np.where(up_f, 2, 3))
        self.head = np.arange(n, N, dtype=np.int64)
        self.status[n:] = 0
        self.repairs = 0
        self.weights = np.ones(m)
        if basis is not None:
            self._load_basis(*basis)
        self.eta = _EtaFile(m, REFACTOR_EVERY + 1)
        self._factor()

    def _load_basis(self, head: np.ndarray, status: np.ndarray, weights=None) -> None:
        """Start from a previous final basis; nonbasics snap to their new bounds."""
        st = np.array(status, dtype=np.int8)
        lo_f = np.isfinite(self.lo)
        up_f = np.isfinite(self.up)
        nb = st != 0
        pick_lo = nb & lo_f & ((st == 1) | (st == 3) | ~up_f)
        pick_up = nb & ~pick_lo & up_f
        st[nb] = 3
        st[pick_lo] = 1
        st[pick_up] = 2
        x = np.where(st == 1, self.lo, np.where(st == 2, self.up, 0.0))
        self.status = st
        self.x = np.where(nb, x, 0.0)
        self.head = np.array(head, dtype=np.int64)
        if weights is not None:
            self.weights = np.array(weights, dtype=float)

    def _slack_restart(self) -> None:
        """Singular basis: fall back to the all-logical basis, snapping each
        structural to its nearest finite bound."""
        self.repairs += 1
        if self.repairs > 3:
            raise NumericalStall("basis became singular repeatedly")
        n = self.n
        lo, up, x = self.lo[:n], self.up[:n], self.x[:n]
        to_up = np.isfinite(up) & (~np.isfinite(lo) | (np.abs(x - up) < np.abs(x - lo)))
        to_lo = np.isfinite(lo) & ~to_up
        self.status[:n] = np.where(to_lo, 1, np.where(to_up, 2, 3))
        self.x[:n] = np.where(to_lo, lo, np.where(to_up, up, 0.0))
        self.head = np.arange(n, n + self.m, dtype=np.int64)
        self.status[n:] = 0
        self.weights = np.ones(self.m)
        self._factor()

    def basis(self) -> Tuple[np.ndarray, ...]:
        return self.head.copy(), self.status.copy(), self.weights.copy()

    # -- basis factorization -------------------------------------------------
    def _factor(self) -> None:
        B = self.full[:, self.head]
        try:
            self.lu = splu(sp.csc_matrix(B), permc_spec="COLAMD", options={"SymmetricMode": False})
        except RuntimeError:
            self._slack_restart()
            return
        self.eta.clear()
        xn = self.x.copy()
        xn[self.head] = 0.0
        rhs = -(self.full @ xn)
        self.x[self.head] = self.lu.solve(rhs)

    def _ftran(self, v: np.ndarray) -> np.ndarray:
        z = self.lu.solve(v)
        e = self.eta
        if e.k:
            self.k.eta_ftran(z, e.pos, e.ptr, e.idx, e.val, e.piv, e.k)
        return z

    def _btran(self, v: np.ndarray) -> np.ndarray:
        w = np.array(v, dtype=float)
        e = self.eta
        if e.k:
            self.k.eta_btran(w, e.pos, e.ptr, e.idx, e.val, e.piv, e.k)
        return self.lu.solve(w, trans="T")

    def _column(self, q: int) -> np.ndarray:
        col = np.zeros(self.m)
        s, t = self.full.indptr[q], self.full.indptr[q + 1]
        col[self.full.indices[s:t]] = self.full.data[s:t]
        return col

    # -- dual phase ----------------------------------------------------------
    def _reduced_costs(self, c: np.ndarray) -> np.ndarray:
        """Reduced costs for a cost vector over all ``n + m`` columns."""
        n = self.n
        y = self._btran(c[self.head])
        d = np.empty(n + self.m)
        d[:n] = c[:n] - self.AT @ y
        d[n:] = c[n:] + y
        d[self.head] = 0.0
        return d

    def _shift_costs(self, cost: np.ndarray, d: np.ndarray) -> None:
        """Zero out wrong-signed reduced costs by shifting the working costs."""
        st = self.status
        movable = self.lo < self.up
        wrong = movable & (((st == 1) & (d < -DUAL_TOL)) | ((st == 2) & (d > DUAL_TOL))
                           | ((st == 3) & (np.abs(d) > DUAL_TOL)))
        if wrong.any():
            cost[wrong] -= d[wrong]
            d[wrong] = 0.0

    def _dual(self) -> Optional[LPResult]:
        """Bounded dual simplex from the current basis.

        With nonnegative costs the cold all-logical start is already dual
        feasible, and after a bound change so is a parent's optimal basis.
        Leaving rows are priced by dual steepest edge (weights are exact from
        the all-logical basis) and the ratio test flips boxed columns whose
        breakpoints the dual step passes.  Returns INFEASIBLE when a row
        certifies it, DEADLINE, or None to hand over to the primal loop
        (which then confirms optimality or cleans up).
        """
        n, m = self.n, self.m
        # the zero-cost families make the dual heavily degenerate; a small
        # fixed perturbation breaks ties and the primal pass removes it
        spread = np.random.default_rng(12345).uniform(1.0, 2.0, n)
        cost = np.zeros(n + m)
        cost[:n] = self.c + COST_PERTURB * (1.0 + np.abs(self.c)) * spread
        d = self._reduced_costs(cost)
        # restore dual feasibility: flip boxed columns, shift the costs of the
        # rest (the primal pass afterwards works with the true costs)
        wrong_lo = (self.status == 1) & (d < -DUAL_TOL) & (self.lo < self.up) & np.isfinite(self.up)
        wrong_up = (self.status == 2) & (d > DUAL_TOL) & (self.lo < self.up) & np.isfinite(self.lo)
        keep = ~(wrong_lo | wrong_up)
        rest = np.where(keep, d, 0.0)
        self._shift_costs(cost, rest)
        d = np.where(keep, rest, d)
        if wrong_lo.any() or wrong_up.any():
            self.status[wrong_lo] = 2
            self.status[wrong_up] = 1
            nb = self.status != 0
            self.x[nb] = np.where(self.status[nb] == 1, self.lo[nb],
                                  np.where(self.status[nb] == 2, self.up[nb], 0.0))
            self._factor()
        repairs = self.repairs
        if repairs:
            return None
        w = self.weights
        mismatches = 0
        cap = 20 * (m + n) + 1000
        for it in range(cap):
            if self.deadline is not None and it % 32 == 0 and time.monotonic() > self.deadline:
                return LPResult(DEADLINE, None, np.nan, self.iters)
            xb = self.x[self.head]
            lob = self.lo[self.head]
            upb = self.up[self.head]
            infeas = np.maximum(lob - xb, 0.0) + np.maximum(xb - upb, 0.0)
            infeas[infeas <= FEAS_TOL] = 0.0
            r = int(np.argmax(infeas * infeas / w))
            if infeas[r] <= 0.0:
                return None
            sgn = 1 if xb[r] < lob[r] else -1
            er = np.zeros(m)
            er[r] = 1.0
            rho = self._btran(er)
            alpha_r = np.empty(n + m)
            alpha_r[:n] = self.AT @ rho
            alpha_r[n:] = -rho
            cand, ratio, amag = self.k.dual_candidates(alpha_r, d, self.status, self.lo, self.up, sgn, PIVOT_TOL)
            q, step, flips = _bound_flip_choice(cand, ratio, amag, self.up - self.lo, float(infeas[r]))
            if q < 0:
                if self._row_certifies_infeasible(r, sgn):
                    return LPResult(INFEASIBLE, None, np.nan, self.iters)
                return None
            alpha = self._ftran(self._column(q))
            if abs(alpha[r]) <= PIVOT_TOL or abs(alpha[r] - alpha_r[q]) > 1e-6 * (1.0 + abs(alpha[r])):
                # row and column disagree: retry on a fresh factorization,
                # and only hand over to the primal if that does not help
                was_fresh = self.eta.k == 0
                mismatches += 1
                self._factor()
                if was_fresh or mismatches > MISMATCH_LIMIT or self.repairs != repairs:
                    return None
                d = self._reduced_costs(cost)
                self._shift_costs(cost, d)
                continue
            if flips.size:
                dx = np.where(self.status[flips] == 1, 1.0, -1.0) * (self.up[flips] - self.lo[flips])
                self.x[flips] += dx
                self.status[flips] = np.where(self.status[flips] == 1, 2, 1).astype(np.int8)
                shift = self.full[:, flips] @ dx
                self.x[self.head] -= self._ftran(shift)
            tau = self._ftran(rho.copy())
            xr = self.x[self.head[r]]
            dirn = 1 if self.status[q] == 1 else -1 if self.status[q] == 2 else (1 if -alpha[r] * sgn > 0 else -1)
            delta = -dirn * alpha
            target = lob[r] if sgn > 0 else upb[r]
            t = (target - xr) / delta[r]
            d -= (-sgn * step) * alpha_r
            leave = int(self.head[r])
            self.x[q] += dirn * t
            self.x[self.head] += t * delta
            self.x[leave] = target
            self.status[leave] = 1 if sgn > 0 else 2
            self.status[q] = 0
            self.head[r] = q
            d[q] = 0.0
            self._shift_costs(cost, d)
            # dual steepest-edge weight update
            ar = alpha[r]
            ratio_col = alpha / ar
            wr = float(rho @ rho)  # exact weight of the leaving row
            w += ratio_col * (ratio_col * wr - 2.0 * tau)
            w[r] = wr / (ar * ar)
            np.maximum(w, 1e-8, out=w)
            self.iters += 1
            if self.eta.k >= REFACTOR_EVERY:
                self._factor()
                if self.repairs != repairs:
                    return None
                d = self._reduced_costs(cost)
                self._shift_costs(cost, d)
            else:
                self.eta.push(r, alpha)
        return None

    def _row_certifies_infeasible(self, r: int, sgn: int) -> bool:
        """Recompute row ``r`` of the basis inverse on a fresh factorization and
        check that no point of the nonbasic box brings the basic variable back
        within its bounds."""
        self._factor()
        er = np.zeros(self.m)
        er[r] = 1.0
        rho = self.lu.solve(er, trans="T")
        coef = np.empty(self.n + self.m)
        coef[: self.n] = -(self.AT @ rho)
        coef[self.n:] = rho
        coef[self.head] = 0.0
        # roundoff-level entries on unbounded columns would otherwise make
        # every row look repairable
        coef[np.abs(coef) < CERT_DROP * max(1.0, float(np.abs(coef).max(initial=0.0)))] = 0.0
        nz = coef != 0.0
        lo, up = self.lo[nz], self.up[nz]
        a = coef[nz] * sgn
        # best reachable value of sgn * x_r over the box
        best = np.where(a > 0, a * up, a * lo)
        if not np.all(np.isfinite(best)):
            return False
        reach = float(best.sum())
        head_r = int(self.head[r])
        bound = self.lo[head_r] if sgn > 0 else -self.up[head_r]
        scale = 1.0 + float(np.abs(best).sum())
        return reach < bound - 1e-7 * scale

    # -- main loop -----------------------------------------------------------
    def run(self) -> LPResult:
        self.iters = 0
        res = self._dual()
        if res is not None:
            return res
        return self._primal()

    def _primal(self) -> LPResult:
        n, m = self.n, self.m
        it = self.iters
        stall = 0
        bland = False
        last_obj = np.inf
        last_phase = 0
        while True:
            if it >= self.max_iter:
                raise NumericalStall(f"simplex exceeded {self.max_iter} iterations")
            if self.deadline is not None and it % 32 == 0 and time.monotonic() > self.deadline:
                return LPResult(DEADLINE, None, np.nan, it)
            xb = self.x[self.head]
            lob = self.lo[self.head]
            upb = self.up[self.head]
            below = xb < lob - FEAS_TOL
            above = xb > upb + FEAS_TOL
            phase1 = bool(below.any() or above.any())
            if phase1:
                cb = np.where(below, -1.0, np.where(above, 1.0, 0.0))
                obj = float(np.sum((lob - xb)[below]) + np.sum((xb - upb)[above]))
            else:
                cb = np.where(self.head < n, self.c[np.minimum(self.head, n - 1)], 0.0) if n else np.zeros(m)
                obj = float(self.c @ self.x[:n])
            phase = 1 if phase1 else 2
            if phase != last_phase:
                stall, bland, last_obj, last_phase = 0, False, np.inf, phase
            elif obj < last_obj - 1e-12 * max(1.0, abs(last_obj)):
                stall, bland = 0, False
            else:
                stall += 1
                if stall > STALL_LIMIT:
                    bland = True
            last_obj = min(last_obj, obj)

            y = self._btran(cb)
            d = np.empty(n + m)
            if phase1:
                d[:n] = -(self.AT @ y)
            else:
                d[:n] = self.c - self.AT @ y
            d[n:] = y
            q, dirn = self.k.price(d, self.status, self.lo, self.up, DUAL_TOL, bland)
            if q < 0:
                if phase1:
                    return LPResult(INFEASIBLE, None, np.nan, it)
                return LPResult(OPTIMAL, self.x[:n].copy(), float(self.c @ self.x[:n]), it, self.basis())

            alpha = self._ftran(self._column(q))
            delta = -dirn * alpha
            p, step, at_up = self.k.ratio(xb, lob, upb, delta, self.head, FEAS_TOL, PIVOT_TOL, bland)
            flip = self.up[q] - self.lo[q]
            if np.isfinite(flip) and (p < 0 or flip <= step):
                self.x[q] += dirn * flip
                self.x[self.head] += flip * delta
                self.status[q] = 2 if self.status[q] == 1 else 1
                it += 1
                continue
            if p < 0:
                if phase1:
                    raise NumericalStall("unbounded phase-1 ray")
                return LPResult(UNBOUNDED, None, -np.inf, it)

            self.x[q] += dirn * step
            self.x[self.head] += step * delta
            leave = int(self.head[p])
            self.x[leave] = self.up[leave] if at_up else self.lo[leave]
            self.status[leave] = 2 if at_up else 1
            self.status[q] = 0
            self.head[p] = q
            it += 1
            if self.eta.k >= REFACTOR_EVERY:
                self._factor()
            else:
                self.eta.push(p, alpha)


def _bound_flip_choice(cand, ratio, amag, span, slope):
    """Walk dual breakpoints in ratio order, flipping boxed columns while the
    leaving row stays infeasible; then pick the entering column by Harris's
    rule among the rest.  Returns (entering, dual step, flipped columns)."""
    if cand.size == 0:
        return -1, np.inf, cand
    order = np.argsort(ratio, kind="stable")
    drop = amag[order] * span[cand[order]]
    passed = np.cumsum(drop)
    # breakpoints strictly before k can be flipped without losing infeasibility
    k = int(np.searchsorted(passed, slope - FEAS_TOL * max(1.0, slope), side="left"))
    if k >= order.size:
        return -1, np.inf, cand[:0]
    rest = order[k:]
    tmax = np.min((ratio[rest] + DUAL_TOL / amag[rest]))
    ok = rest[ratio[rest] <= tmax]
    j = int(ok[np.argmax(amag[ok])])
    flips = cand[order[:k]]
    return int(cand[j]), float(ratio[j]), flips


def solve_bounded_lp(c, A, row_lo, row_hi, lb, ub, *, deadline: Optional[float] = None,
                     max_iter: Optional[int] = None, backend: str = "auto",
                     basis: Optional[Tuple[np.ndarray, ...]] = None) -> LPResult:
    """Solve a bounded LP; ``deadline`` is a ``time.monotonic()`` timestamp.

    ``basis`` is the ``basis`` field of an earlier optimal result on the same
    matrix; bounds may differ.
    """
    kern = _kernels.get(backend)
    lb = np.asarray(lb, float)
    ub = np.asarray(ub, float)
    if np.any(lb > ub + FEAS_TOL):
        return LPResult(INFEASIBLE, None, np.nan, 0)
    solver = _Simplex(c, A, row_lo, row_hi, lb, ub, kern, deadline, max_iter, basis)
    return solver.run()
