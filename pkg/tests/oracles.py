"""Reference computations that share no code with the package solvers."""

import math

import numpy as np
from scipy.optimize import linprog


def grid_two_task_split(w1, w2, budget, points=10_000):
    """Best (rho1, rho2, objective) of w1/rho1 + w2/rho2 over rho1 + rho2 = budget
    on a uniform interior grid."""
    r1 = budget * (np.arange(1, points + 1) / (points + 1))
    obj = w1 / r1 + w2 / (budget - r1)
    k = int(np.argmin(obj))
    return r1[k], budget - r1[k], float(obj[k])


def grid_two_path(beta_a, beta_b, cap1, cap2, points=2000):
    """Task A crosses links 1 and 2, task B only link 2.  Grid over
    (psi_a, psi_b) inside psi_a <= cap1, psi_a + psi_b <= cap2.  Returns
    (psi_a, psi_b, objective, cell size)."""
    hi_a = min(cap1, cap2)
    a = hi_a * (np.arange(1, points + 1) / points)
    best = (None, None, math.inf)
    step_b = cap2 / points
    for pa in a:
        room = cap2 - pa
        if room <= 0:
            continue
        b = np.arange(1, points + 1) * step_b
        b = b[b <= room + 1e-15]
        if b.size == 0:
            continue
        obj = beta_a / pa + beta_b / b
        k = int(np.argmin(obj))
        if obj[k] < best[2]:
            best = (pa, b[k], float(obj[k]))
    return best[0], best[1], best[2], max(hi_a / points, step_b)


def highs_lp(c, A, row_lo, row_hi, lb, ub):
    """The same bounded LP solved by scipy's HiGHS interface."""
    A = np.asarray(A.todense() if hasattr(A, "todense") else A, dtype=float)
    ub_rows, ub_rhs = [], []
    eq_rows, eq_rhs = [], []
    for r in range(A.shape[0]):
        lo, hi = row_lo[r], row_hi[r]
        if lo == hi:
            eq_rows.append(A[r])
            eq_rhs.append(hi)
            continue
        if np.isfinite(hi):
            ub_rows.append(A[r])
            ub_rhs.append(hi)
        if np.isfinite(lo):
            ub_rows.append(-A[r])
            ub_rhs.append(-lo)
    res = linprog(
        c,
        A_ub=np.array(ub_rows) if ub_rows else None, b_ub=np.array(ub_rhs) if ub_rows else None,
        A_eq=np.array(eq_rows) if eq_rows else None, b_eq=np.array(eq_rhs) if eq_rows else None,
        bounds=list(zip([None if not np.isfinite(v) else v for v in lb],
                        [None if not np.isfinite(v) else v for v in ub])),
        method="highs",
    )
    return res


def hop_by_hop(sizes_rates_shares, cloud=0.0):
    """sum L / (rho R) over hops, plus the cloud term."""
    return math.fsum(L / (rho * R) for L, R, rho in sizes_rates_shares) + cloud


def two_path_objective(beta_a, beta_b, psi_a, psi_b):
    """Objective of the two-path case and its steepest partial derivative,
    as ``(value, slope)``; ``slope * cell`` is the objective's grid resolution."""
    value = beta_a / psi_a + beta_b / psi_b
    slope = max(beta_a / psi_a ** 2, beta_b / psi_b ** 2)
    return value, slope
