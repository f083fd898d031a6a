# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled simplex kernels; drop-in for :mod:`mecplan.milp._kernels_py`."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, isnan, INFINITY

cnp.import_array()


def eta_ftran(double[::1] z, long[::1] pos, long[::1] ptr, int[::1] idx,
              double[::1] val, double[::1] piv, Py_ssize_t k):
    cdef Py_ssize_t e, s, p
    cdef double zp
    for e in range(k):
        p = pos[e]
        zp = z[p] / piv[e]
        z[p] = zp
        if zp != 0.0:
            for s in range(ptr[e], ptr[e + 1]):
                z[idx[s]] -= val[s] * zp


def eta_btran(double[::1] w, long[::1] pos, long[::1] ptr, int[::1] idx,
              double[::1] val, double[::1] piv, Py_ssize_t k):
    cdef Py_ssize_t e, s, p
    cdef double acc
    for e in range(k - 1, -1, -1):
        p = pos[e]
        acc = w[p]
        for s in range(ptr[e], ptr[e + 1]):
            acc -= val[s] * w[idx[s]]
        w[p] = acc / piv[e]


def price(double[::1] d, signed char[::1] status, double[::1] lo, double[::1] up,
          double tol, bint bland):
    cdef Py_ssize_t j, n = d.shape[0], q = -1
    cdef double best = 0.0, dj, score
    cdef signed char st
    cdef int inc, dec
    # comparisons are combined arithmetically so the loop compiles to
    # conditional moves instead of unpredictable branches
    for j in range(n):
        st = status[j]
        dj = d[j]
        inc = ((st == 1) & (lo[j] < up[j]) | (st == 3)) & (dj < -tol)
        dec = ((st == 2) | (st == 3)) & (dj > tol)
        if bland and (inc | dec):
            return j, (1 if inc else -1)
        score = fabs(dj) * (inc | dec)
        if score > best:
            best = score
            q = j
    if q < 0:
        return -1, 0
    return q, (1 if d[q] < 0 else -1)


def ratio(double[::1] xb, double[::1] lob, double[::1] upb, double[::1] delta,
          long[::1] head, double ftol, double ptol, bint bland):
    cdef Py_ssize_t i, m = xb.shape[0], p = -1
    cdef double dl, x, l, u, t, r, rrel, rmax = INFINITY, rmin = INFINITY
    cdef double best = -1.0, rp = INFINITY
    cdef bint feas, top, pup = False
    cdef long hbest = 0
    # pass 1: relaxed (Harris) or exact minimum ratio
    for i in range(m):
        dl = delta[i]
        if fabs(dl) <= ptol:
            continue
        x = xb[i]; l = lob[i]; u = upb[i]
        feas = True
        if dl > 0:
            if x < l - ftol:
                t = l; feas = False
            elif x > u + ftol:
                continue
            elif u < INFINITY:
                t = u
            else:
                continue
        else:
            if x > u + ftol:
                t = u; feas = False
            elif x < l - ftol:
                continue
            elif l > -INFINITY:
                t = l
            else:
                continue
        r = (t - x) / dl
        if r < 0:
            r = 0.0
        if r < rmin:
            rmin = r
        if feas and not bland:
            rrel = (t - x + (ftol if dl > 0 else -ftol)) / dl
        else:
            rrel = r
        if rrel < 0:
            rrel = 0.0
        if rrel < rmax:
            rmax = rrel
    if rmin == INFINITY:
        return -1, INFINITY, False
    if bland:
        rmax = rmin + 1e-12 * (rmin if rmin > 1.0 else 1.0)
    # pass 2: among ratios within rmax choose largest pivot (or smallest index)
    for i in range(m):
        dl = delta[i]
        if fabs(dl) <= ptol:
            continue
        x = xb[i]; l = lob[i]; u = upb[i]
        top = False
        if dl > 0:
            if x < l - ftol:
                t = l
            elif x > u + ftol:
                continue
            elif u < INFINITY:
                t = u; top = True
            else:
                continue
        else:
            if x > u + ftol:
                t = u; top = True
            elif x < l - ftol:
                continue
            elif l > -INFINITY:
                t = l
            else:
                continue
        r = (t - x) / dl
        if r < 0:
            r = 0.0
        if r > rmax:
            continue
        if bland:
            if p < 0 or head[i] < hbest:
                p = i; hbest = head[i]; rp = r; pup = top
        elif fabs(dl) > best:
            best = fabs(dl); p = i; rp = r; pup = top
    if p < 0:
        return -1, INFINITY, False
    return p, rp, pup



def dual_candidates(double[::1] alpha_r, double[::1] d, signed char[::1] status,
                    double[::1] lo, double[::1] up, int s, double ptol):
    cdef Py_ssize_t j, n = alpha_r.shape[0], k = 0
    cdef double a, sa, fa
    cdef signed char st
    cdef int boxed, keep
    idx_arr = np.empty(n + 1, dtype=np.int64)
    rat_arr = np.empty(n + 1, dtype=np.float64)
    abs_arr = np.empty(n + 1, dtype=np.float64)
    cdef long[::1] idx = idx_arr
    cdef double[::1] rat = rat_arr
    cdef double[::1] aa = abs_arr
    # every slot is written and the cursor advances only for kept columns,
    # which avoids branching on the (unpredictable) column status
    for j in range(n):
        st = status[j]
        a = alpha_r[j]
        sa = s * a
        fa = fabs(a)
        boxed = lo[j] < up[j]
        keep = ((st == 1) & (sa < -ptol) & boxed) | ((st == 2) & (sa > ptol) & boxed) \
            | ((st == 3) & (fa > ptol))
        idx[k] = j
        aa[k] = fa
        rat[k] = 0.0 if st == 3 else fabs(d[j]) / fa
        k += keep
    return idx_arr[:k], rat_arr[:k], abs_arr[:k]
