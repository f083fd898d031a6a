"""Pure-Python (numpy) simplex kernels.

Same signatures as the compiled ``_kernels`` extension; used when it is not
built.  Status codes: 0 basic, 1 at lower, 2 at upper, 3 free nonbasic.
"""

import numpy as np


def eta_ftran(z, pos, ptr, idx, val, piv, k):
    for e in range(k):
        p = pos[e]
        zp = z[p] / piv[e]
        z[p] = zp
        if zp != 0.0:
            s, t = ptr[e], ptr[e + 1]
            z[idx[s:t]] -= val[s:t] * zp


def eta_btran(w, pos, ptr, idx, val, piv, k):
    for e in range(k - 1, -1, -1):
        p = pos[e]
        s, t = ptr[e], ptr[e + 1]
        w[p] = (w[p] - np.dot(val[s:t], w[idx[s:t]])) / piv[e]


def price(d, status, lo, up, tol, bland):
    """Pick the entering variable; returns (index, direction) or (-1, 0)."""
    inc = ((status == 1) & (d < -tol) & (lo < up)) | ((status == 3) & (d < -tol))
    dec = ((status == 2) & (d > tol)) | ((status == 3) & (d > tol))
    elig = inc | dec
    if not elig.any():
        return -1, 0
    if bland:
        q = int(np.flatnonzero(elig)[0])
    else:
        score = np.where(elig, np.abs(d), -1.0)
        q = int(np.argmax(score))
    return q, (1 if inc[q] else -1)


def ratio(xb, lob, upb, delta, head, ftol, ptol, bland):
    """Bounded ratio test over the basic variables.

    ``delta`` is the rate of change of each basic variable per unit step.
    Infeasible basics (phase 1) may move through the violated side until they
    reach their bound.  Returns (position, step, leaves_at_upper) with
    position -1 when nothing blocks.
    """
    m = xb.shape[0]
    below = xb < lob - ftol
    above = xb > upb + ftol
    up_move = delta > ptol
    dn_move = delta < -ptol
    # bound reached by each blocking candidate, and whether it is the upper one
    tgt = np.full(m, np.nan)
    at_up = np.zeros(m, dtype=bool)
    sel = up_move & below
    tgt[sel] = lob[sel]
    sel = up_move & ~below & ~above & np.isfinite(upb)
    tgt[sel] = upb[sel]
    at_up[sel] = True
    sel = dn_move & above
    tgt[sel] = upb[sel]
    at_up[sel] = True
    sel = dn_move & ~below & ~above & np.isfinite(lob)
    tgt[sel] = lob[sel]
    cand = np.flatnonzero(~np.isnan(tgt))
    if cand.size == 0:
        return -1, np.inf, False
    dc = delta[cand]
    r = np.maximum((tgt[cand] - xb[cand]) / dc, 0.0)
    if bland:
        rmin = r.min()
        ties = cand[r <= rmin + 1e-12 * max(1.0, rmin)]
        p = int(ties[np.argmin(head[ties])])
        k = int(np.flatnonzero(cand == p)[0])
        return p, float(r[k]), bool(at_up[p])
    # Harris: relax bounds by ftol, then take the largest pivot among ratios
    # not exceeding the relaxed minimum
    feas = ~below[cand] & ~above[cand]
    slack = np.where(feas, ftol, 0.0)
    rrel = np.maximum((tgt[cand] - xb[cand] + np.sign(dc) * slack) / dc, 0.0)
    rmax = rrel.min()
    ok = r <= rmax
    if not ok.any():
        ok = r <= r.min()
    j = int(np.argmax(np.where(ok, np.abs(dc), -1.0)))
    p = int(cand[j])
    return p, float(r[j]), bool(at_up[p])



def dual_candidates(alpha_r, d, status, lo, up, s, ptol):
    """Nonbasic columns that can move the leaving row toward feasibility.

    Returns (indices, ratios |d_j|/|alpha_j|, |alpha_j|) for the dual ratio
    test; free columns get ratio 0.
    """
    sa = s * alpha_r
    movable = lo < up
    free = status == 3
    cand = ((status == 1) & (sa < -ptol) & movable) | ((status == 2) & (sa > ptol) & movable) \
        | (free & (np.abs(alpha_r) > ptol))
    idx = np.flatnonzero(cand)
    a = np.abs(alpha_r[idx])
    dj = np.where(free[idx], 0.0, np.abs(d[idx]))
    return idx, dj / a, a
