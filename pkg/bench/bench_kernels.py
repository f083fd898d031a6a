"""Compiled vs numpy simplex kernels.

Times the kernels in isolation on synthetic data, then end-to-end Step-1
solves on a fixed set of small instances with each backend.  Run from the
repository root after ``pip install -e . --no-build-isolation``:

    python3 bench/bench_kernels.py [--repeat 5] [--instances 20]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from mecplan.generate import generate_instance
from mecplan.linkgraph import link_graph_for
from mecplan.milp import kernels
from mecplan.milp.bnb import SolveLimits, solve_p1
from mecplan.milp.model import build_p1
from mecplan.model import GB, validate_instance


def _best(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def micro(backend: str, repeat: int, m: int = 4000, n: int = 8000, etas: int = 64) -> dict:
    k = kernels.get(backend)
    rng = np.random.default_rng(7)
    N = n + m
    d = rng.normal(size=N)
    status = rng.integers(0, 4, size=N).astype(np.int8)
    lo = np.zeros(N)
    up = np.where(rng.random(N) < 0.5, 1.0, np.inf)
    nnz = 40
    pos = rng.integers(0, m, size=etas).astype(np.int64)
    ptr = np.arange(etas + 1, dtype=np.int64) * nnz
    idx = rng.integers(0, m, size=etas * nnz).astype(np.int32)
    val = rng.normal(size=etas * nnz) * 0.01
    piv = rng.uniform(1.0, 2.0, size=etas)
    xb = rng.uniform(-0.1, 1.1, size=m)
    lob = np.zeros(m)
    upb = np.ones(m)
    delta = rng.normal(size=m)
    head = np.arange(m, dtype=np.int64)
    alpha_r = rng.normal(size=N)

    def ftran():
        z = rng.normal(size=m)
        k.eta_ftran(z, pos, ptr, idx, val, piv, etas)

    def btran():
        w = rng.normal(size=m)
        k.eta_btran(w, pos, ptr, idx, val, piv, etas)

    reps = 200
    return {
        "eta_ftran": _best(lambda: [ftran() for _ in range(reps)], repeat) / reps,
        "eta_btran": _best(lambda: [btran() for _ in range(reps)], repeat) / reps,
        "price": _best(lambda: [k.price(d, status, lo, up, 1e-9, False) for _ in range(reps)], repeat) / reps,
        "ratio": _best(lambda: [k.ratio(xb, lob, upb, delta, head, 1e-9, 1e-7, False)
                                for _ in range(reps)], repeat) / reps,
        "dual_candidates": _best(lambda: [k.dual_candidates(alpha_r, d, status, lo, up, 1, 1e-7)
                                          for _ in range(reps)], repeat) / reps,
    }


def end_to_end(backend: str, count: int) -> tuple:
    total = 0.0
    objs = []
    seed = 0
    done = 0
    while done < count:
        inst = generate_instance(seed, 4, 2, 4, servers=[(1, 1.5 * GB), (3, 1.0 * GB)], cloud_bs=[4])
        seed += 1
        if validate_instance(inst):
            continue
        m = build_p1(inst, link_graph_for(inst))
        t = time.perf_counter()
        out = solve_p1(m, SolveLimits(backend=backend))
        total += time.perf_counter() - t
        objs.append(out.objective_value)
        done += 1
    return total, objs


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--instances", type=int, default=20)
    args = ap.parse_args()
    backends = kernels.available()
    print(f"backends available: {', '.join(backends)}")
    if "cython" not in backends:
        print("compiled kernels missing; only the numpy timings are shown")
    rows = {b: micro(b, args.repeat) for b in backends}
    print(f"\n{'kernel':<16}" + "".join(f"{b:>14}" for b in backends) + ("    speedup" if len(backends) > 1 else ""))
    for name in rows[backends[0]]:
        vals = [rows[b][name] for b in backends]
        line = f"{name:<16}" + "".join(f"{v * 1e6:>12.1f}us" for v in vals)
        if len(vals) > 1:
            line += f"{vals[0] / vals[1]:>10.1f}x"
        print(line)
    print()
    ref = None
    for b in backends:
        t, objs = end_to_end(b, args.instances)
        print(f"solve_p1 on {args.instances} instances (N=4, I=2, B=4) with {b}: {t:.2f}s")
        if ref is None:
            ref = objs
        else:
            same = all(abs(x - y) <= 1e-9 * max(1.0, abs(x)) for x, y in zip(ref, objs))
            print(f"objectives identical across backends: {same}")


if __name__ == "__main__":
    main()
