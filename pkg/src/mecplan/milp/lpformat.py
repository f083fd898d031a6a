"""CPLEX LP text export, so a built model can be cross-checked elsewhere."""

from __future__ import annotations

import math
import re
from typing import Iterable, List, Tuple

import numpy as np

from .model import MilpModel

_LEGAL = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")
_WRAP = 200  # CPLEX caps lines at 255 characters


def _num(v: float) -> str:
    return repr(float(v))


def _check_name(name: str) -> str:
    if not _LEGAL.match(name):
        raise ValueError(f"name {name!r} is not a legal LP identifier")
    return name


def _expr(terms: Iterable[Tuple[float, str]]) -> List[str]:
    """Signed terms packed into lines no longer than ``_WRAP``."""
    lines: List[str] = []
    cur = ""
    for coef, name in terms:
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        tok = f"{sign} {name}" if mag == 1.0 else f"{sign} {_num(mag)} {name}"
        if cur and len(cur) + len(tok) + 1 > _WRAP:
            lines.append(cur)
            cur = tok
        else:
            cur = f"{cur} {tok}" if cur else tok
    lines.append(cur)
    return lines


def write_lp(m: MilpModel) -> str:
    """The model as CPLEX LP text.  Equal-bound rows become ``=``, two-sided
    rows are split into ``<name>_lo`` / ``<name>_hi``; output is a pure
    function of the model."""
    names = [_check_name(n) for n in m.names]
    out = ["\\ mecplan step-1 model", "Minimize"]
    obj = [(float(m.c[j]), names[j]) for j in np.flatnonzero(m.c)]
    obj_lines = _expr(obj) if obj else ["0"]
    out.append(" obj: " + obj_lines[0])
    out.extend("   " + ln for ln in obj_lines[1:])

    out.append("Subject To")
    A = m.A.tocsr()
    for r in range(m.n_rows):
        lo, hi = float(m.row_lo[r]), float(m.row_hi[r])
        start, end = A.indptr[r], A.indptr[r + 1]
        cols = A.indices[start:end]
        vals = A.data[start:end]
        order = np.argsort(cols, kind="stable")
        terms = [(float(vals[k]), names[cols[k]]) for k in order]
        body = _expr(terms) if terms else [f"0 {names[0]}"]
        rname = _check_name(m.row_names[r])
        senses = []
        if lo == hi:
            senses.append((rname, "=", lo))
        else:
            if math.isfinite(lo) and math.isfinite(hi):
                senses.append((rname + "_lo", ">=", lo))
                senses.append((rname + "_hi", "<=", hi))
            elif math.isfinite(lo):
                senses.append((rname, ">=", lo))
            elif math.isfinite(hi):
                senses.append((rname, "<=", hi))
        for nm, op, rhs in senses:
            out.append(f" {nm}: " + body[0])
            out.extend("   " + ln for ln in body[1:])
            out.append(f"   {op} {_num(rhs)}")

    out.append("Bounds")
    for j, nm in enumerate(names):
        lo, hi = float(m.lb[j]), float(m.ub[j])
        if m.binary[j] and lo == 0.0 and hi == 1.0:
            continue
        if lo == hi:
            out.append(f" {nm} = {_num(lo)}")
            continue
        left = "-inf" if lo == -math.inf else _num(lo)
        right = "+inf" if hi == math.inf else _num(hi)
        if hi == math.inf and lo == 0.0:
            out.append(f" {nm} >= 0.0")
        else:
            out.append(f" {left} <= {nm} <= {right}")

    bins = [names[j] for j in np.flatnonzero(m.binary)]
    if bins:
        out.append("Binaries")
        line = ""
        for nm in bins:
            if line and len(line) + len(nm) + 1 > _WRAP:
                out.append(" " + line)
                line = nm
            else:
                line = f"{line} {nm}" if line else nm
        out.append(" " + line)
    out.append("End")
    return "\n".join(out) + "\n"
