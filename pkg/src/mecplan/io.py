"""File formats: instance and plan JSON, report CSV/JSON, topology DOT.

Files use human units with the unit in the field name (``size_gb``,
``rate_gbps``, ``cloud_latency_ms``, ``x_m``).  Conversion to internal bytes,
bytes/second and seconds happens once, on parse.  Serialization picks the
file value whose parse reproduces the internal float, so
parse -> serialize -> parse is the identity.
"""

from __future__ import annotations

import csv
import io as _stdio
import json
import math
from decimal import Decimal
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

from .model import (CLOUD, GB, GBPS, BaseStation, Instance, Link, LinkModelConfig, Plan, Task)
from .pipeline import LatencyReport, TaskLatency

SCHEMA_VERSION = 1
UNITS = {"size": "GB", "rate": "Gbps", "latency": "ms", "distance": "m"}
MS = 1e-3


class SchemaError(ValueError):
    """The document does not match the expected layout."""


# -- unit conversion ------------------------------------------------------------

def _to_internal(value: float, factor: float) -> float:
    # correctly rounded decimal product: "0.535" GB is exactly 535e6 bytes,
    # which plain float multiplication can miss by an ulp
    return float(Decimal(repr(float(value))) * Decimal(repr(factor)))


def _to_file(x: float, factor: float) -> float:
    """The shortest file value ``v`` that parses back to ``x``, searching a few
    ulps around ``x / factor``; falls back to the plain quotient."""
    guess = x / factor
    if not math.isfinite(guess):
        return guess
    cands = [guess]
    up = down = guess
    for _ in range(4):
        up = math.nextafter(up, math.inf)
        down = math.nextafter(down, -math.inf)
        cands += [up, down]
    hits = [v for v in cands if _to_internal(v, factor) == x]
    if not hits:
        return guess
    return min(hits, key=lambda v: (len(repr(v)), abs(v - guess)))


# -- strict field access --------------------------------------------------------

def _fields(obj: Any, where: str, required: Iterable[str], optional: Iterable[str] = ()) -> Dict[str, Any]:
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected an object, got {type(obj).__name__}")
    req = list(required)
    allowed = set(req) | set(optional)
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise SchemaError(f"{where}: unknown field(s) {', '.join(unknown)}")
    missing = [k for k in req if k not in obj]
    if missing:
        raise SchemaError(f"{where}: missing field(s) {', '.join(missing)}")
    return obj


def _num(obj: Mapping[str, Any], key: str, where: str) -> float:
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"{where}.{key}: expected a number, got {v!r}")
    return float(v)


def _int(obj: Mapping[str, Any], key: str, where: str) -> int:
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(f"{where}.{key}: expected an integer, got {v!r}")
    return v


def _bool(obj: Mapping[str, Any], key: str, where: str) -> bool:
    v = obj[key]
    if not isinstance(v, bool):
        raise SchemaError(f"{where}.{key}: expected true/false, got {v!r}")
    return v


def _check_header(doc: Any, kind: str) -> None:
    if not isinstance(doc, dict):
        raise SchemaError("top level: expected an object")
    ver = doc.get("schema_version")
    if ver != SCHEMA_VERSION:
        raise SchemaError(f"schema_version {ver!r} is not supported (expected {SCHEMA_VERSION})")
    if doc.get("kind", kind) != kind:
        raise SchemaError(f"expected a {kind} document, got kind {doc.get('kind')!r}")


def _dumps(doc: Any) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


# -- instances ---------------------------------------------------------------------

_LINK_MODEL_FIELDS = ("max_range_m", "rate_at_reference_gbps", "reference_distance_m",
                      "path_loss_exponent", "rate_floor_gbps")


def instance_to_dict(inst: Instance) -> Dict[str, Any]:
    lm = inst.link_model
    meta: Dict[str, Any] = {"seed": inst.meta.get("seed"), "units": dict(UNITS)}
    if inst.meta.get("description"):
        meta["description"] = inst.meta["description"]
    uniform = all(t.weight == 1.0 / inst.n_tasks for t in inst.tasks)
    doc: Dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "kind": "instance",
        "meta": meta,
        "link_model": {
            "max_range_m": lm.max_range,
            "rate_at_reference_gbps": _to_file(lm.rate_at_reference, GBPS),
            "reference_distance_m": lm.reference_distance,
            "path_loss_exponent": lm.path_loss_exponent,
            "rate_floor_gbps": _to_file(lm.rate_floor, GBPS),
        },
        "base_stations": [
            {
                "id": b.id,
                "x_m": b.x,
                "y_m": b.y,
                "interfaces": b.interfaces,
                "server": {"capacity_gb": _to_file(b.storage_capacity, GB)} if b.has_server else None,
                "cloud_attached": b.cloud_attached,
            }
            for b in inst.base_stations
        ],
        "tasks": [],
        "cloud_latency_ms": _to_file(inst.cloud_latency, MS),
        "saturation": inst.saturation,
    }
    for t in inst.tasks:
        row: Dict[str, Any] = {"id": t.id, "size_gb": _to_file(t.size, GB), "origin": t.origin}
        if not uniform:
            row["weight"] = t.weight
        doc["tasks"].append(row)
    if inst.rate_overrides:
        notes = inst.meta.get("override_notes", {})
        ovs = []
        for n, m, r in inst.rate_overrides:
            row = {"n": n, "m": m, "rate_gbps": _to_file(r, GBPS)}
            note = notes.get((n, m)) if isinstance(notes, dict) else None
            if note:
                row["note"] = note
            ovs.append(row)
        doc["rate_overrides"] = ovs
    return doc


def instance_from_dict(doc: Any) -> Instance:
    _check_header(doc, "instance")
    _fields(doc, "instance", ("schema_version", "meta", "link_model", "base_stations", "tasks",
                              "cloud_latency_ms", "saturation"), ("kind", "rate_overrides"))
    meta_doc = _fields(doc["meta"], "meta", ("units",), ("seed", "description"))
    if meta_doc["units"] != UNITS:
        raise SchemaError(f"meta.units must be {UNITS}, got {meta_doc['units']!r}")
    seed = meta_doc.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise SchemaError(f"meta.seed: expected an integer or null, got {seed!r}")

    lmd = _fields(doc["link_model"], "link_model", _LINK_MODEL_FIELDS)
    lm = LinkModelConfig(
        max_range=_num(lmd, "max_range_m", "link_model"),
        rate_at_reference=_to_internal(_num(lmd, "rate_at_reference_gbps", "link_model"), GBPS),
        reference_distance=_num(lmd, "reference_distance_m", "link_model"),
        path_loss_exponent=_num(lmd, "path_loss_exponent", "link_model"),
        rate_floor=_to_internal(_num(lmd, "rate_floor_gbps", "link_model"), GBPS),
    )

    if not isinstance(doc["base_stations"], list):
        raise SchemaError("base_stations: expected a list")
    bss = []
    for k, b in enumerate(doc["base_stations"]):
        where = f"base_stations[{k}]"
        _fields(b, where, ("id", "x_m", "y_m", "interfaces", "server", "cloud_attached"))
        srv = b["server"]
        cap = 0.0
        if srv is not None:
            _fields(srv, where + ".server", ("capacity_gb",))
            cap = _to_internal(_num(srv, "capacity_gb", where + ".server"), GB)
        bss.append(BaseStation(
            id=_int(b, "id", where), x=_num(b, "x_m", where), y=_num(b, "y_m", where),
            interfaces=_int(b, "interfaces", where), has_server=srv is not None,
            storage_capacity=cap, cloud_attached=_bool(b, "cloud_attached", where),
        ))

    if not isinstance(doc["tasks"], list):
        raise SchemaError("tasks: expected a list")
    tasks = []
    for k, t in enumerate(doc["tasks"]):
        where = f"tasks[{k}]"
        _fields(t, where, ("id", "size_gb", "origin"), ("weight",))
        w = _num(t, "weight", where) if "weight" in t else None
        tasks.append(Task(id=_int(t, "id", where), size=_to_internal(_num(t, "size_gb", where), GB),
                          origin=_int(t, "origin", where), weight=w))

    overrides = []
    notes = {}
    for k, o in enumerate(doc.get("rate_overrides") or []):
        where = f"rate_overrides[{k}]"
        _fields(o, where, ("n", "m", "rate_gbps"), ("note",))
        n, m = _int(o, "n", where), _int(o, "m", where)
        overrides.append((n, m, _to_internal(_num(o, "rate_gbps", where), GBPS)))
        if o.get("note"):
            notes[(n, m)] = str(o["note"])

    meta: Dict[str, Any] = {"seed": seed}
    if meta_doc.get("description"):
        meta["description"] = str(meta_doc["description"])
    if notes:
        meta["override_notes"] = notes
    return Instance(
        base_stations=tuple(bss),
        tasks=tuple(tasks),
        cloud_latency=_to_internal(_num(doc, "cloud_latency_ms", "instance"), MS),
        saturation=_num(doc, "saturation", "instance"),
        link_model=lm,
        rate_overrides=tuple(overrides),
        meta=meta,
    )


def dumps_instance(inst: Instance) -> str:
    return _dumps(instance_to_dict(inst))


def loads_instance(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from None
    return instance_from_dict(doc)


def load_instance(path: str) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return loads_instance(fh.read())


def save_instance(inst: Instance, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_instance(inst))


# -- plans ---------------------------------------------------------------------------

def _link_doc(l: Link) -> List[int]:
    return [l.src, l.src_if, l.dst, l.dst_if]


def _link_from(v: Any, where: str) -> Link:
    if not (isinstance(v, list) and len(v) == 4 and all(isinstance(x, int) and not isinstance(x, bool) for x in v)):
        raise SchemaError(f"{where}: expected [src, src_if, dst, dst_if], got {v!r}")
    return Link(*v)


def plan_to_dict(plan: Plan) -> Dict[str, Any]:
    tasks = []
    for b in sorted(plan.assignment):
        loc = plan.assignment[b]
        row: Dict[str, Any] = {"id": b, "location": loc, "path": [_link_doc(l) for l in plan.path(b)]}
        if b in plan.cloud_entry:
            row["cloud_entry"] = plan.cloud_entry[b]
        tasks.append(row)
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "plan",
        "links": [_link_doc(l) for l in sorted(plan.links)],
        "tasks": tasks,
    }


def plan_from_dict(doc: Any) -> Plan:
    _check_header(doc, "plan")
    _fields(doc, "plan", ("schema_version", "links", "tasks"), ("kind",))
    links = [_link_from(v, f"links[{k}]") for k, v in enumerate(doc["links"])]
    paths, assignment, entry = {}, {}, {}
    for k, t in enumerate(doc["tasks"]):
        where = f"tasks[{k}]"
        _fields(t, where, ("id", "location", "path"), ("cloud_entry",))
        b = _int(t, "id", where)
        loc = t["location"]
        if loc != CLOUD and (isinstance(loc, bool) or not isinstance(loc, int)):
            raise SchemaError(f"{where}.location: expected a BS id or {CLOUD!r}, got {loc!r}")
        paths[b] = tuple(_link_from(v, f"{where}.path[{i}]") for i, v in enumerate(t["path"]))
        assignment[b] = loc
        if "cloud_entry" in t:
            entry[b] = _int(t, "cloud_entry", where)
    plan = Plan.from_paths(paths, assignment, entry)
    if set(links) != set(plan.links):
        extra = sorted(set(links) ^ set(plan.links))
        raise SchemaError(f"links list disagrees with task paths on {[Link(*l).label for l in extra]}")
    return plan


def dumps_plan(plan: Plan) -> str:
    return _dumps(plan_to_dict(plan))


def loads_plan(text: str) -> Plan:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from None
    return plan_from_dict(doc)


def load_plan(path: str) -> Plan:
    with open(path, encoding="utf-8") as fh:
        return loads_plan(fh.read())


# -- reports ---------------------------------------------------------------------------

REPORT_COLUMNS = ("task", "size_gb", "origin", "location", "path", "hops", "latency_hbh_s", "latency_minR_s")


def _g6(v: Optional[float]) -> str:
    return "" if v is None else "%.6g" % v


def report_to_csv(report: LatencyReport) -> str:
    """One row per task, then one ``total`` row per totals key."""
    buf = _stdio.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in report.tasks:
        w.writerow([r.id, _g6(r.size / GB), r.origin, r.location, r.path_text, r.hops,
                    _g6(r.latency_hbh), _g6(r.latency_minR)])
    for key in sorted(report.totals):
        w.writerow(["total", "", "", "", key, "", _g6(report.totals[key]), ""])
    return buf.getvalue()


def report_to_dict(report: LatencyReport) -> Dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "report",
        "meta": {k: report.meta[k] for k in sorted(report.meta)},
        "totals": {k: report.totals[k] for k in sorted(report.totals)},
        "tasks": [
            {
                "id": r.id,
                "size_gb": _to_file(r.size, GB),
                "origin": r.origin,
                "location": r.location,
                "path": list(r.path),
                "hops": r.hops,
                "latency_hbh_s": r.latency_hbh,
                "latency_minR_s": r.latency_minR,
            }
            for r in report.tasks
        ],
    }


def report_from_dict(doc: Any) -> LatencyReport:
    _check_header(doc, "report")
    _fields(doc, "report", ("schema_version", "meta", "totals", "tasks"), ("kind",))
    rows = []
    for k, t in enumerate(doc["tasks"]):
        where = f"tasks[{k}]"
        _fields(t, where, ("id", "size_gb", "origin", "location", "path", "hops",
                           "latency_hbh_s", "latency_minR_s"))
        rows.append(TaskLatency(
            id=t["id"], size=_to_internal(t["size_gb"], GB), origin=t["origin"], location=t["location"],
            path=tuple(t["path"]), hops=t["hops"], latency_hbh=t["latency_hbh_s"],
            latency_minR=t["latency_minR_s"],
        ))
    totals = {str(k): float(v) for k, v in doc["totals"].items()}
    return LatencyReport(tuple(rows), totals, dict(doc["meta"]))


def export_report(report: LatencyReport) -> tuple:
    """``(csv_text, json_text)`` for ``report``."""
    return report_to_csv(report), _dumps(report_to_dict(report))


def loads_report(text: str) -> LatencyReport:
    return report_from_dict(json.loads(text))


def rows_to_csv(rows: Sequence[Any]) -> str:
    """Dataclass rows (sweep tables) as CSV with 6 significant digits."""
    buf = _stdio.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if not rows:
        return ""
    names = list(type(rows[0]).__dataclass_fields__)
    w.writerow(names)
    for r in rows:
        w.writerow([_g6(v) if isinstance(v, float) else v for v in (getattr(r, n) for n in names)])
    return buf.getvalue()


# -- topology ----------------------------------------------------------------------------

def export_topology(plan: Plan, inst: Instance) -> str:
    """Graphviz DOT: server BSs as circles, others as squares, the
    cloud-attached BS marked with ``*`` and a double border.  Edges carry the
    ``n(i)→m(j)`` label and the number of tasks routed over them."""
    users = plan.users()
    hosted: Dict[int, int] = {}
    for t in inst.tasks:
        hosted[t.origin] = hosted.get(t.origin, 0) + 1
    out = ["digraph topology {", "  rankdir=LR;", '  node [fontname="Helvetica"];']
    for b in inst.base_stations:
        shape = "circle" if b.has_server else "square"
        star = "*" if b.cloud_attached else ""
        attrs = [f"shape={shape}", f'label="{b.id}{star}\\n{hosted.get(b.id, 0)} tasks"']
        if b.cloud_attached:
            attrs.append("peripheries=2")
        out.append(f"  bs{b.id} [{', '.join(attrs)}];")
    for l in sorted(plan.links):
        n = len(users.get(l, ()))
        out.append(f'  bs{l.src} -> bs{l.dst} [label="{l.label}\\n{n} task{"" if n == 1 else "s"}"];')
    out.append("}")
    return "\n".join(out) + "\n"
