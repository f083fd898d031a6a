"""Command-line entry point.

Exit codes: 0 success, 1 internal error, 2 usage error, 3 invalid input
(schema or feasibility violations), 4 solve stopped at a limit with a gap.
"""

from __future__ import annotations

import argparse
import dataclasses
import re
import sys
from typing import List, Optional, Sequence, Tuple

from . import io as mio
from .generate import BadParameter, generate_instance
from .linkgraph import link_graph_for
from .milp.bnb import InfeasibleModel, SolveLimits, solve_p1
from .milp.lpformat import write_lp
from .milp.model import build_p1
from .model import GB, Instance, validate_instance, validate_plan
from .pipeline import NoPlan, run_two_step, solve_report, sweep_infrastructure, sweep_task_size

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_INVALID = 3
EXIT_GAP = 4

_DURATION = re.compile(r"^\s*([0-9]*\.?[0-9]+)\s*(ms|s|m|h)?\s*$")
_UNIT_SECONDS = {"ms": 1e-3, "s": 1.0, "m": 60.0, "h": 3600.0, None: 1.0}


class InvalidInput(Exception):
    def __init__(self, lines: Sequence[str]) -> None:
        super().__init__("; ".join(lines))
        self.lines = list(lines)


def parse_duration(text: str) -> float:
    """``"1s"``, ``"500ms"``, ``"2m"`` or a bare number of seconds."""
    mt = _DURATION.match(text)
    if not mt:
        raise argparse.ArgumentTypeError(f"invalid duration {text!r} (use e.g. 30s, 500ms, 2m)")
    return float(mt.group(1)) * _UNIT_SECONDS[mt.group(2)]


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _xi(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError(f"--xi must lie in (0, 1], got {v}")
    return v


def _float_list(text: str) -> List[float]:
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> List[int]:
    try:
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _servers(text: str) -> List[Tuple[int, float]]:
    out = []
    for part in text.split(","):
        if not part.strip():
            continue
        try:
            bs, cap = part.split(":")
            out.append((int(bs), float(cap) * GB))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected BS:capacity_gb pairs, got {part!r}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--policy", choices=("hbh", "minR"), default="hbh",
                        help="Step-2 allocation and headline metric (default hbh)")
    common.add_argument("--xi", type=_xi, default=None, help="override the link saturation factor")
    common.add_argument("--time-limit", type=parse_duration, default=None,
                        help="Step-1 wall clock budget, e.g. 30s, 500ms, 2m")
    common.add_argument("--node-limit", type=_positive_int, default=None, help="Step-1 node budget")
    common.add_argument("--seed", type=int, default=0, help="generator seed")
    common.add_argument("--out", default=None, help="output path (default: standard output)")

    p = argparse.ArgumentParser(prog="mecplan", description="Edge offloading topology and bandwidth planner.")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    g = sub.add_parser("generate", parents=[common], help="synthesize a random instance")
    g.add_argument("--bs", type=_positive_int, required=True, help="number of base stations")
    g.add_argument("--interfaces", type=_positive_int, default=2)
    g.add_argument("--tasks", type=int, required=True)
    g.add_argument("--size-range", type=float, nargs=2, metavar=("LO_GB", "HI_GB"), default=(0.1, 1.0))
    g.add_argument("--servers", type=_servers, default=None, help="BS:capacity_gb list, e.g. 1:3.2,3:3.6")
    g.add_argument("--cloud-bs", type=_int_list, default=None, help="cloud-attached BS ids")
    g.add_argument("--cloud-latency-ms", type=float, default=200.0)

    v = sub.add_parser("validate", parents=[common], help="check an instance (and optionally a plan)")
    v.add_argument("instance")
    v.add_argument("--plan", default=None)

    pl = sub.add_parser("plan", parents=[common], help="Step 1 only: topology, routes and placement")
    pl.add_argument("instance")
    pl.add_argument("--lp", default=None, metavar="PATH", help="also write the model in LP format")

    a = sub.add_parser("allocate", parents=[common], help="Step 2 on a saved plan")
    a.add_argument("instance")
    a.add_argument("plan")

    s = sub.add_parser("solve", parents=[common], help="both steps and the serving report")
    s.add_argument("instance")

    ss = sub.add_parser("sweep-size", parents=[common], help="totals versus task size scale")
    ss.add_argument("instance")
    ss.add_argument("--scales", type=_float_list, default=[60, 80, 100, 120, 140, 160],
                    help="percent scales, comma-separated")

    si = sub.add_parser("sweep-infra", parents=[common], help="totals versus interfaces and server capacity")
    si.add_argument("instance")
    si.add_argument("--interface-counts", type=_int_list, default=[2, 3])
    si.add_argument("--capacity-factors", type=_float_list, default=[0.0, 0.5, 1.0])

    d = sub.add_parser("export-dot", parents=[common], help="Graphviz view of a plan")
    d.add_argument("instance")
    d.add_argument("plan")
    return p


# -- helpers ------------------------------------------------------------------------

def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _emit_report(report, out: Optional[str]) -> None:
    csv_text, json_text = mio.export_report(report)
    if out is None:
        sys.stdout.write(csv_text)
    elif out.endswith(".json"):
        _emit(json_text, out)
    elif out.endswith(".csv"):
        _emit(csv_text, out)
    else:
        _emit(csv_text, out + ".csv")
        _emit(json_text, out + ".json")


def _progress(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def _limits(args) -> SolveLimits:
    return SolveLimits(node_limit=args.node_limit, time_limit=args.time_limit, progress=_progress)


def _load(args) -> Instance:
    inst = mio.load_instance(args.instance)
    if args.xi is not None:
        inst = dataclasses.replace(inst, saturation=args.xi)
    bad = validate_instance(inst)
    if bad:
        raise InvalidInput([str(v) for v in bad])
    return inst


def _load_plan(path: str, inst: Instance, g):
    plan = mio.load_plan(path)
    bad = validate_plan(inst, plan, g)
    if bad:
        raise InvalidInput([str(v) for v in bad])
    return plan


def _summary(outcome) -> str:
    return (f"status {outcome.status}  objective {outcome.objective_value:.6g}  "
            f"gap {outcome.gap:.4%}  nodes {outcome.nodes_explored}")


def _gap_code(outcome) -> int:
    return EXIT_OK if outcome.is_optimal else EXIT_GAP


# -- commands -------------------------------------------------------------------------

def cmd_generate(args) -> int:
    inst = generate_instance(
        args.seed, args.bs, args.interfaces, args.tasks,
        size_range=(args.size_range[0] * GB, args.size_range[1] * GB),
        servers=args.servers, cloud_bs=args.cloud_bs, theta=args.cloud_latency_ms * 1e-3,
        saturation=args.xi if args.xi is not None else 0.95,
    )
    _emit(mio.dumps_instance(inst), args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    inst = mio.load_instance(args.instance)
    if args.xi is not None:
        inst = dataclasses.replace(inst, saturation=args.xi)
    bad = [str(v) for v in validate_instance(inst)]
    if not bad and args.plan:
        bad = [str(v) for v in validate_plan(inst, mio.load_plan(args.plan))]
    if bad:
        raise InvalidInput(bad)
    print("ok", file=sys.stderr)
    return EXIT_OK


def cmd_plan(args) -> int:
    inst = _load(args)
    g = link_graph_for(inst)
    m = build_p1(inst, g)
    if args.lp:
        with open(args.lp, "w", encoding="utf-8") as fh:
            fh.write(write_lp(m))
    outcome = solve_p1(m, _limits(args))
    print(_summary(outcome), file=sys.stderr)
    if outcome.plan is None:
        raise NoPlan(outcome)
    _emit(mio.dumps_plan(outcome.plan), args.out)
    return _gap_code(outcome)


def cmd_allocate(args) -> int:
    inst = _load(args)
    g = link_graph_for(inst)
    plan = _load_plan(args.plan, inst, g)
    _, report = solve_report(plan, inst, g, args.policy)
    _emit_report(report, args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = _load(args)
    res = run_two_step(inst, args.policy, _limits(args))
    print(_summary(res.outcome), file=sys.stderr)
    _emit_report(res.report, args.out)
    return _gap_code(res.outcome)


def cmd_sweep_size(args) -> int:
    inst = _load(args)
    if any(s <= 0 for s in args.scales):
        raise InvalidInput([f"scales must be positive, got {args.scales}"])
    rows = sweep_task_size(inst, args.scales, None, _limits(args))
    _emit(mio.rows_to_csv(rows), args.out)
    return EXIT_OK if all(r.status == "Optimal" for r in rows) else EXIT_GAP


def cmd_sweep_infra(args) -> int:
    inst = _load(args)
    if any(i < 1 for i in args.interface_counts):
        raise InvalidInput([f"interface counts must be >= 1, got {args.interface_counts}"])
    rows = sweep_infrastructure(inst, args.interface_counts, args.capacity_factors, args.policy, _limits(args))
    _emit(mio.rows_to_csv(rows), args.out)
    return EXIT_OK if all(r.status == "Optimal" for r in rows) else EXIT_GAP


def cmd_export_dot(args) -> int:
    inst = _load(args)
    plan = _load_plan(args.plan, inst, link_graph_for(inst))
    _emit(mio.export_topology(plan, inst), args.out)
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "validate": cmd_validate,
    "plan": cmd_plan,
    "allocate": cmd_allocate,
    "solve": cmd_solve,
    "sweep-size": cmd_sweep_size,
    "sweep-infra": cmd_sweep_infra,
    "export-dot": cmd_export_dot,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed the offending flag
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except InvalidInput as exc:
        for line in exc.lines:
            print(line, file=sys.stderr)
        return EXIT_INVALID
    except (mio.SchemaError, BadParameter, InfeasibleModel) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NoPlan as exc:
        print(f"NoPlan: {exc}", file=sys.stderr)
        return EXIT_GAP if exc.outcome.status != "Infeasible" else EXIT_INVALID
    except OSError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - last-resort exit code
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
