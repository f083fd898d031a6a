"""Joint backhaul topology, task placement and bandwidth planning for
edge-computing base stations."""

from importlib import resources

from .bwalloc import (EmptyLink, KKTReport, NoConvergence, allocate_p2a, allocate_p2b,
                      equal_share_allocation, verify_kkt)
from .generate import BadParameter, generate_instance
from .linkgraph import LinkGraph, build_link_graph, link_graph_for, override_rates
from .milp import SolveLimits, SolveOutcome, brute_force_plan, build_p1, solve_p1
from .model import (CLOUD, GB, GBPS, Allocation, BaseStation, Instance, Link, LinkModelConfig, Plan,
                    Task, Violation, validate_instance, validate_plan)
from .pipeline import (LatencyReport, MissingAllocation, NoPlan, evaluate, evaluate_hbh, evaluate_minR,
                       run_two_step, sweep_infrastructure, sweep_task_size)

__version__ = "0.1.0"


def data_path(name: str) -> str:
    """Filesystem path of a bundled fixture, e.g. ``six_bs_instance.json``."""
    return str(resources.files(__package__).joinpath("data", name))


__all__ = [
    "Allocation", "BadParameter", "BaseStation", "CLOUD", "EmptyLink", "GB", "GBPS", "Instance",
    "KKTReport", "LatencyReport", "Link", "LinkGraph", "LinkModelConfig", "MissingAllocation",
    "NoConvergence", "NoPlan", "Plan", "SolveLimits", "SolveOutcome", "Task", "Violation",
    "allocate_p2a", "allocate_p2b", "brute_force_plan", "build_link_graph", "build_p1", "data_path",
    "equal_share_allocation", "evaluate", "evaluate_hbh", "evaluate_minR", "generate_instance",
    "link_graph_for", "override_rates", "run_two_step", "solve_p1", "sweep_infrastructure",
    "sweep_task_size", "validate_instance", "validate_plan", "verify_kkt",
]
