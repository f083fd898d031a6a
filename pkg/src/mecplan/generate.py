"""Seeded scenario synthesis."""

from __future__ import annotations

from typing import Optional, Sequence, Tuple

import numpy as np

from .model import GB, BaseStation, Instance, LinkModelConfig, Task

DEFAULT_SERVERS = ((1, 3.2 * GB), (3, 3.6 * GB))


class BadParameter(ValueError):
    pass


def generate_instance(
    seed: int,
    n_bs: int,
    interfaces: int,
    n_tasks: int,
    size_range: Tuple[float, float] = (0.1 * GB, 1.0 * GB),
    area: Tuple[float, float] = (280.0, 280.0),
    servers: Optional[Sequence[Tuple[int, float]]] = None,
    cloud_bs: Optional[Sequence[int]] = None,
    theta: float = 0.2,
    saturation: float = 0.95,
    link_model: Optional[LinkModelConfig] = None,
) -> Instance:
    """Place ``n_bs`` BSs uniformly in ``area`` and drop ``n_tasks`` tasks on
    uniformly random origins with sizes uniform in ``size_range`` (bytes).

    Defaults follow the evaluation setup: servers at BS 1 (3.2 GB) and BS 3
    (3.6 GB), the cloud wired to BS ``n_bs``, 200 ms cloud latency.
    """
    if n_bs < 1 or interfaces < 1 or n_tasks < 0:
        raise BadParameter("n_bs and interfaces must be >= 1, n_tasks >= 0")
    lo, hi = size_range
    if not (0 < lo <= hi):
        raise BadParameter(f"bad size range {size_range!r}")
    if area[0] <= 0 or area[1] <= 0 or theta < 0:
        raise BadParameter("area must be positive and theta non-negative")
    if servers is None:
        servers = DEFAULT_SERVERS
    if cloud_bs is None:
        cloud_bs = (n_bs,)
    srv = {}
    for bs_id, cap in servers:
        if not 1 <= bs_id <= n_bs or cap <= 0:
            raise BadParameter(f"server ({bs_id}, {cap}) out of range for {n_bs} BSs")
        srv[bs_id] = float(cap)
    if not cloud_bs or any(not 1 <= p <= n_bs for p in cloud_bs):
        raise BadParameter(f"cloud BSs {list(cloud_bs)} out of range")

    rng = np.random.default_rng(seed)
    xy = rng.uniform(0.0, 1.0, size=(n_bs, 2)) * np.asarray(area, dtype=float)
    bss = tuple(
        BaseStation(
            id=k + 1,
            x=round(float(xy[k, 0]), 3),
            y=round(float(xy[k, 1]), 3),
            interfaces=interfaces,
            has_server=(k + 1) in srv,
            storage_capacity=srv.get(k + 1, 0.0),
            cloud_attached=(k + 1) in set(cloud_bs),
        )
        for k in range(n_bs)
    )
    origins = rng.integers(1, n_bs + 1, size=n_tasks)
    # whole megabytes keep files and reports readable
    sizes = np.round(rng.uniform(lo, hi, size=n_tasks) / 1e6) * 1e6
    sizes = np.maximum(sizes, 1e6)
    tasks = tuple(Task(id=b + 1, size=float(sizes[b]), origin=int(origins[b])) for b in range(n_tasks))
    return Instance(
        base_stations=bss,
        tasks=tasks,
        cloud_latency=theta,
        saturation=saturation,
        link_model=link_model or LinkModelConfig(),
        meta={"seed": seed},
    )
