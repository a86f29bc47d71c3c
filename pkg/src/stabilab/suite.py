"""Named built-in instances (protocol, topology, scheduler, initialisation)."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .core import configuration_count
from .markov import expected_hitting_time
from .montecarlo import estimate
from .protocols import builtin, two_flag_topology
from .schedulers import SchedulerPolicy
from .topology import Topology, build_ring, build_tree
from .transformer import lift, lift_predicate, transform

TOPOLOGIES = {
    "ring3": lambda: build_ring(3),
    "ring5": lambda: build_ring(5),
    "ring6": lambda: build_ring(6),
    "pair": two_flag_topology,
    "chain4": lambda: build_tree([(0, 1), (1, 2), (2, 3)]),
}


@dataclass(frozen=True)
class Instance:
    protocol: str
    topology: str
    scheduler: str
    transformed: bool = False
    init: Optional[tuple] = None  # base configuration; None means uniform-random

    @property
    def name(self) -> str:
        proto = f"trans({self.protocol})" if self.transformed else self.protocol
        start = "uniform" if self.init is None else "fixed"
        return f"{proto}/{self.topology}/{self.scheduler}/{start}"

    @property
    def init_mode(self) -> str:
        return "uniform-random" if self.init is None else "fixed"

    def build(self):
        """Return ``(protocol, topo, legit, policy, init)`` ready for simulation."""
        topo: Topology = TOPOLOGIES[self.topology]()
        proto, legit, _ = builtin(self.protocol, topo)
        init = self.init
        if self.transformed:
            proto, legit = transform(proto), lift_predicate(legit)
            if init is not None:
                init = lift(init)
        return proto, topo, legit, SchedulerPolicy(self.scheduler), init

    def configuration_count(self) -> int:
        proto, topo, *_ = self.build()
        return configuration_count(proto, topo)


BUILTIN_INSTANCES = (
    Instance("two-flag", "pair", "randomized-distributed", init=(False, False)),
    Instance("two-flag", "pair", "randomized-distributed"),
    Instance("two-flag", "pair", "synchronous", transformed=True, init=(False, False)),
    Instance("two-flag", "pair", "synchronous", transformed=True),
    Instance("two-flag", "pair", "randomized-distributed", transformed=True),
    Instance("leader", "pair", "randomized-central"),
    Instance("leader", "pair", "randomized-distributed"),
    Instance("leader", "pair", "synchronous", transformed=True),
    Instance("leader", "chain4", "randomized-central"),
    Instance("leader", "chain4", "randomized-distributed"),
    Instance("token", "ring3", "randomized-central"),
    Instance("token", "ring3", "randomized-distributed"),
    Instance("token", "ring3", "synchronous", transformed=True),
    Instance("token", "ring5", "randomized-central"),
    Instance("token", "ring5", "randomized-distributed"),
    Instance("token", "ring6", "randomized-distributed", transformed=True),
    Instance("leader", "chain4", "synchronous", transformed=True),
)


def small_instances(max_configurations: int = 64):
    return [inst for inst in BUILTIN_INSTANCES if inst.configuration_count() <= max_configurations]


def cross_check(instances, trials: int, seed: int, workers: int = 1) -> list[dict]:
    """Monte Carlo mean against the exact hitting time, one row per instance.

    Instance ``k`` uses master seed ``seed + k``.  ``z`` is the gap in
    standard errors (None when the exact expectation is infinite).
    """
    rows = []
    for k, inst in enumerate(instances):
        proto, topo, legit, policy, init = inst.build()
        exact = expected_hitting_time(proto, topo, policy.kind, legit, init)
        stats = estimate(proto, topo, policy, inst.init_mode, legit, trials, seed + k,
                         init=init, workers=workers)
        z = None
        if math.isfinite(exact) and stats.stderr:
            z = (stats.mean - exact) / stats.stderr
        rows.append({"instance": inst.name, "exact": exact, "stats": stats.to_dict(), "z": z})
    return rows
