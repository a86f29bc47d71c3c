"""Seeded Monte Carlo runs of (possibly transformed) protocols.

Trial ``i`` of a batch draws its seed from ``SeedSequence(master, spawn_key=(i,))``,
so its random stream does not depend on how many trials run or on how
they are spread over worker threads.
"""
from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np

from .core import (
    ProtocolDef, _apply_unchecked, configuration_index, domains, enabled_actions, validate,
)
from .errors import InvalidInput
from .schedulers import SchedulerPolicy, select
from .topology import Topology

DEFAULT_STEP_CAP = 100_000
INIT_MODES = ("fixed", "uniform-random")


@dataclass(frozen=True)
class TrialOutcome:
    converged: bool
    steps_to_legitimate: Optional[int]
    seed: int
    initial: int
    terminal_stuck: bool = False


@dataclass(frozen=True)
class TrialStats:
    trials: int
    converged: int
    non_converged: int
    terminal_stuck: int
    convergence_rate: float
    mean: Optional[float]
    median: Optional[float]
    p95: Optional[float]
    std: Optional[float]
    stderr: Optional[float]
    ci95_halfwidth: Optional[float]

    def to_dict(self) -> dict:
        return asdict(self)


def trial_seed(master_seed: int, i: int) -> int:
    state = np.random.SeedSequence(master_seed, spawn_key=(i,)).generate_state(2, np.uint32)
    return int(state[0]) << 32 | int(state[1])


def run_trial(protocol: ProtocolDef, topo: Topology, policy: SchedulerPolicy, init,
              legit: Callable, seed: int, step_cap: int = DEFAULT_STEP_CAP,
              initial_id: Optional[int] = None) -> TrialOutcome:
    """Step the system from ``init`` until it is legitimate or ``step_cap`` steps elapse."""
    if step_cap < 1:
        raise InvalidInput("step_cap must be at least 1")
    cfg = tuple(init)
    if initial_id is None:
        initial_id = configuration_index(protocol, topo, cfg)
    rng = np.random.default_rng(seed)
    if legit(cfg):
        return TrialOutcome(True, 0, seed, initial_id)
    last = None
    for step in range(step_cap):
        actions = enabled_actions(protocol, topo, cfg)
        if not actions:
            return TrialOutcome(False, None, seed, initial_id, terminal_stuck=True)
        chosen = select(policy, actions.keys(), rng, step, last)
        if policy.kind == "central-rr":
            (last,) = chosen
        cfg = _apply_unchecked(protocol, topo, cfg, {p: actions[p] for p in chosen}, rng)
        if legit(cfg):
            return TrialOutcome(True, step + 1, seed, initial_id)
    return TrialOutcome(False, None, seed, initial_id)


def random_configuration(protocol: ProtocolDef, topo: Topology, rng) -> tuple:
    return tuple(d[int(rng.integers(len(d)))] for d in domains(protocol, topo))


def summarize(outcomes) -> TrialStats:
    outcomes = list(outcomes)
    n = len(outcomes)
    if n == 0:
        raise InvalidInput("no trials to summarize")
    times = np.array([o.steps_to_legitimate for o in outcomes if o.converged], dtype=float)
    k = len(times)
    stuck = sum(o.terminal_stuck for o in outcomes)
    if k == 0:
        return TrialStats(n, 0, n, stuck, 0.0, None, None, None, None, None, None)
    times.sort()  # order-insensitive aggregation
    mean = float(times.mean())
    std = float(times.std(ddof=1)) if k > 1 else 0.0
    stderr = std / math.sqrt(k)
    return TrialStats(
        trials=n,
        converged=k,
        non_converged=n - k,
        terminal_stuck=stuck,
        convergence_rate=k / n,
        mean=mean,
        median=float(np.median(times)),
        p95=float(np.percentile(times, 95)),
        std=std,
        stderr=stderr,
        ci95_halfwidth=1.96 * stderr,
    )


def default_workers() -> int:
    raw = os.environ.get("STABILAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise InvalidInput(f"STABILAB_THREADS must be an integer, got {raw!r}") from None
    if n == 0:
        return os.cpu_count() or 1
    return max(1, n)


def run_trials(protocol: ProtocolDef, topo: Topology, policy: SchedulerPolicy, init_mode: str,
               legit: Callable, trials: int, seed: int, step_cap: int = DEFAULT_STEP_CAP,
               init=None, workers: int = 1) -> list[TrialOutcome]:
    if trials < 1:
        raise InvalidInput("trials must be at least 1")
    if init_mode not in INIT_MODES:
        raise InvalidInput(f"unknown init mode {init_mode!r}")
    if init_mode == "fixed":
        if init is None:
            raise InvalidInput("fixed init mode needs an initial configuration")
        init = tuple(init)
        validate(protocol, topo, init)
        fixed_id = configuration_index(protocol, topo, init)

    def one(i: int) -> TrialOutcome:
        s = trial_seed(seed, i)
        if init_mode == "fixed":
            start, start_id = init, fixed_id
        else:
            start = random_configuration(protocol, topo, np.random.default_rng((s, 1)))
            start_id = configuration_index(protocol, topo, start)
        return run_trial(protocol, topo, policy, start, legit, s, step_cap, start_id)

    if workers <= 1:
        return [one(i) for i in range(trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(trials)))


def estimate(protocol: ProtocolDef, topo: Topology, policy: SchedulerPolicy, init_mode: str,
             legit: Callable, trials: int, seed: int, step_cap: int = DEFAULT_STEP_CAP,
             init=None, workers: int = 1) -> TrialStats:
    return summarize(run_trials(protocol, topo, policy, init_mode, legit, trials, seed,
                                step_cap, init, workers))


def write_csv(path, outcomes) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seed", "initial", "converged", "steps"])
        for o in outcomes:
            w.writerow([o.seed, o.initial, int(o.converged),
                        "" if o.steps_to_legitimate is None else o.steps_to_legitimate])
