"""Scheduler policies for simulation and fairness predicates over lassos."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .core import (
    Configuration, ProtocolDef, activation_key, enabled_actions, transitions,
)
from .errors import InvalidInput, ScriptStall
from .topology import Topology

POLICY_KINDS = (
    "central-rr",
    "distributed-full",
    "synchronous",
    "randomized-central",
    "randomized-distributed",
    "scripted",
)
RANDOMIZED = ("randomized-central", "randomized-distributed")
FAIRNESS_KINDS = ("weak", "strong", "gouda")


@dataclass(frozen=True)
class SchedulerPolicy:
    kind: str
    script: tuple[frozenset, ...] = ()

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise InvalidInput(f"unknown scheduler kind {self.kind!r}")
        script = tuple(frozenset(int(p) for p in entry) for entry in self.script)
        object.__setattr__(self, "script", script)
        if self.kind == "scripted":
            if not script:
                raise InvalidInput("a scripted policy needs at least one entry")
            if any(not entry for entry in script):
                raise InvalidInput("scripted entries must be nonempty")

    @property
    def randomized(self) -> bool:
        return self.kind in RANDOMIZED


def select(policy: SchedulerPolicy, enabled_set, rnd=None, step_index: int = 0,
           last: Optional[int] = None) -> frozenset:
    """Choose the processes activated in this step.

    ``last`` is the process chosen by the previous central-rr step.
    """
    procs = sorted(enabled_set)
    if not procs:
        raise InvalidInput("select() needs a nonempty enabled set")
    kind = policy.kind
    if kind in ("distributed-full", "synchronous"):
        return frozenset(procs)
    if kind == "central-rr":
        start = -1 if last is None else last
        later = [p for p in procs if p > start]
        return frozenset([later[0] if later else procs[0]])
    if kind == "randomized-central":
        return frozenset([procs[int(rnd.integers(len(procs)))]])
    if kind == "randomized-distributed":
        # uniform over the 2^k - 1 nonempty subsets
        mask = int(rnd.integers(1, 2 ** len(procs)))
        return frozenset(p for i, p in enumerate(procs) if mask >> i & 1)
    if kind == "scripted":
        entry = policy.script[step_index % len(policy.script)]
        chosen = entry & frozenset(procs)
        if not chosen:
            raise ScriptStall(
                f"script entry {sorted(entry)} at step {step_index} shares no process "
                f"with enabled set {procs}"
            )
        return chosen
    raise InvalidInput(f"unknown scheduler kind {kind!r}")


def parse_script(text: str) -> tuple[frozenset, ...]:
    """Inline script grammar: steps separated by ``;`` or newlines, processes by ``,``."""
    steps = []
    for chunk in text.replace("\n", ";").split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            steps.append(frozenset(int(x) for x in chunk.split(",") if x.strip()))
        except ValueError:
            raise InvalidInput(f"cannot parse script step {chunk!r}") from None
    if not steps:
        raise InvalidInput("empty script")
    return tuple(steps)


def read_script(path) -> tuple[frozenset, ...]:
    with open(path) as fh:
        return parse_script(fh.read())


# -- lassos -----------------------------------------------------------------

@dataclass(frozen=True)
class Step:
    source: Configuration
    activation: tuple  # sorted ((process, label), ...)
    target: Configuration

    @property
    def processes(self) -> frozenset:
        return frozenset(p for p, _ in self.activation)


@dataclass(frozen=True)
class Lasso:
    """Finite prefix followed by a cycle that closes on its first configuration."""

    prefix: tuple[Step, ...]
    cycle: tuple[Step, ...]

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(self.prefix))
        object.__setattr__(self, "cycle", tuple(self.cycle))
        if not self.cycle:
            raise InvalidInput("a lasso needs a nonempty cycle")

    @property
    def steps(self) -> tuple[Step, ...]:
        return self.prefix + self.cycle

    @property
    def cycle_configurations(self) -> list:
        return [s.source for s in self.cycle]

    def to_dict(self, encode=list) -> dict:
        def step(s):
            return {
                "source": encode(s.source),
                "activation": [[p, label] for p, label in s.activation],
                "target": encode(s.target),
            }

        return {"prefix": [step(s) for s in self.prefix], "cycle": [step(s) for s in self.cycle]}


def lasso_from_run(states: Sequence, activations: Sequence, loop_start: int) -> Lasso:
    """Build a lasso from a run ``states[0..k]`` where ``states[k] == states[loop_start]``."""
    steps = [
        Step(states[i], activation_key(activations[i]) if isinstance(activations[i], dict)
             else tuple(activations[i]), states[i + 1])
        for i in range(len(activations))
    ]
    return Lasso(tuple(steps[:loop_start]), tuple(steps[loop_start:]))


def check_fairness(lasso: Lasso, kind: str, protocol: ProtocolDef, topo: Topology) -> bool:
    """Does the infinite execution described by ``lasso`` satisfy ``kind`` fairness?"""
    if kind not in FAIRNESS_KINDS:
        raise InvalidInput(f"unknown fairness kind {kind!r}")
    activated = set()
    for s in lasso.cycle:
        activated |= s.processes
    enabled_per_cfg = [set(enabled_actions(protocol, topo, c)) for c in lasso.cycle_configurations]
    if kind == "weak":
        always = set.intersection(*enabled_per_cfg)
        return always <= activated
    if kind == "strong":
        sometimes = set.union(*enabled_per_cfg)
        return sometimes <= activated
    if kind == "gouda":
        taken = {(s.source, s.target) for s in lasso.cycle}
        for cfg in set(lasso.cycle_configurations):
            for _, target in transitions(protocol, topo, cfg, "distributed"):
                if (cfg, target) not in taken:
                    return False
    return True
