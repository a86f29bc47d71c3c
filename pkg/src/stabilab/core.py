"""Guarded-action semantics: configurations, enabledness, atomic steps.

A configuration is a tuple with one hashable local state per process.
An activation is a mapping ``{process: action_label}``; its canonical
hashable form is a sorted tuple of pairs (see :func:`activation_key`).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Callable, Hashable, Iterator, Mapping, Optional, Sequence

from .errors import AmbiguityError, ContractViolation, InvalidInput, ResourceLimit
from .topology import Topology

Configuration = tuple
State = Hashable

SCHEDULER_CLASSES = ("central", "distributed", "synchronous")
MAX_ENABLED = 20


class LocalView:
    """What process ``p`` may read: its own state and its neighbours' states.

    ``back[i]`` is the local index under which neighbour ``i`` sees ``p``;
    ``pred`` is the local index of the ring predecessor (or None).  The
    process identity is deliberately absent.
    """

    __slots__ = ("state", "neighbors", "back", "pred")

    def __init__(self, state, neighbors, back, pred):
        self.state = state
        self.neighbors = neighbors
        self.back = back
        self.pred = pred

    @property
    def degree(self) -> int:
        return len(self.neighbors)

    def project(self, f: Callable[[Any], Any]) -> "LocalView":
        return LocalView(f(self.state), tuple(f(s) for s in self.neighbors), self.back, self.pred)


def local_view(topo: Topology, cfg: Configuration, p: int) -> LocalView:
    pred = topo.pred_port[p] if topo.pred_port is not None else None
    return LocalView(cfg[p], tuple(cfg[q] for q in topo.adjacency[p]), topo.back[p], pred)


@dataclass(frozen=True)
class ProtocolDef:
    """A set of named guarded actions.

    ``local_guard(view, label)`` and ``local_statement(view, label, rng)``
    see only a :class:`LocalView`.  ``local_outcomes(view, label)``
    returns the statement's exact distribution as ``((prob, state), ...)``;
    it defaults to the single deterministic result.  ``domain(topo, p)``
    lists the legal local states of ``p``; ``relabel_state(state, ports)``
    rewrites port references when neighbour indexes are permuted
    (``ports[old_index] == new_index``).
    """

    name: str
    labels: tuple[str, ...]
    local_guard: Callable[[LocalView, str], bool]
    local_statement: Callable[[LocalView, str, Any], State]
    domain: Callable[[Topology, int], Sequence[State]]
    is_probabilistic: bool = False
    local_outcomes: Optional[Callable[[LocalView, str], tuple]] = None
    relabel_state: Optional[Callable[[State, Sequence[int]], State]] = None
    meta: Optional[dict] = None

    def guard(self, topo: Topology, cfg: Configuration, p: int, label: str) -> bool:
        return bool(self.local_guard(local_view(topo, cfg, p), label))

    def enabled_labels(self, topo: Topology, cfg: Configuration, p: int) -> frozenset:
        view = local_view(topo, cfg, p)
        return frozenset(label for label in self.labels if self.local_guard(view, label))

    def statement(self, topo: Topology, cfg: Configuration, p: int, label: str, rng=None) -> State:
        return self.local_statement(local_view(topo, cfg, p), label, rng)

    def outcomes(self, topo: Topology, cfg: Configuration, p: int, label: str) -> tuple:
        view = local_view(topo, cfg, p)
        if self.local_outcomes is not None:
            return tuple(self.local_outcomes(view, label))
        if self.is_probabilistic:
            raise InvalidInput(f"{self.name}: probabilistic protocol without outcome table")
        return ((1.0, self.local_statement(view, label, None)),)

    def relabel(self, state: State, ports: Sequence[int]) -> State:
        if self.relabel_state is None:
            return state
        return self.relabel_state(state, ports)


def enabled(protocol: ProtocolDef, topo: Topology, cfg: Configuration, p: int) -> frozenset:
    """Labels whose guard holds at ``p``; empty means ``p`` is disabled."""
    return protocol.enabled_labels(topo, cfg, p)


def enabled_actions(protocol: ProtocolDef, topo: Topology, cfg: Configuration) -> dict[int, str]:
    """Map each enabled process to its unique enabled action.

    Raises AmbiguityError when some process has two or more enabled actions.
    """
    out = {}
    for p in range(topo.node_count):
        labels = enabled(protocol, topo, cfg, p)
        if len(labels) > 1:
            raise AmbiguityError(f"process {p} has several enabled actions: {sorted(labels)}")
        if labels:
            out[p] = next(iter(labels))
    return out


def is_terminal(protocol: ProtocolDef, topo: Topology, cfg: Configuration) -> bool:
    return not any(enabled(protocol, topo, cfg, p) for p in range(topo.node_count))


def activation_key(act: Mapping[int, str]) -> tuple:
    return tuple(sorted(act.items()))


def apply(protocol: ProtocolDef, topo: Topology, cfg: Configuration,
          act: Mapping[int, str], rnd=None) -> Configuration:
    """Execute an activation atomically.

    Every activated statement reads the original ``cfg``; processes
    outside the activation keep their state.
    """
    if not act:
        raise ContractViolation("activation is empty")
    if isinstance(act, (tuple, list)):
        act = dict(act)
    for p, label in act.items():
        if not protocol.guard(topo, cfg, p, label):
            raise ContractViolation(f"guard of {label} is false at process {p}")
    return _apply_unchecked(protocol, topo, cfg, act, rnd)


def _apply_unchecked(protocol, topo, cfg, act, rnd):
    new = list(cfg)
    for p in sorted(act):
        new[p] = protocol.statement(topo, cfg, p, act[p], rnd)
    return tuple(new)


def _subsets(procs: Sequence[int], scheduler_class: str) -> Iterator[tuple[int, ...]]:
    if scheduler_class == "central":
        for p in procs:
            yield (p,)
    elif scheduler_class == "synchronous":
        if procs:
            yield tuple(procs)
    elif scheduler_class == "distributed":
        if len(procs) > MAX_ENABLED:
            raise ResourceLimit(f"{len(procs)} enabled processes exceed the cap of {MAX_ENABLED}")
        for k in range(1, len(procs) + 1):
            yield from itertools.combinations(procs, k)
    else:
        raise InvalidInput(f"unknown scheduler class {scheduler_class!r}")


def transitions(protocol: ProtocolDef, topo: Topology, cfg: Configuration,
                scheduler_class: str) -> list[tuple[tuple, Configuration]]:
    """All ``(activation_key, target)`` steps allowed by the scheduler class.

    For a probabilistic protocol each activation contributes one target
    per positive-probability joint outcome (the support graph).
    """
    actions = enabled_actions(protocol, topo, cfg)
    procs = sorted(actions)
    # statements read only cfg, so each process's outcomes are computed once
    results = {
        p: tuple(s for prob, s in protocol.outcomes(topo, cfg, p, actions[p]) if prob > 0)
        for p in procs
    }
    out = []
    for subset in _subsets(procs, scheduler_class):
        key = tuple((p, actions[p]) for p in subset)
        for combo in itertools.product(*(results[p] for p in subset)):
            new = list(cfg)
            for p, s in zip(subset, combo):
                new[p] = s
            out.append((key, tuple(new)))
    return out


def successors(protocol: ProtocolDef, topo: Topology, cfg: Configuration,
               scheduler_class: str) -> frozenset:
    return frozenset(target for _, target in transitions(protocol, topo, cfg, scheduler_class))


def domains(protocol: ProtocolDef, topo: Topology) -> list[tuple]:
    return [tuple(protocol.domain(topo, p)) for p in range(topo.node_count)]


def configuration_count(protocol: ProtocolDef, topo: Topology) -> int:
    total = 1
    for d in domains(protocol, topo):
        total *= len(d)
    return total


def configurations(protocol: ProtocolDef, topo: Topology) -> Iterator[Configuration]:
    """Every configuration, in mixed-radix order (process 0 most significant)."""
    return itertools.product(*domains(protocol, topo))


def configuration_index(protocol: ProtocolDef, topo: Topology, cfg: Configuration) -> int:
    """Position of ``cfg`` in :func:`configurations` order."""
    idx = 0
    for d, s in zip(domains(protocol, topo), cfg):
        idx = idx * len(d) + d.index(s)
    return idx


def validate(protocol: ProtocolDef, topo: Topology, cfg: Configuration) -> None:
    if len(cfg) != topo.node_count:
        raise InvalidInput(f"configuration has {len(cfg)} states for {topo.node_count} processes")
    for p, (d, s) in enumerate(zip(domains(protocol, topo), cfg)):
        if s not in d:
            raise InvalidInput(f"state {s!r} of process {p} is outside its domain")
