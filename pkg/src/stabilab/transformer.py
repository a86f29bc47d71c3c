"""Coin-toss transformer: wrap every action of a deterministic protocol so
that an activated process first tosses a coin into a fresh boolean and
executes the original statement only when the toss is true.

Transformed local states are pairs ``(base, coin)``.  Guards read the
base states only, so the transformed protocol has the same enabled sets.
"""
from __future__ import annotations

from typing import Callable

from .core import Configuration, LocalView, ProtocolDef, configurations, enabled
from .errors import InvalidInput
from .topology import Topology

DEFAULT_BIAS = 0.5


def _base(state):
    return state[0]


def transform(protocol: ProtocolDef, bias: float = DEFAULT_BIAS) -> ProtocolDef:
    if protocol.is_probabilistic:
        raise InvalidInput(f"{protocol.name} is already probabilistic")
    if not 0.0 < bias < 1.0:
        raise InvalidInput(f"coin bias must lie strictly between 0 and 1, got {bias}")

    def guard(view: LocalView, label: str) -> bool:
        return protocol.local_guard(view.project(_base), label)

    def statement(view: LocalView, label: str, rng) -> tuple:
        toss = bool(rng.random() < bias)
        if toss:
            return (protocol.local_statement(view.project(_base), label, None), True)
        return (view.state[0], False)

    def outcomes(view: LocalView, label: str) -> tuple:
        won = protocol.local_statement(view.project(_base), label, None)
        return ((bias, (won, True)), (1.0 - bias, (view.state[0], False)))

    def domain(topo: Topology, p: int) -> tuple:
        return tuple((s, b) for s in protocol.domain(topo, p) for b in (False, True))

    def relabel(state, ports):
        return (protocol.relabel(state[0], ports), state[1])

    return ProtocolDef(
        name=f"trans({protocol.name})",
        labels=protocol.labels,
        local_guard=guard,
        local_statement=statement,
        domain=domain,
        is_probabilistic=True,
        local_outcomes=outcomes,
        relabel_state=relabel,
        meta={"base": protocol, "bias": bias},
    )


def project(cfg: Configuration) -> Configuration:
    """Erase the coin variables."""
    return tuple(s[0] for s in cfg)


def lift(cfg: Configuration, coins=None) -> Configuration:
    if coins is None:
        coins = (False,) * len(cfg)
    return tuple(zip(cfg, coins))


def lift_predicate(legit: Callable[[Configuration], bool]) -> Callable[[Configuration], bool]:
    """Legitimate set of the transformed system: base projection is legitimate."""
    return lambda cfg: legit(project(cfg))


def lift_observable(observable: Callable) -> Callable:
    """Lift a step observable; steps where every process lost its toss are stutters."""

    def lifted(src, act, dst) -> bool:
        s, d = project(src), project(dst)
        if s == d:
            return True
        return observable(s, act, d)

    return lifted


def guard_preservation_violations(base: ProtocolDef, topo: Topology, limit: int = 32) -> tuple[int, list]:
    """Compare enabled sets of ``transform(base)`` and ``base`` on every transformed configuration.

    Returns ``(violation_count, first_violations)``.
    """
    trans = transform(base)
    count, first = 0, []
    for cfg in configurations(trans, topo):
        b = project(cfg)
        for p in range(topo.node_count):
            if enabled(trans, topo, cfg, p) != enabled(base, topo, b, p):
                count += 1
                if len(first) < limit:
                    first.append((cfg, p))
    return count, first
