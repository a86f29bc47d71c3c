r"""Exact absorbing-chain hitting times for memoryless schedulers.

The chain's transition probabilities are built by enumerating the
scheduler's subset distribution and every joint statement outcome, and
the expected hitting times of the legitimate set ``L`` solve

    h[i] = 0                          i in L
    h[i] = 1 + \sum_j P[i, j] h[j]    otherwise

States from which ``L`` is not reached with probability 1 get ``inf``.
This module never samples; it is the oracle for the Monte Carlo engine.
"""
from __future__ import annotations

import itertools
from collections import deque
from typing import Callable

import numpy as np

from .core import ProtocolDef, configurations, enabled_actions
from .errors import InvalidInput
from .topology import Topology

MEMORYLESS = ("synchronous", "distributed-full", "randomized-central", "randomized-distributed")


def subset_distribution(kind: str, procs: list[int]) -> list[tuple[float, tuple[int, ...]]]:
    if not procs:
        return []
    if kind in ("synchronous", "distributed-full"):
        return [(1.0, tuple(procs))]
    if kind == "randomized-central":
        return [(1.0 / len(procs), (p,)) for p in procs]
    if kind == "randomized-distributed":
        subsets = [s for k in range(1, len(procs) + 1) for s in itertools.combinations(procs, k)]
        return [(1.0 / len(subsets), s) for s in subsets]
    raise InvalidInput(f"scheduler {kind!r} is not memoryless")


def transition_matrix(protocol: ProtocolDef, topo: Topology, kind: str):
    """Return ``(configs, P)`` with ``P`` a dense row-stochastic array.

    Terminal configurations get a self-loop.
    """
    configs = list(configurations(protocol, topo))
    index = {c: i for i, c in enumerate(configs)}
    P = np.zeros((len(configs), len(configs)))
    for i, cfg in enumerate(configs):
        actions = enabled_actions(protocol, topo, cfg)
        if not actions:
            P[i, i] = 1.0
            continue
        outcome = {p: protocol.outcomes(topo, cfg, p, actions[p]) for p in actions}
        for q_sub, subset in subset_distribution(kind, sorted(actions)):
            for combo in itertools.product(*(outcome[p] for p in subset)):
                prob = q_sub
                new = list(cfg)
                for p, (q, s) in zip(subset, combo):
                    prob *= q
                    new[p] = s
                if prob > 0:
                    P[i, index[tuple(new)]] += prob
    return configs, P


def hitting_times(P: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Expected steps to reach ``target`` (boolean mask) from every state."""
    n = len(P)
    target = np.asarray(target, dtype=bool)
    succ = [np.flatnonzero(P[i] > 0) for i in range(n)]
    pred = [[] for _ in range(n)]
    for i in range(n):
        for j in succ[i]:
            pred[j].append(i)

    def closure(seed, allow):
        seen = set(seed)
        queue = deque(seed)
        while queue:
            j = queue.popleft()
            for i in pred[j]:
                if i not in seen and allow(i):
                    seen.add(i)
                    queue.append(i)
        return seen

    can_reach = closure(np.flatnonzero(target).tolist(), lambda i: True)
    hopeless = [i for i in range(n) if i not in can_reach]
    # from these, some path avoiding the target leads to a hopeless state
    doomed = closure(hopeless, lambda i: not target[i])
    h = np.full(n, np.inf)
    h[target] = 0.0
    transient = [i for i in range(n) if not target[i] and i not in doomed]
    if transient:
        Q = P[np.ix_(transient, transient)]
        h[transient] = np.linalg.solve(np.eye(len(transient)) - Q, np.ones(len(transient)))
    return h


def expected_hitting_time(protocol: ProtocolDef, topo: Topology, kind: str,
                          legit: Callable, init=None) -> float:
    """Expected hitting time from ``init``, or averaged over a uniform initial configuration."""
    configs, P = transition_matrix(protocol, topo, kind)
    h = hitting_times(P, np.array([bool(legit(c)) for c in configs]))
    if init is not None:
        return float(h[configs.index(tuple(init))])
    return float(h.mean())
