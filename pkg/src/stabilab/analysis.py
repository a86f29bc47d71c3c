"""Explicit-state analysis of guarded-action systems.

Enumerates the whole configuration space, then checks possible
convergence (backward reachability to the legitimate set), strong
closure (every step out of a legitimate configuration stays legitimate
and satisfies a step observable), and searches/verifies lassos that
witness non-convergence under a fairness assumption.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Optional

from .core import (
    ProtocolDef, _apply_unchecked, activation_key, configuration_count, configurations,
    enabled_actions, transitions,
)
from .errors import ContractViolation, InvalidInput, InvalidLasso, ResourceLimit
from .protocols import token_holders
from .schedulers import Lasso, SchedulerPolicy, check_fairness, lasso_from_run, select
from .topology import Topology

DEFAULT_EDGE_CAP = 10**7
STUCK_LIMIT = 32


def jsonable(value: Any) -> Any:
    if isinstance(value, (tuple, list)):
        return [jsonable(v) for v in value]
    if isinstance(value, (frozenset, set)):
        return sorted(jsonable(v) for v in value)
    return value


@dataclass
class TransitionSystem:
    protocol: ProtocolDef
    topo: Topology
    scheduler_class: str
    configurations: list
    index: dict
    edges: list  # edges[i] = [(activation_key, target_index), ...]

    def __len__(self):
        return len(self.configurations)

    @property
    def edge_count(self) -> int:
        return sum(len(e) for e in self.edges)

    def successors(self, i: int) -> set:
        return {j for _, j in self.edges[i]}

    def terminal(self) -> list[int]:
        return [i for i, e in enumerate(self.edges) if not e]


@dataclass
class AnalysisReport:
    check: str
    verdict: bool
    configuration_count: Optional[int] = None
    legitimate_count: Optional[int] = None
    terminal_count: Optional[int] = None
    stuck_count: int = 0
    stuck: list = field(default_factory=list)
    violation: Optional[dict] = None
    counterexample: Optional[Lasso] = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "verdict": self.verdict,
            "configuration_count": self.configuration_count,
            "legitimate_count": self.legitimate_count,
            "terminal_count": self.terminal_count,
            "stuck_count": self.stuck_count,
            "stuck": jsonable(self.stuck),
            "violation": jsonable(self.violation) if self.violation else None,
            "counterexample": self.counterexample.to_dict(jsonable) if self.counterexample else None,
            "details": jsonable(self.details) if self.details else {},
        }


def enumerate_system(protocol: ProtocolDef, topo: Topology, scheduler_class: str = "distributed",
                     edge_cap: int = DEFAULT_EDGE_CAP) -> TransitionSystem:
    """Build the complete transition system.

    Probabilistic protocols yield their support graph (every step with
    positive probability).
    """
    total = configuration_count(protocol, topo)
    if total > edge_cap:
        raise ResourceLimit(f"{total} configurations exceed the cap of {edge_cap}")
    configs = list(configurations(protocol, topo))
    index = {c: i for i, c in enumerate(configs)}
    edges, count = [], 0
    for cfg in configs:
        out = []
        seen = set()
        for key, target in transitions(protocol, topo, cfg, scheduler_class):
            j = index[target]
            if (key, j) not in seen:
                seen.add((key, j))
                out.append((key, j))
        count += len(out)
        if count > edge_cap:
            raise ResourceLimit(f"more than {edge_cap} edges (reached {count})")
        edges.append(out)
    return TransitionSystem(protocol, topo, scheduler_class, configs, index, edges)


def backward_reachable(ts: TransitionSystem, targets: Iterable[int]) -> set[int]:
    reverse = [[] for _ in ts.configurations]
    for i, out in enumerate(ts.edges):
        for _, j in out:
            reverse[j].append(i)
    reached = set(targets)
    queue = deque(reached)
    while queue:
        j = queue.popleft()
        for i in reverse[j]:
            if i not in reached:
                reached.add(i)
                queue.append(i)
    return reached


def legitimate_indices(ts: TransitionSystem, legit: Callable) -> list[int]:
    return [i for i, c in enumerate(ts.configurations) if legit(c)]


def check_possible_convergence(ts: TransitionSystem, legit: Callable) -> AnalysisReport:
    good = legitimate_indices(ts, legit)
    if not good:
        raise InvalidInput("the legitimate set is empty")
    reached = backward_reachable(ts, good)
    stuck = [i for i in range(len(ts)) if i not in reached]
    return AnalysisReport(
        check="possible_convergence",
        verdict=not stuck,
        configuration_count=len(ts),
        legitimate_count=len(good),
        terminal_count=len(ts.terminal()),
        stuck_count=len(stuck),
        stuck=[ts.configurations[i] for i in stuck[:STUCK_LIMIT]],
        details={"scheduler_class": ts.scheduler_class},
    )


def _closure_scan(steps, legit, observable) -> tuple[bool, Optional[dict], int]:
    """Scan ``(src, [(key, dst), ...])`` pairs; return (ok, first violation, #legit)."""
    legit_count = 0
    for src, out in steps:
        if not legit(src):
            continue
        legit_count += 1
        for key, dst in out:
            reason = None
            if not legit(dst):
                reason = "target not legitimate"
            elif observable is not None and not observable(src, key, dst):
                reason = "observable violated"
            if reason:
                return False, {"source": src, "activation": key, "target": dst, "reason": reason}, legit_count
    return True, None, legit_count


def check_closure(ts: TransitionSystem, legit: Callable, observable: Optional[Callable] = None) -> AnalysisReport:
    steps = (
        (c, [(k, ts.configurations[j]) for k, j in ts.edges[i]])
        for i, c in enumerate(ts.configurations)
    )
    ok, violation, count = _closure_scan(steps, legit, observable)
    if ok:
        count = len(legitimate_indices(ts, legit))
    return AnalysisReport(
        check="closure", verdict=ok, configuration_count=len(ts),
        legitimate_count=count if ok else None, violation=violation,
        details={"scheduler_class": ts.scheduler_class},
    )


def check_closure_streaming(protocol: ProtocolDef, topo: Topology, legit: Callable,
                            observable: Optional[Callable] = None,
                            scheduler_class: str = "distributed") -> AnalysisReport:
    """Closure check that only expands legitimate configurations.

    Used for spaces too large to store as a full transition system.
    """
    steps = (
        (c, transitions(protocol, topo, c, scheduler_class))
        for c in configurations(protocol, topo)
        if legit(c)
    )
    ok, violation, count = _closure_scan(steps, legit, observable)
    return AnalysisReport(
        check="closure", verdict=ok, configuration_count=configuration_count(protocol, topo),
        legitimate_count=count if ok else None, violation=violation,
        details={"scheduler_class": scheduler_class},
    )


def check_weak_stabilization(protocol: ProtocolDef, topo: Topology, legit: Callable,
                             observable: Optional[Callable] = None,
                             edge_cap: int = DEFAULT_EDGE_CAP) -> dict:
    ts = enumerate_system(protocol, topo, "distributed", edge_cap)
    conv = check_possible_convergence(ts, legit)
    clos = check_closure(ts, legit, observable)
    return {
        "possible_convergence": conv,
        "closure": clos,
        "weak_stabilizing": conv.verdict and clos.verdict,
        "system": ts,
    }


# -- lassos -----------------------------------------------------------------

def synchronous_step(protocol: ProtocolDef, topo: Topology, cfg):
    """Unique synchronous successor and its activation, or None when terminal."""
    actions = enabled_actions(protocol, topo, cfg)
    if not actions:
        return None
    return actions, _apply_unchecked(protocol, topo, cfg, actions, None)


def find_synchronous_lasso(protocol: ProtocolDef, topo: Topology, legit: Callable,
                           start=None) -> Optional[Lasso]:
    """Search synchronous orbits for one that cycles outside the legitimate set.

    With ``start`` only that orbit is followed; otherwise every
    non-legitimate configuration is tried in enumeration order.
    """
    if protocol.is_probabilistic:
        raise InvalidInput("synchronous orbits are defined for deterministic protocols only")
    starts = [tuple(start)] if start is not None else configurations(protocol, topo)
    settled = set()  # configurations known to have a converging orbit
    for s in starts:
        if s in settled or legit(s):
            continue
        states, acts, pos = [s], [], {s: 0}
        cur = s
        while True:
            nxt = synchronous_step(protocol, topo, cur)
            if nxt is None:
                break  # terminal, non-legitimate: stuck, not a lasso
            act, cur = nxt
            if legit(cur) or cur in settled:
                break
            acts.append(act)
            if cur in pos:
                return lasso_from_run(states + [cur], acts, pos[cur])
            pos[cur] = len(states)
            states.append(cur)
        settled.update(states)
    return None


def token_following_run(protocol: ProtocolDef, topo: Topology, init, order, max_steps: int = 100000):
    """Replay a schedule in which tokens move one at a time in a fixed order.

    ``order`` lists initial token positions; at step ``k`` the token that
    started at ``order[k % len(order)]`` passes itself to its successor.
    Returns a :class:`Lasso` once the (configuration, phase) pair repeats.
    """
    positions = {p: p for p in order}  # token id (initial holder) -> current holder
    cur = tuple(init)
    if token_holders(cur, topo) != frozenset(order):
        raise InvalidInput(f"initial holders {sorted(token_holders(cur, topo))} differ from {sorted(order)}")
    states, acts, seen = [cur], [], {}
    for k in range(max_steps):
        phase = k % len(order)
        key = (cur, phase, tuple(sorted(positions.items())))
        if key in seen and phase == 0:
            return lasso_from_run(states, acts, seen[key])
        seen.setdefault(key, k)
        tok = order[phase]
        holder = positions[tok]
        act = {holder: "A"}
        nxt = _apply_checked(protocol, topo, cur, act)
        positions[tok] = topo.successor(holder)
        acts.append(act)
        states.append(nxt)
        cur = nxt
    raise InvalidInput(f"no repetition within {max_steps} steps")


def scripted_lasso(protocol: ProtocolDef, topo: Topology, init, script, max_steps: int = 100000) -> Lasso:
    """Replay a scripted schedule literally until (configuration, script phase) repeats.

    Raises ScriptStall when a script entry shares no process with the enabled set.
    """
    policy = SchedulerPolicy("scripted", tuple(script))
    period = len(policy.script)
    cur = tuple(init)
    states, acts, seen = [cur], [], {}
    for k in range(max_steps):
        key = (cur, k % period)
        if key in seen:
            return lasso_from_run(states, acts, seen[key])
        seen[key] = k
        actions = enabled_actions(protocol, topo, cur)
        if not actions:
            raise InvalidInput(f"terminal configuration reached at step {k}; no infinite run")
        chosen = select(policy, actions.keys(), None, k)
        act = {p: actions[p] for p in sorted(chosen)}
        cur = _apply_unchecked(protocol, topo, cur, act, None)
        acts.append(act)
        states.append(cur)
    raise InvalidInput(f"no repetition within {max_steps} steps")


def _apply_checked(protocol, topo, cfg, act):
    for p, label in act.items():
        if not protocol.guard(topo, cfg, p, label):
            raise ContractViolation(f"guard of {label} is false at process {p}")
    return _apply_unchecked(protocol, topo, cfg, act, None)


def verify_lasso(lasso: Lasso, protocol: ProtocolDef, topo: Topology, legit: Callable,
                 kind: str = "strong") -> AnalysisReport:
    """Check that ``lasso`` is a legal, closed, non-converging, ``kind``-fair execution."""
    steps = lasso.steps
    for i, step in enumerate(steps):
        act = dict(step.activation)
        if not act:
            raise InvalidLasso(f"step {i} activates nobody", i)
        try:
            target = _apply_checked(protocol, topo, step.source, act)
        except ContractViolation as exc:
            raise InvalidLasso(f"step {i}: {exc}", i) from None
        if target != step.target:
            raise InvalidLasso(f"step {i} does not lead to its recorded target", i)
        if i + 1 < len(steps) and steps[i + 1].source != step.target:
            raise InvalidLasso(f"step {i + 1} does not start where step {i} ends", i + 1)
    if lasso.cycle[-1].target != lasso.cycle[0].source:
        raise InvalidLasso("cycle is not closed", len(steps) - 1)
    legit_in_cycle = [c for c in lasso.cycle_configurations if legit(c)]
    fairness = {k: check_fairness(lasso, k, protocol, topo) for k in ("weak", "strong", "gouda")}
    avoids = not legit_in_cycle
    return AnalysisReport(
        check="lasso",
        verdict=avoids and fairness[kind],
        counterexample=lasso,
        details={
            "fairness_kind": kind,
            "fair": fairness[kind],
            "fairness": fairness,
            "avoids_legitimate": avoids,
            "prefix_length": len(lasso.prefix),
            "cycle_length": len(lasso.cycle),
        },
    )


# -- symmetry ---------------------------------------------------------------

def chain_order(topo: Topology) -> list[int]:
    if not topo.is_tree or max(topo.degree(p) for p in range(topo.node_count)) > 2:
        raise InvalidInput("topology is not a chain")
    start = min(p for p in range(topo.node_count) if topo.degree(p) == 1)
    order, prev = [start], None
    while len(order) < topo.node_count:
        cur = order[-1]
        nxt = [q for q in topo.adjacency[cur] if q != prev]
        prev = cur
        order.append(nxt[0])
    return order


def reflection(topo: Topology) -> tuple[list[int], list[list[int]]]:
    """Mirror map of a chain and, per process, how its ports map onto the mirror's ports."""
    order = chain_order(topo)
    n = len(order)
    sigma = [0] * n
    for i, p in enumerate(order):
        sigma[p] = order[n - 1 - i]
    ports = [[topo.adjacency[sigma[p]].index(sigma[q]) for q in topo.adjacency[p]] for p in range(n)]
    return sigma, ports


def symmetric_class(protocol: ProtocolDef, topo: Topology) -> list:
    """Configurations fixed by the chain's reflection (states compared through the port map)."""
    sigma, ports = reflection(topo)
    out = []
    for cfg in configurations(protocol, topo):
        if all(cfg[sigma[p]] == protocol.relabel(cfg[p], ports[p]) for p in range(topo.node_count)):
            out.append(cfg)
    return out


def symmetry_violation(topo: Topology, protocol: ProtocolDef) -> Optional[dict]:
    cls = symmetric_class(protocol, topo)
    members = set(cls)
    for cfg in cls:
        step = synchronous_step(protocol, topo, cfg)
        if step is not None and step[1] not in members:
            return {"source": cfg, "activation": activation_key(step[0]), "target": step[1]}
    return None


def check_symmetry_closure(topo: Topology, protocol: ProtocolDef) -> bool:
    """Is the mirror-symmetric class closed under synchronous steps?"""
    return symmetry_violation(topo, protocol) is None
