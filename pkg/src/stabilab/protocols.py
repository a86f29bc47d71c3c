"""The built-in protocols and their observational predicates.

* token circulation on an oriented anonymous ring (counter modulo the
  smallest non-divisor of the ring size),
* leader election on anonymous trees with a parent pointer ``par``
  stored as a local index (``None`` encodes "no parent", i.e. leader),
* the two-process flag protocol that only converges through a
  simultaneous step.
"""
from __future__ import annotations

import itertools
from typing import Callable

from .core import Configuration, LocalView, ProtocolDef
from .errors import InvalidInput
from .topology import Topology, build_tree

BOTTOM = None


def smallest_non_divisor(n: int) -> int:
    if n < 2:
        raise InvalidInput(f"smallest_non_divisor needs n >= 2, got {n}")
    m = 2
    while n % m == 0:
        m += 1
    return m


# -- token circulation ------------------------------------------------------

def token_protocol(topo: Topology) -> ProtocolDef:
    if topo.pred is None:
        raise InvalidInput("token circulation needs an oriented ring")
    m = smallest_non_divisor(topo.node_count)

    def guard(view: LocalView, label: str) -> bool:
        return view.state != (view.neighbors[view.pred] + 1) % m

    def statement(view: LocalView, label: str, rng=None) -> int:
        return (view.neighbors[view.pred] + 1) % m

    return ProtocolDef(
        name="token",
        labels=("A",),
        local_guard=guard,
        local_statement=statement,
        domain=lambda t, p: tuple(range(m)),
        meta={"modulus": m},
    )


def _token_guard(topo: Topology, cfg: Configuration, p: int) -> bool:
    m = smallest_non_divisor(topo.node_count)
    return cfg[p] != (cfg[topo.pred[p]] + 1) % m


def token_holders(cfg: Configuration, topo: Topology) -> frozenset:
    return frozenset(p for p in range(topo.node_count) if _token_guard(topo, cfg, p))


def pred_path_length(topo: Topology, p: int, q: int) -> int:
    """Length of the successor-following path from ``p`` to ``q``."""
    n, k = 0, p
    while k != q:
        k = topo.successor(k)
        n += 1
    return n


def min_token_distance(cfg: Configuration, topo: Topology) -> int:
    holders = sorted(token_holders(cfg, topo))
    if len(holders) < 2:
        raise InvalidInput("min_token_distance needs at least two token holders")
    return min(pred_path_length(topo, p, q) for p in holders for q in holders if p != q)


def in_lcset(cfg: Configuration, topo: Topology) -> bool:
    return len(token_holders(cfg, topo)) == 1


def token_advances(topo: Topology) -> Callable:
    """Step observable: a single holder hands the token to its successor."""

    def observable(src, act, dst) -> bool:
        before, after = token_holders(src, topo), token_holders(dst, topo)
        if len(before) != 1 or len(after) != 1:
            return False
        return next(iter(after)) == topo.successor(next(iter(before)))

    return observable


def configuration_with_holders(topo: Topology, holders) -> Configuration:
    """First configuration (in enumeration order) whose token holders are exactly ``holders``."""
    m = smallest_non_divisor(topo.node_count)
    want = frozenset(holders)
    for cfg in itertools.product(range(m), repeat=topo.node_count):
        if token_holders(cfg, topo) == want:
            return cfg
    raise InvalidInput(f"no configuration has token holders exactly {sorted(want)}")


# -- leader election --------------------------------------------------------

def _children(view: LocalView) -> list[int]:
    return [i for i, (s, b) in enumerate(zip(view.neighbors, view.back)) if s == b]


def _leader_guard(view: LocalView, label: str) -> bool:
    children = _children(view)
    par = view.state
    if label == "A1":
        return par is not BOTTOM and len(children) == view.degree
    if label == "A2":
        return par is not BOTTOM and any(
            i != par and i not in children for i in range(view.degree)
        )
    if label == "A3":
        return par is BOTTOM and len(children) < view.degree
    raise InvalidInput(f"unknown leader action {label!r}")


def _leader_statement(view: LocalView, label: str, rng=None):
    if label == "A1":
        return BOTTOM
    if label == "A2":
        return (view.state + 1) % view.degree
    if label == "A3":
        children = _children(view)
        return min(i for i in range(view.degree) if i not in children)
    raise InvalidInput(f"unknown leader action {label!r}")


def _relabel_par(state, ports):
    return BOTTOM if state is BOTTOM else ports[state]


def leader_protocol(topo: Topology) -> ProtocolDef:
    if not topo.is_tree:
        raise InvalidInput("leader election needs a tree")
    return ProtocolDef(
        name="leader",
        labels=("A1", "A2", "A3"),
        local_guard=_leader_guard,
        local_statement=_leader_statement,
        domain=lambda t, p: (BOTTOM,) + tuple(range(t.degree(p))),
        relabel_state=_relabel_par,
    )


def parent_of(topo: Topology, cfg: Configuration, p: int):
    """Neighbour identity pointed to by ``par_p``, or None."""
    return None if cfg[p] is BOTTOM else topo.adjacency[p][cfg[p]]


def root(topo: Topology, cfg: Configuration, p: int) -> int:
    """Initial extremity of the maximal parent path ending at ``p``.

    Walk up parent pointers until a process with no parent or one
    that sits in a mutually-pointing pair.
    """
    cur = p
    for _ in range(topo.node_count + 1):
        par = parent_of(topo, cfg, cur)
        if par is None or parent_of(topo, cfg, par) == cur:
            return cur
        cur = par
    raise InvalidInput("parent pointers form a cycle; topology is not a tree")


def is_leader(cfg: Configuration, p: int) -> bool:
    return cfg[p] is BOTTOM


def is_lc(cfg: Configuration, topo: Topology) -> bool:
    leaders = [p for p in range(topo.node_count) if cfg[p] is BOTTOM]
    if len(leaders) != 1:
        return False
    (leader,) = leaders
    return all(root(topo, cfg, q) == leader for q in range(topo.node_count) if q != leader)


def leader_unchanged(topo: Topology) -> Callable:
    def observable(src, act, dst) -> bool:
        return [p for p, s in enumerate(src) if s is BOTTOM] == [p for p, s in enumerate(dst) if s is BOTTOM]

    return observable


def par_from_identities(topo: Topology, parents) -> Configuration:
    """Convert neighbour identities (``-1`` for none) to local-index states."""
    if len(parents) != topo.node_count:
        raise InvalidInput("par list has the wrong length")
    out = []
    for p, q in enumerate(parents):
        if q is None or q == -1:
            out.append(BOTTOM)
        elif q in topo.adjacency[p]:
            out.append(topo.adjacency[p].index(q))
        else:
            raise InvalidInput(f"process {p} cannot point to non-neighbour {q}")
    return tuple(out)


def par_to_identities(topo: Topology, cfg: Configuration) -> list[int]:
    return [-1 if s is BOTTOM else topo.adjacency[p][s] for p, s in enumerate(cfg)]


# -- two flags --------------------------------------------------------------

def _flag_guard(view: LocalView, label: str) -> bool:
    mine, other = view.state, view.neighbors[0]
    if label == "A1":
        return not mine and not other
    if label == "A2":
        return mine and not other
    raise InvalidInput(f"unknown flag action {label!r}")


def _flag_statement(view: LocalView, label: str, rng=None) -> bool:
    return label == "A1"


def two_flag_topology() -> Topology:
    return build_tree([(0, 1)])


def two_flag_protocol() -> ProtocolDef:
    return ProtocolDef(
        name="two-flag",
        labels=("A1", "A2"),
        local_guard=_flag_guard,
        local_statement=_flag_statement,
        domain=lambda t, p: (False, True),
    )


def both_flags(cfg: Configuration, topo: Topology = None) -> bool:
    return all(cfg)


# -- registry ---------------------------------------------------------------

PROTOCOL_NAMES = ("token", "leader", "two-flag")


def builtin(name: str, topo: Topology):
    """Return ``(protocol, legit, observable)`` for a named built-in protocol.

    ``legit`` and ``observable`` are closed over ``topo``.
    """
    if name == "token":
        return token_protocol(topo), (lambda c: in_lcset(c, topo)), token_advances(topo)
    if name == "leader":
        return leader_protocol(topo), (lambda c: is_lc(c, topo)), leader_unchanged(topo)
    if name == "two-flag":
        if topo.node_count != 2:
            raise InvalidInput("the two-flag protocol runs on exactly two processes")
        return two_flag_protocol(), (lambda c: all(c)), (lambda s, a, d: True)
    raise InvalidInput(f"unknown protocol {name!r}")


__all__ = [
    "BOTTOM", "smallest_non_divisor", "token_protocol", "token_holders",
    "min_token_distance", "in_lcset", "token_advances", "pred_path_length",
    "configuration_with_holders", "leader_protocol", "root", "is_lc", "is_leader",
    "leader_unchanged", "par_from_identities", "par_to_identities",
    "two_flag_protocol", "two_flag_topology", "both_flags", "builtin",
]
