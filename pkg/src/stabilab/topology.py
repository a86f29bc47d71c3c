"""Network topologies with per-process local neighbour indexing.

Process identities ``0..N-1`` exist only so the tools can enumerate and
report; protocols see neighbours through local indexes (ports).
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .errors import InvalidInput, InvalidTopology


@dataclass(frozen=True)
class Topology:
    """Undirected, connected, simple graph with ordered neighbour lists.

    ``adjacency[p][i]`` is the neighbour of ``p`` behind local index ``i``.
    ``pred`` (oriented rings only) maps each process to its predecessor.
    """

    node_count: int
    adjacency: tuple[tuple[int, ...], ...]
    pred: Optional[tuple[int, ...]] = None
    # back[p][i]: the local index under which adjacency[p][i] sees p
    back: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)
    pred_port: Optional[tuple[int, ...]] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = self.node_count
        adj = tuple(tuple(int(q) for q in nbrs) for nbrs in self.adjacency)
        object.__setattr__(self, "adjacency", adj)
        if n < 1 or len(adj) != n:
            raise InvalidTopology(f"adjacency has {len(adj)} rows for {n} nodes")
        for p, nbrs in enumerate(adj):
            if len(set(nbrs)) != len(nbrs):
                raise InvalidTopology(f"duplicate neighbour at process {p}")
            for q in nbrs:
                if q == p:
                    raise InvalidTopology(f"self-loop at process {p}")
                if not 0 <= q < n:
                    raise InvalidTopology(f"neighbour {q} of {p} out of range")
                if p not in adj[q]:
                    raise InvalidTopology(f"edge {p}-{q} is not symmetric")
        if n > 1 and not _connected(adj):
            raise InvalidTopology("graph is not connected")
        object.__setattr__(
            self, "back", tuple(tuple(adj[q].index(p) for q in adj[p]) for p in range(n))
        )

        pred_port = None
        if self.pred is not None:
            pred = tuple(int(x) for x in self.pred)
            object.__setattr__(self, "pred", pred)
            if len(pred) != n:
                raise InvalidTopology("pred map has the wrong length")
            for p in range(n):
                if pred[p] not in adj[p]:
                    raise InvalidTopology(f"Pred of {p} is not a neighbour")
                if pred[pred[p]] == p:
                    raise InvalidTopology(f"inconsistent orientation at {p}")
            seen, p = set(), 0
            while p not in seen:
                seen.add(p)
                p = pred[p]
            if len(seen) != n or p != 0:
                raise InvalidTopology("pred map is not a single Hamiltonian cycle")
            pred_port = tuple(adj[p].index(pred[p]) for p in range(n))
        object.__setattr__(self, "pred_port", pred_port)

    def degree(self, p: int) -> int:
        return len(self.adjacency[p])

    @property
    def edges(self) -> list[tuple[int, int]]:
        return sorted((p, q) for p in range(self.node_count) for q in self.adjacency[p] if p < q)

    @property
    def is_tree(self) -> bool:
        return len(self.edges) == self.node_count - 1

    @property
    def is_oriented_ring(self) -> bool:
        return self.pred is not None

    def successor(self, p: int) -> int:
        if self.pred is None:
            raise InvalidInput("topology has no ring orientation")
        return self.pred.index(p)

    def relabel(self, perm: Sequence[int]) -> "Topology":
        """Rename process ``p`` to ``perm[p]``, keeping every local port order."""
        n = self.node_count
        adj = [None] * n
        for p in range(n):
            adj[perm[p]] = tuple(perm[q] for q in self.adjacency[p])
        pred = None
        if self.pred is not None:
            pred = [0] * n
            for p in range(n):
                pred[perm[p]] = perm[self.pred[p]]
        return Topology(n, tuple(adj), None if pred is None else tuple(pred))


def _connected(adj) -> bool:
    seen = {0}
    todo = [0]
    while todo:
        p = todo.pop()
        for q in adj[p]:
            if q not in seen:
                seen.add(q)
                todo.append(q)
    return len(seen) == len(adj)


def build_ring(n: int) -> Topology:
    """Oriented ring where the predecessor of ``p_i`` is ``p_{(i-1) mod n}``."""
    if n < 3:
        raise InvalidTopology(f"a ring needs at least 3 processes, got {n}")
    adj = tuple(tuple(sorted({(i - 1) % n, (i + 1) % n})) for i in range(n))
    return Topology(n, adj, tuple((i - 1) % n for i in range(n)))


def build_tree(edge_list: Iterable[Sequence[int]]) -> Topology:
    """Tree on nodes ``0..N-1``; each neighbour list is sorted by identity."""
    edges = [tuple(int(x) for x in e) for e in edge_list]
    if not edges:
        raise InvalidTopology("a tree needs at least one edge")
    for e in edges:
        if len(e) != 2 or e[0] == e[1] or min(e) < 0:
            raise InvalidTopology(f"bad edge {e}")
    n = max(max(e) for e in edges) + 1
    nbrs = [set() for _ in range(n)]
    for a, b in edges:
        if b in nbrs[a]:
            raise InvalidTopology(f"duplicate edge {a}-{b}")
        nbrs[a].add(b)
        nbrs[b].add(a)
    if len(edges) != n - 1:
        raise InvalidTopology(f"{len(edges)} edges on {n} nodes: cycle or disconnected")
    adj = tuple(tuple(sorted(s)) for s in nbrs)
    if not _connected(adj):
        raise InvalidTopology("edge list is disconnected")
    return Topology(n, adj)


def mirror_chain(n: int) -> Topology:
    """Chain ``0-1-...-(n-1)`` whose port numbering is invariant under reflection.

    Local index 0 always points toward the nearer end of the chain, so
    the mirror map ``i -> n-1-i`` preserves ports.
    """
    if n < 2:
        raise InvalidTopology("a chain needs at least 2 processes")
    adj = []
    for i in range(n):
        nbrs = [j for j in (i - 1, i + 1) if 0 <= j < n]
        if i >= n - 1 - i:
            nbrs.reverse()
        adj.append(tuple(nbrs))
    return Topology(n, tuple(adj))


def distances_from(topo: Topology, src: int) -> list[int]:
    dist = [-1] * topo.node_count
    dist[src] = 0
    queue = deque([src])
    while queue:
        p = queue.popleft()
        for q in topo.adjacency[p]:
            if dist[q] < 0:
                dist[q] = dist[p] + 1
                queue.append(q)
    return dist


def centers(topo: Topology) -> set[int]:
    """Processes of minimal eccentricity in a tree."""
    if not topo.is_tree:
        raise InvalidInput("centers() requires a tree")
    ecc = [max(distances_from(topo, p)) for p in range(topo.node_count)]
    best = min(ecc)
    return {p for p, e in enumerate(ecc) if e == best}


def parse_edges(text: str) -> list[tuple[int, int]]:
    """Parse the inline grammar ``"a-b,c-d,..."``."""
    out = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            a, b = chunk.split("-")
            out.append((int(a), int(b)))
        except ValueError:
            raise InvalidTopology(f"cannot parse edge {chunk!r}") from None
    return out


def topology_from_document(doc: dict) -> Topology:
    """Build a topology from ``{"type": "ring", "n": 6}`` or
    ``{"type": "tree", "edges": [[0, 1], ...]}``."""
    kind = doc.get("type")
    if kind == "ring":
        return build_ring(int(doc["n"]))
    if kind == "tree":
        return build_tree(doc["edges"])
    raise InvalidTopology(f"unknown topology type {kind!r}")
