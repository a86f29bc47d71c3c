import itertools

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from stabilab.core import configurations, enabled_actions, is_terminal
from stabilab.errors import InvalidInput
from stabilab.protocols import (
    builtin, configuration_with_holders, in_lcset, is_lc, leader_protocol, min_token_distance,
    par_from_identities, par_to_identities, pred_path_length, root, smallest_non_divisor,
    token_holders, token_protocol, two_flag_protocol,
)
from stabilab.topology import build_ring, build_tree


@pytest.mark.parametrize("n,m", [(3, 2), (4, 3), (5, 2), (6, 4), (7, 2), (12, 5), (60, 7)])
def test_smallest_non_divisor(n, m):
    assert smallest_non_divisor(n) == m


def test_token_holders_example(ring6):
    assert token_holders((0, 1, 2, 3, 0, 1), ring6) == {0}
    assert in_lcset((0, 1, 2, 3, 0, 1), ring6)


def test_two_token_configuration(ring6):
    cfg = configuration_with_holders(ring6, [0, 3])
    assert cfg == (0, 1, 2, 0, 1, 2)
    assert token_holders(cfg, ring6) == {0, 3}
    assert min_token_distance(cfg, ring6) == 3
    with pytest.raises(InvalidInput):
        min_token_distance((0, 1, 2, 3, 0, 1), ring6)


def test_pred_path_length(ring6):
    assert pred_path_length(ring6, 0, 3) == 3
    assert pred_path_length(ring6, 3, 0) == 3
    assert pred_path_length(ring6, 1, 0) == 5
    assert pred_path_length(ring6, 0, 1) == 1


@pytest.mark.parametrize("n", [3, 4, 5, 6, 7])
def test_never_zero_tokens(n):
    topo = build_ring(n)
    proto = token_protocol(topo)
    assert all(token_holders(c, topo) for c in configurations(proto, topo))


def test_leader_actions_on_pair(pair):
    proto = leader_protocol(pair)
    assert enabled_actions(proto, pair, (None, None)) == {0: "A3", 1: "A3"}
    assert enabled_actions(proto, pair, (0, 0)) == {0: "A1", 1: "A1"}
    assert is_terminal(proto, pair, (None, 0))
    assert is_lc((None, 0), pair) and not is_lc((0, 0), pair)


def test_root_follows_pointers(chain4):
    cfg = par_from_identities(chain4, [-1, 0, 1, 2])
    assert [root(chain4, cfg, q) for q in range(4)] == [0, 0, 0, 0]
    assert is_lc(cfg, chain4)
    # 1 and 2 point at each other: roots stop at the mutual pair
    cfg = par_from_identities(chain4, [1, 2, 1, 2])
    assert root(chain4, cfg, 0) == 1 and root(chain4, cfg, 3) == 2
    assert par_to_identities(chain4, cfg) == [1, 2, 1, 2]


def test_par_from_identities_rejects_non_neighbour(chain4):
    with pytest.raises(InvalidInput):
        par_from_identities(chain4, [3, 0, 1, 2])


def _lc_oracle(edges, n, parent):
    """Independent leader check with networkx: one rootless process, every other
    parent pointer on the tree path toward it."""
    leaders = [p for p in range(n) if parent[p] == -1]
    if len(leaders) != 1:
        return False
    g = nx.Graph(edges)
    toward = nx.shortest_path(g, target=leaders[0])
    return all(parent[q] == toward[q][1] for q in range(n) if q != leaders[0])


def _trees(max_n):
    for n in range(2, max_n + 1):
        for g in nx.nonisomorphic_trees(n):
            yield sorted(g.edges())


@pytest.mark.parametrize("edges", list(_trees(7)), ids=lambda e: f"n{len(e) + 1}:{e}")
def test_terminal_iff_lc_on_all_small_trees(edges):
    topo = build_tree(edges)
    proto = leader_protocol(topo)
    n = topo.node_count
    for cfg in configurations(proto, topo):
        term = is_terminal(proto, topo, cfg)
        lc = is_lc(cfg, topo)
        assert term == lc, cfg
        assert lc == _lc_oracle(edges, n, par_to_identities(topo, cfg))


def test_two_flag_actions(pair):
    proto = two_flag_protocol()
    assert enabled_actions(proto, pair, (False, False)) == {0: "A1", 1: "A1"}
    assert enabled_actions(proto, pair, (True, False)) == {0: "A2"}
    assert enabled_actions(proto, pair, (True, True)) == {}


def test_builtin_registry(ring6, pair):
    proto, legit, obs = builtin("token", ring6)
    assert proto.name == "token" and legit((0, 1, 2, 3, 0, 1))
    with pytest.raises(InvalidInput):
        builtin("two-flag", ring6)
    with pytest.raises(InvalidInput):
        builtin("mutex", ring6)
    with pytest.raises(InvalidInput):
        leader_protocol(ring6)


@settings(max_examples=50, deadline=None)
@given(st.integers(3, 9), st.data())
def test_single_token_moves_to_successor(n, data):
    topo = build_ring(n)
    proto, legit, observable = builtin("token", topo)
    m = proto.meta["modulus"]
    start = data.draw(st.integers(0, m - 1))
    holder = data.draw(st.integers(0, n - 1))
    # build a one-token configuration rooted at `holder`
    cfg = [0] * n
    for k in range(n):
        cfg[(holder + k) % n] = (start + k) % m
    cfg = tuple(cfg)
    if not legit(cfg):
        return
    (p,) = token_holders(cfg, topo)
    acts = enabled_actions(proto, topo, cfg)
    assert list(acts) == [p]
    nxt = list(cfg)
    nxt[p] = (cfg[topo.pred[p]] + 1) % m
    assert observable(cfg, acts, tuple(nxt))
    assert token_holders(tuple(nxt), topo) == {topo.successor(p)}


def test_all_tokens_distance_bound():
    for n in (4, 5, 6):
        topo = build_ring(n)
        proto = token_protocol(topo)
        for cfg in itertools.islice(configurations(proto, topo), 500):
            if len(token_holders(cfg, topo)) >= 2:
                assert 1 <= min_token_distance(cfg, topo) <= n // 2
