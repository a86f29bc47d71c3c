"""Acceptance gate: one test group per numbered criterion.

The terminal summary prints one PASS/FAIL line per criterion.
"""
import json
import math
import time

import pytest

from stabilab.analysis import (
    check_closure, check_possible_convergence, check_symmetry_closure, check_weak_stabilization,
    enumerate_system, find_synchronous_lasso, symmetric_class, token_following_run, verify_lasso,
)
from stabilab.core import configurations, is_terminal
from stabilab.montecarlo import estimate
from stabilab.protocols import builtin, configuration_with_holders, is_lc, token_holders
from stabilab.schedulers import SchedulerPolicy
from stabilab.suite import cross_check, small_instances
from stabilab.topology import build_ring, build_tree, mirror_chain
from stabilab.transformer import guard_preservation_violations, lift, lift_observable, lift_predicate, transform

from conftest import CHAIN4_EDGES, STAR5_EDGES, TREE7_EDGES

RINGS = (3, 4, 5, 6, 7)
TREES = {"pair": [(0, 1)], "chain4": CHAIN4_EDGES, "star5": STAR5_EDGES, "tree7": TREE7_EDGES}
# fixed before any cross-check was run under this seeding scheme
MASTER_SEED = 7
CROSS_CHECK_TRIALS = 10_000


def _token_report():
    out = {}
    for n in RINGS:
        topo = build_ring(n)
        proto, legit, obs = builtin("token", topo)
        out[n] = (topo, proto, check_weak_stabilization(proto, topo, legit, obs))
    return out


@pytest.fixture(scope="module")
def token_rings():
    start = time.perf_counter()
    report = _token_report()
    return report, time.perf_counter() - start


@pytest.mark.criterion(1)
@pytest.mark.parametrize("n", RINGS)
def test_c1_token_weak_stabilization(token_rings, n):
    report, _ = token_rings
    _, _, ws = report[n]
    assert ws["possible_convergence"].verdict and ws["possible_convergence"].stuck_count == 0
    assert ws["closure"].verdict
    assert ws["weak_stabilizing"]


@pytest.mark.criterion(1)
def test_c1_runtime(token_rings):
    _, elapsed = token_rings
    assert elapsed < 10.0


@pytest.mark.criterion(2)
@pytest.mark.parametrize("n", RINGS)
def test_c2_never_zero_tokens(n):
    topo = build_ring(n)
    proto, _, _ = builtin("token", topo)
    violations = sum(1 for c in configurations(proto, topo) if not token_holders(c, topo))
    assert violations == 0


@pytest.mark.criterion(3)
def test_c3_terminal_iff_lc():
    start = time.perf_counter()
    violations = 0
    for edges in TREES.values():
        topo = build_tree(edges)
        proto, _, _ = builtin("leader", topo)
        violations += sum(is_terminal(proto, topo, c) != is_lc(c, topo)
                          for c in configurations(proto, topo))
    assert violations == 0
    assert time.perf_counter() - start < 5.0


@pytest.mark.criterion(4)
@pytest.mark.parametrize("name", list(TREES))
def test_c4_leader_possible_convergence(name):
    topo = build_tree(TREES[name])
    proto, legit, _ = builtin("leader", topo)
    rep = check_possible_convergence(enumerate_system(proto, topo, "distributed"), legit)
    assert rep.verdict and rep.stuck_count == 0


@pytest.mark.criterion(5)
def test_c5a_leader_pair_synchronous_lasso():
    topo = build_tree([(0, 1)])
    proto, legit, _ = builtin("leader", topo)
    lasso = find_synchronous_lasso(proto, topo, legit)
    assert lasso is not None
    assert [s.source for s in lasso.cycle] == [(None, None), (0, 0)]
    assert verify_lasso(lasso, proto, topo, legit, "strong").verdict


@pytest.mark.criterion(5)
def test_c5b_two_token_schedule():
    topo = build_ring(6)
    proto, legit, _ = builtin("token", topo)
    init = configuration_with_holders(topo, [0, 3])
    assert token_holders(init, topo) == {0, 3}
    lasso = token_following_run(proto, topo, init, [0, 3])
    strong = verify_lasso(lasso, proto, topo, legit, "strong")
    assert strong.verdict
    assert strong.details["avoids_legitimate"]
    gouda = verify_lasso(lasso, proto, topo, legit, "gouda")
    assert gouda.details["fairness"]["gouda"] is False
    assert not gouda.verdict


@pytest.mark.criterion(6)
def test_c6_symmetry_closure():
    topo = mirror_chain(4)
    proto, _, _ = builtin("leader", topo)
    assert check_symmetry_closure(topo, proto)
    cls = symmetric_class(proto, topo)
    assert cls
    assert not any(is_lc(c, topo) for c in cls)


@pytest.mark.criterion(7)
@pytest.mark.parametrize("name,topo", [("token", build_ring(5)), ("two-flag", build_tree([(0, 1)]))])
def test_c7_transformer(name, topo):
    base, legit, obs = builtin(name, topo)
    assert guard_preservation_violations(base, topo)[0] == 0
    trans = transform(base)
    ts = enumerate_system(trans, topo, "distributed")
    rep = check_closure(ts, lift_predicate(legit), lift_observable(obs))
    assert rep.verdict


def _criterion8(seed, workers=1):
    pair = build_tree([(0, 1)])
    proto, legit, _ = builtin("two-flag", pair)
    flag = estimate(transform(proto), pair, SchedulerPolicy("synchronous"), "fixed",
                    lift_predicate(legit), 10_000, seed, init=lift((False, False)), workers=workers)
    ring = build_ring(6)
    proto, legit, _ = builtin("token", ring)
    token = estimate(transform(proto), ring, SchedulerPolicy("randomized-distributed"),
                     "uniform-random", lift_predicate(legit), 1_000, seed, step_cap=100_000,
                     workers=workers)
    return {"two_flag": flag.to_dict(), "token6": token.to_dict()}


def _render(obj):
    return json.dumps(obj, sort_keys=True).encode()


@pytest.fixture(scope="module")
def criterion8():
    start = time.perf_counter()
    result = _criterion8(MASTER_SEED)
    return result, time.perf_counter() - start


@pytest.fixture(scope="module")
def criterion9():
    return cross_check(small_instances(64), CROSS_CHECK_TRIALS, MASTER_SEED)


@pytest.mark.criterion(8)
def test_c8_transformed_convergence(criterion8):
    result, elapsed = criterion8
    flag, token = result["two_flag"], result["token6"]
    assert flag["convergence_rate"] == 1.0
    assert abs(flag["mean"] - 8.0) <= 0.5
    assert token["convergence_rate"] == 1.0
    assert elapsed < 60.0


@pytest.mark.criterion(9)
def test_c9_exact_chain_cross_check(criterion9):
    assert len(criterion9) == 15
    for row in criterion9:
        assert math.isfinite(row["exact"]), row["instance"]
        assert row["stats"]["convergence_rate"] == 1.0, row["instance"]
        assert abs(row["z"]) <= 3.0, row


@pytest.mark.criterion(10)
def test_c10_reproducible_reports(criterion8, criterion9):
    # rerun on several threads: reports must match byte for byte
    first = _render({"c8": criterion8[0], "c9": criterion9})
    again = _render({
        "c8": _criterion8(MASTER_SEED, workers=4),
        "c9": cross_check(small_instances(64), CROSS_CHECK_TRIALS, MASTER_SEED, workers=4),
    })
    assert first == again
