import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stabilab.core import _apply_unchecked, apply, configurations, enabled, enabled_actions, validate
from stabilab.errors import InvalidInput
from stabilab.protocols import builtin, leader_protocol, token_protocol, two_flag_protocol
from stabilab.schedulers import SchedulerPolicy, select
from stabilab.topology import build_ring, build_tree
from stabilab.transformer import (
    guard_preservation_violations, lift, lift_observable, lift_predicate, project, transform,
)


def test_transform_shape(pair):
    base = two_flag_protocol()
    t = transform(base, 0.25)
    assert t.name == "trans(two-flag)"
    assert t.is_probabilistic and t.meta["base"] is base and t.meta["bias"] == 0.25
    assert len(t.domain(pair, 0)) == 4
    outs = t.outcomes(pair, ((False, True), (False, False)), 0, "A1")
    assert outs == ((0.25, (True, True)), (0.75, (False, False)))


def test_transform_rejects_bad_inputs():
    with pytest.raises(InvalidInput):
        transform(two_flag_protocol(), 1.0)
    with pytest.raises(InvalidInput):
        transform(transform(two_flag_protocol()))


def test_lift_and_project():
    cfg = (1, 2, 0)
    assert project(lift(cfg)) == cfg
    assert lift(cfg, (True, False, True)) == ((1, True), (2, False), (0, True))
    legit = lift_predicate(lambda c: c == (1, 2, 0))
    assert legit(lift(cfg, (False,) * 3))


@pytest.mark.parametrize("name,topo", [
    ("token", build_ring(5)),
    ("two-flag", build_tree([(0, 1)])),
    ("leader", build_tree([(0, 1), (1, 2), (2, 3)])),
])
def test_guard_preservation(name, topo):
    base, *_ = builtin(name, topo)
    assert guard_preservation_violations(base, topo) == (0, [])


def test_lifted_observable_allows_stutter(ring6):
    _, _, obs = builtin("token", ring6)
    lifted = lift_observable(obs)
    cfg = lift((0, 1, 2, 3, 0, 1))
    lost = tuple((s, False) for s, _ in cfg)
    assert lifted(cfg, {0: "A"}, lost)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 6), st.integers(0, 2**32 - 1))
def test_projected_run_is_base_run(n, seed):
    # every transformed step projects to a base step by the coin winners, or a stutter
    topo = build_ring(n)
    base = token_protocol(topo)
    trans = transform(base)
    rng = np.random.default_rng(seed)
    cfg = lift(tuple(int(x) for x in rng.integers(0, base.meta["modulus"], n)))
    pol = SchedulerPolicy("randomized-distributed")
    for _ in range(30):
        actions = enabled_actions(trans, topo, cfg)
        assert actions == enabled_actions(base, topo, project(cfg))
        chosen = select(pol, actions, rng)
        nxt = _apply_unchecked(trans, topo, cfg, {p: actions[p] for p in chosen}, rng)
        validate(trans, topo, nxt)
        winners = {p for p in chosen if nxt[p][1]}
        for p in set(range(n)) - set(chosen):
            assert nxt[p] == cfg[p]
        if winners:
            expect = apply(base, topo, project(cfg), {p: actions[p] for p in winners})
        else:
            expect = project(cfg)
        assert project(nxt) == expect
        cfg = nxt


def test_coin_frequency_matches_bias():
    topo = build_tree([(0, 1)])
    trans = transform(two_flag_protocol(), 0.3)
    rng = np.random.default_rng(5)
    cfg = lift((False, False))
    draws = 20_000
    wins = sum(trans.statement(topo, cfg, 0, "A1", rng)[1] for _ in range(draws))
    sigma = (draws * 0.3 * 0.7) ** 0.5
    assert abs(wins - 0.3 * draws) < 3 * sigma


def test_leader_relabel_through_transform(mchain4):
    t = transform(leader_protocol(mchain4))
    assert t.relabel((0, True), [1, 0]) == (1, True)
    assert t.relabel((None, False), [1, 0]) == (None, False)
    for cfg in list(configurations(t, mchain4))[:50]:
        for p in range(4):
            assert enabled(t, mchain4, cfg, p) == enabled(leader_protocol(mchain4), mchain4, project(cfg), p)
