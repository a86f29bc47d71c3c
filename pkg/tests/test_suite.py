import math

from stabilab.markov import expected_hitting_time
from stabilab.suite import BUILTIN_INSTANCES, Instance, small_instances


def test_small_instances():
    small = small_instances(64)
    assert len(small) == 15
    assert all(inst.configuration_count() <= 64 for inst in small)
    assert len(BUILTIN_INSTANCES) == 17


def test_instance_names_and_build():
    inst = Instance("two-flag", "pair", "synchronous", transformed=True, init=(False, False))
    assert inst.name == "trans(two-flag)/pair/synchronous/fixed"
    proto, topo, legit, policy, init = inst.build()
    assert init == ((False, False), (False, False))
    assert expected_hitting_time(proto, topo, policy.kind, legit, init) == 8.0


def test_registry_expectations_are_finite():
    for inst in small_instances(64):
        proto, topo, legit, policy, init = inst.build()
        assert math.isfinite(expected_hitting_time(proto, topo, policy.kind, legit, init)), inst.name


def test_excluded_instance_has_infinite_expectation():
    inst = Instance("two-flag", "pair", "randomized-central")
    proto, topo, legit, policy, init = inst.build()
    assert math.isinf(expected_hitting_time(proto, topo, policy.kind, legit, init))
