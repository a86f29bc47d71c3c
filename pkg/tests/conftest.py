import pytest

from stabilab.topology import build_ring, build_tree, mirror_chain

CHAIN4_EDGES = [(0, 1), (1, 2), (2, 3)]
STAR5_EDGES = [(0, 1), (0, 2), (0, 3), (0, 4)]
TREE7_EDGES = [(0, 1), (1, 2), (2, 3), (2, 4), (4, 5), (4, 6)]

_criteria = {}


@pytest.fixture
def ring6():
    return build_ring(6)


@pytest.fixture
def chain4():
    return build_tree(CHAIN4_EDGES)


@pytest.fixture
def mchain4():
    return mirror_chain(4)


@pytest.fixture
def pair():
    return build_tree([(0, 1)])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number = marker.args[0]
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        ok = rep.passed
        prev = _criteria.get(number, True)
        _criteria[number] = prev and ok


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        status = "PASS" if _criteria[number] else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}: {status}")
