import itertools

import pytest

from threshold_cp.graph_gen import MultiGraph

_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def acceptance_log(request):
    """criterion number -> (name, passed, detail), printed in the terminal summary."""
    return request.config.stash.setdefault(_ACCEPTANCE, {})


def pytest_terminal_summary(terminalreporter, config):
    log = config.stash.get(_ACCEPTANCE, {})
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(log):
        name, ok, detail = log[k]
        terminalreporter.write_line(f"[{k:2d}] {'PASS' if ok else 'FAIL'}  {name}  {detail}")


@pytest.fixture
def triangle():
    return MultiGraph(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def k4_pendant():
    edges = list(itertools.combinations(range(4), 2)) + [(3, 4)]
    return MultiGraph(5, edges)
