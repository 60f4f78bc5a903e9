import numpy as np
import pytest

from voterzeal.network import Network, OpinionSpace, normalize

AB = OpinionSpace(("A", "B"))


def make_net(edges, zealots, labels, space=AB, norm=True):
    """Build a network from ``(source, target, weight)`` triples.

    ``zealots`` maps zealot id -> label; ``labels`` maps user id -> label.
    """
    ids = list(zealots) + list(labels)
    idx = {s: i for i, s in enumerate(ids)}
    truth = [space.index(zealots[i]) for i in zealots] + [space.index(labels[i]) for i in labels]
    zeal = [True] * len(zealots) + [False] * len(labels)
    src = [idx[s] for s, _, _ in edges]
    dst = [idx[t] for _, t, _ in edges]
    w = [x for _, _, x in edges]
    net = Network.from_edges(space, ids, zeal, truth, src, dst, w)
    return normalize(net) if norm else net


@pytest.fixture
def toy2():
    # u1 <- {ZA 0.5, u2 0.5}; u2 <- {ZB 0.5, u1 0.5}
    return make_net(
        [("ZA", "u1", 0.5), ("u2", "u1", 0.5), ("ZB", "u2", 0.5), ("u1", "u2", 0.5)],
        {"ZA": "A", "ZB": "B"}, {"u1": "A", "u2": "B"},
    )


@pytest.fixture
def toy_chain():
    # u1 <- ZA; u2 <- {u1 0.5, ZB 0.5}
    return make_net(
        [("ZA", "u1", 1.0), ("u1", "u2", 0.5), ("ZB", "u2", 0.5)],
        {"ZA": "A", "ZB": "B"}, {"u1": "A", "u2": "B"},
    )


@pytest.fixture
def toy_ind():
    # u1 <- ZA; u2 <- {ZA 0.4, ZB 0.6}; zealot-only leaders
    return make_net(
        [("ZA", "u1", 1.0), ("ZA", "u2", 0.4), ("ZB", "u2", 0.6)],
        {"ZA": "A", "ZB": "B"}, {"u1": "A", "u2": "B"},
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=["python", "compiled"])
def backend(request):
    """Run a test once per kernel backend, restoring the default afterwards."""
    from voterzeal import _backend

    if request.param not in _backend.available():
        pytest.skip("compiled kernels not built")
    before = _backend.name()
    _backend.use(request.param)
    yield request.param
    _backend.use(before)


ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(ok, detail)`` then assert."""
    name = request.node.name

    def record(ok: bool, detail: str = ""):
        ACCEPTANCE.append((name, bool(ok), detail))
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
