import numpy as np
import pytest

from lolog import Graph, ModelSpec, OrderSpec, make_term

_criteria = []


@pytest.fixture
def record():
    """Collects one pass/fail line per acceptance criterion for the run summary."""
    def add(number, ok, detail):
        _criteria.append((number, ok, detail))
        print(f"criterion {number}: {_verdict(ok)}  {detail}")
        return ok
    return add


def _verdict(ok):
    return "SKIP" if ok is None else ("PASS" if ok else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(_criteria, key=lambda c: c[0]):
        terminalreporter.write_line(f"criterion {number:>2}: {_verdict(ok)}  {detail}")


def graph(n, edges, directed=False, **attrs):
    return Graph.from_edges(n, edges, directed, attrs=attrs or None)


def model(terms, theta, n, order=None, directed=False, attrs=None):
    built = tuple(make_term(t) if isinstance(t, str) else t for t in terms)
    return ModelSpec(built, theta, order or OrderSpec.uniform(), n, directed, attrs or {})


def random_graph(n, p, seed, directed=False):
    rng = np.random.default_rng(seed)
    if directed:
        pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    else:
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    keep = rng.random(len(pairs)) < p
    return Graph.from_edges(n, [d for d, k in zip(pairs, keep) if k], directed)


@pytest.fixture
def triangle():
    return graph(3, [(0, 1), (0, 2), (1, 2)])


@pytest.fixture
def path3():
    return graph(3, [(0, 1), (1, 2)])


@pytest.fixture
def star4():
    return graph(4, [(0, 1), (0, 2), (0, 3)])


@pytest.fixture
def k4():
    return graph(4, [(a, b) for a in range(4) for b in range(a + 1, 4)])
