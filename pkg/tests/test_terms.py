from math import log

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lolog import Graph, OrderSpec, make_term, sample_order
from lolog.ordering import EdgeOrder
from lolog.terms import apply_edge, change_stats, full_stats

from conftest import graph, random_graph

ORDER_FREE = [
    make_term("edges"), make_term("triangles"), make_term("two-stars"),
    make_term("degree", k=0), make_term("degree", k=1), make_term("degree", k=3),
    make_term("nodecov-main", attr="x"), make_term("nodecov-prod", attr="x"),
    make_term("nodematch", attr="grp"), make_term("nodemix", attr="grp", levels=("a", "b")),
]


def _with_attrs(g, seed=0):
    rng = np.random.default_rng(seed)
    g.attrs["x"] = rng.normal(size=g.n)
    g.attrs["grp"] = np.array(["a", "b", "c"])[np.arange(g.n) % 3]
    return g


def test_edges_change_is_one(triangle):
    assert change_stats([make_term("edges")], Graph(3), None, (0, 1))[0] == 1.0


def test_triangle_closed_by_path(path3):
    assert change_stats([make_term("triangles")], path3, None, (0, 2))[0] == 1.0


def test_two_stars_change_on_star():
    g = graph(3, [(0, 1), (0, 2)])
    assert change_stats([make_term("two-stars")], g, None, (1, 2))[0] == 2.0
    # brute force: 1 two-star before, 3 after
    after = graph(3, [(0, 1), (0, 2), (1, 2)])
    assert make_term("two-stars").value(after) - make_term("two-stars").value(g) == 2.0


def _pa_state():
    g = graph(4, [(0, 1), (0, 2)])  # degrees (2, 1, 1) among the entered vertices
    return g, np.array([1, 2, 3, 4])


def test_pref_attach_example():
    g, pos = _pa_state()
    pa = make_term("pref-attach", k=1.0)
    assert change_stats([pa], g, pos, (3, 0))[0] == pytest.approx(log(3 / 7))


def test_pref_attach_against_recomputed_degrees():
    g, pos = _pa_state()
    pa = make_term("pref-attach", k=1.0)
    act = 3
    prior = [v for v in range(4) if pos[v] < pos[act]]
    for alter in prior:
        denom = sum(1 + g.degree(v) for v in prior)
        assert pa.change(g, pos, alter, act) == pytest.approx(log((1 + g.degree(alter)) / denom))


@pytest.mark.parametrize("term,dyad", [("edges", (0, 1)), ("triangles", (0, 2)), ("two-stars", (1, 2))])
def test_apply_edge_mirrors_change(term, dyad):
    g = graph(3, [(0, 1), (1, 2)] if term == "triangles" else [(0, 2)])
    t = [make_term(term)]
    before = change_stats(t, g, None, dyad)
    assert np.array_equal(apply_edge(t, g, None, dyad), before)
    assert g.has_edge(*dyad)


def test_apply_edge_mirrors_pref_attach():
    g, pos = _pa_state()
    t = [make_term("pref-attach")]
    before = change_stats(t, g, pos, (3, 0))
    assert np.array_equal(apply_edge(t, g, pos, (3, 0)), before)


def test_full_stats_edges_115():
    rng = np.random.default_rng(3)
    n = 36
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    chosen = rng.choice(len(pairs), 115, replace=False)
    g = Graph.from_edges(n, [pairs[k] for k in chosen])
    order = sample_order(OrderSpec.uniform(), g, rng)
    assert full_stats([make_term("edges")], g, order)[0] == 115.0


def test_full_stats_empty_triangles():
    g = Graph(5)
    order = sample_order(OrderSpec.uniform(), g, np.random.default_rng(0))
    assert full_stats([make_term("triangles")], g, order)[0] == 0.0


def test_full_stats_order_length_mismatch():
    g = Graph(4)
    order = sample_order(OrderSpec.uniform(), (3, False), np.random.default_rng(0))
    with pytest.raises(ValueError):
        full_stats([make_term("edges")], g, order)


def _scratch(g):
    # accumulated changes start from the empty graph, where degree0 is already n
    return np.array([t.value(g) - t.value(g.empty_like()) for t in ORDER_FREE])


@pytest.mark.parametrize("seed", range(3))
def test_order_independence_n8(seed):
    g = _with_attrs(random_graph(8, 0.4, seed), seed)
    rng = np.random.default_rng(100 + seed)
    vals = [full_stats(ORDER_FREE, g, sample_order(OrderSpec.uniform(), g, rng)) for _ in range(10)]
    for v in vals[1:]:
        assert np.allclose(v, vals[0], atol=1e-10)
    assert np.allclose(vals[0], _scratch(g), atol=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_incremental_matches_scratch_n6(seed):
    g = _with_attrs(random_graph(6, 0.5, seed), seed)
    rng = np.random.default_rng(seed)
    order = sample_order(OrderSpec.uniform(), g, rng)
    work = g.empty_like()
    running = np.zeros(len(ORDER_FREE))
    for i, j in order.sequence.tolist():
        running += apply_edge(ORDER_FREE, work, None, (i, j))
        assert np.allclose(running, _scratch(work), atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), p=st.floats(0.1, 0.9), n=st.integers(3, 9))
def test_telescoping_with_order_terms(seed, p, n):
    g = random_graph(n, p, seed)
    terms = [make_term("edges"), make_term("log-order"), make_term("pref-attach", k=0.5),
             make_term("shared-nbrs"), make_term("triangles")]
    rng = np.random.default_rng(seed)
    order = sample_order(OrderSpec.vertex_entry(), g, rng)
    pos = order.entry_times
    work = g.empty_like()
    running = np.zeros(len(terms))
    for i, j in order.sequence.tolist():
        if g.has_edge(i, j):
            c = change_stats(terms, work, pos, (i, j))
            sn_zero = min(work.degree(i), work.degree(j)) == 0
            assert c[2] <= 1e-12
            if sn_zero:
                assert c[3] == 0.0
            running += apply_edge(terms, work, pos, (i, j))
    assert np.array_equal(running, full_stats(terms, g, order))
    # log-order is determined by the entry sequence alone
    assert full_stats(terms, g, order)[1] == pytest.approx(terms[1].value(g, pos))


def test_shared_nbrs_zero_degree():
    g = graph(4, [(0, 1)])
    sn = make_term("shared-nbrs")
    assert sn.change(g, None, 0, 2) == 0.0
    g.set_edge(1, 2, 1)
    assert sn.change(g, None, 0, 2) == pytest.approx(log(2.0))


def test_log_order_first_vertex_zero():
    pos = np.array([1, 2, 3])
    lo = make_term("log-order")
    assert lo.change(Graph(3), pos, 0, 1) == pytest.approx(log(2))
    with pytest.raises(ValueError):
        lo.change(Graph(3), None, 0, 1)


@pytest.mark.parametrize("kind,params", [("degree", {"k": -1}), ("degree", {"k": 1.5}),
                                          ("pref-attach", {"k": 0}), ("nodemix", {"attr": "g", "levels": ("a",)})])
def test_bad_parameters(kind, params):
    with pytest.raises(ValueError):
        make_term(kind, **params)


def test_missing_attribute():
    with pytest.raises(KeyError, match="officee"):
        make_term("nodematch", attr="officee").validate(Graph(3))


def test_categorical_nodecov_rejected():
    g = Graph(3, attrs={"c": np.array(["a", "b", "c"])})
    with pytest.raises(ValueError):
        make_term("nodecov-main", attr="c").validate(g)


def test_unknown_kind():
    with pytest.raises(ValueError):
        make_term("gwesp")
