import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lolog import Graph, OrderSpec, make_term
from lolog.oracle import (dyad_independent_graph_probs, exact_dyad_independent_law, exact_law, graph_from_key,
                          graph_key)
from lolog.sampler import logistic

from conftest import model

MODELS = [
    (["edges", "triangles"], OrderSpec.uniform(), 3),
    (["edges", "two-stars", "log-order"], OrderSpec.vertex_entry(), 3),
    (["edges", make_term("pref-attach"), "shared-nbrs"], OrderSpec.vertex_entry(), 3),
    (["edges", make_term("pref-attach", k=2.0)], OrderSpec.vertex_entry([[0, 1], [2, 3]]), 4),
]


@pytest.mark.parametrize("terms,order,n", MODELS)
def test_theta_zero_is_uniform(terms, order, n):
    law = exact_law(model(terms, np.zeros(len(terms)), n, order))
    nd = n * (n - 1) // 2
    assert np.allclose(law.probs, 2.0 ** -nd, atol=1e-14)


@pytest.mark.parametrize("theta", [-2.0, 0.3, 4.0])
def test_two_vertices(theta):
    law = exact_law(model(["edges"], [theta], 2))
    assert law.probs[1] == pytest.approx(logistic(theta), abs=1e-14)


def test_reference_expectation_n3():
    law = exact_law(model(["edges", "triangles"], [0.5, 1.0], 3))
    # by hand: only a dyad considered last, after both others became edges, has log-odds 1.5
    p, q = logistic(0.5), logistic(1.5)
    p3 = p * p * q
    # a two-edge graph: its missing dyad is last with probability 1/3
    p2 = 3 * p * p * ((1 - q) / 3 + 2 * (1 - p) / 3)
    p1 = 3 * p * (1 - p) ** 2
    assert law.E_g[0] == pytest.approx(p1 + 2 * p2 + 3 * p3, abs=1e-12)
    assert law.E_g[1] == pytest.approx(p3, abs=1e-12)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**31), which=st.integers(0, len(MODELS) - 1))
def test_normalization_and_G_identity(seed, which):
    terms, order, n = MODELS[which]
    theta = np.random.default_rng(seed).normal(scale=1.5, size=len(terms))
    law = exact_law(model(terms, theta, n, order))
    assert law.total == pytest.approx(1.0, abs=1e-10)
    assert law.probs.sum() == pytest.approx(1.0, abs=1e-10)
    assert np.all(law.probs >= 0)
    assert np.allclose(law.E_G, law.E_g, atol=1e-10)


def test_extreme_theta_no_underflow():
    law = exact_law(model(["edges", "triangles"], [-300.0, 50.0], 3))
    assert law.total == pytest.approx(1.0, abs=1e-10)
    assert law.probs[0] == pytest.approx(1.0)


def test_dyad_independent_cross_check():
    m = model(["edges", make_term("nodematch", attr="c")], [-0.4, 1.1], 3, attrs={"c": np.array(["a", "a", "b"])})
    marg = exact_dyad_independent_law(m)
    law = exact_law(m)
    assert np.allclose(law.edge_marginals(), marg, atol=1e-12)
    assert np.allclose(law.probs, dyad_independent_graph_probs(marg), atol=1e-12)


def test_edges_only_common_probability():
    marg = exact_dyad_independent_law(model(["edges"], [0.7], 6))
    assert np.allclose(marg, logistic(0.7))


def test_distinct_attributes_make_nodematch_inert():
    m = model(["edges", make_term("nodematch", attr="c")], [-0.4, 3.0], 4,
              attrs={"c": np.array(["a", "b", "c", "d"])})
    assert np.allclose(exact_dyad_independent_law(m), logistic(-0.4))
    assert np.allclose(exact_law(m).probs, exact_law(model(["edges"], [-0.4], 4)).probs, atol=1e-12)


def test_dyad_dependent_rejected():
    with pytest.raises(ValueError):
        exact_dyad_independent_law(model(["edges", "triangles"], [0, 0], 3))


def test_too_large():
    with pytest.raises(ValueError):
        exact_law(model(["edges"], [0.0], 5))


def test_keys_round_trip():
    for key in range(64):
        assert graph_key(graph_from_key(key, 4)) == key


def test_jacobian_matches_finite_difference():
    m = model(["edges", "two-stars", make_term("pref-attach")], [-0.2, 0.3, 0.5], 3, OrderSpec.vertex_entry())
    law = exact_law(m)
    h = 1e-6
    fd = np.empty((3, 3))
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        fd[:, j] = (exact_law(m, m.theta + e).E_g - exact_law(m, m.theta - e).E_g) / (2 * h)
    # J is the derivative of the residual h(y) - E[h]
    assert np.allclose(law.jacobian(), -fd, atol=1e-7)
