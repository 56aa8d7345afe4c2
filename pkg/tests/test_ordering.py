from collections import Counter
from math import log

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lolog import EdgeOrder, OrderSpec, log_prob_order, sample_order
from lolog.graph import dyad_index, n_dyads
from lolog.ordering import enumerate_orders


def _check_order(order, spec, n, directed):
    seq = order.sequence
    assert seq.shape == (n_dyads(n, directed), 2)
    keys = {dyad_index(n, directed, int(i), int(j)) for i, j in seq}
    assert len(keys) == seq.shape[0]
    if spec.vertex_mode:
        pos = order.entry_times
        last = 0
        for t, (i, j) in enumerate(seq):
            acting = max(pos[i], pos[j])
            assert acting >= last
            last = acting
        # groups enter in their listed order
        for grp_a, grp_b in zip(spec.resolved_groups(n), spec.resolved_groups(n)[1:]):
            assert max(pos[list(grp_a)]) < min(pos[list(grp_b)])


def test_uniform_n3_permutation_frequencies():
    rng = np.random.default_rng(0)
    counts = Counter(tuple(map(tuple, sample_order(OrderSpec.uniform(), (3, False), rng).sequence.tolist()))
                     for _ in range(60_000))
    assert len(counts) == 6
    p = 1 / 6
    sigma = (60_000 * p * (1 - p)) ** 0.5
    for c in counts.values():
        assert abs(c - 60_000 * p) < 3.5 * sigma


def test_singleton_groups_fix_first_dyad():
    spec = OrderSpec.fixed_entry([2, 0, 1])
    rng = np.random.default_rng(1)
    for _ in range(50):
        seq = sample_order(spec, (3, False), rng).sequence.tolist()
        assert seq[0] == [0, 2]


@pytest.mark.parametrize("spec", [OrderSpec.uniform(), OrderSpec.vertex_entry()])
def test_two_vertices_single_dyad(spec):
    o = sample_order(spec, (2, False), np.random.default_rng(0))
    assert o.sequence.tolist() == [[0, 1]]
    assert log_prob_order(spec, o) == pytest.approx(0.0) or spec.vertex_mode


def test_log_prob_uniform():
    o = sample_order(OrderSpec.uniform(), (3, False), np.random.default_rng(0))
    assert log_prob_order(OrderSpec.uniform(), o) == pytest.approx(-log(6))
    o2 = sample_order(OrderSpec.uniform(), (2, False), np.random.default_rng(0))
    assert log_prob_order(OrderSpec.uniform(), o2) == 0.0


def test_log_prob_infeasible_vertex_entry():
    spec = OrderSpec.fixed_entry([0, 1, 2])
    bad = EdgeOrder(np.array([[1, 2], [0, 1], [0, 2]]), np.array([0, 1, 2]))
    assert log_prob_order(spec, bad) == -np.inf


@pytest.mark.parametrize("n,directed,spec", [
    (3, False, OrderSpec.uniform()),
    (4, False, OrderSpec.vertex_entry()),
    (4, False, OrderSpec.vertex_entry([[0, 1], [2, 3]])),
    (3, True, OrderSpec.vertex_entry()),
])
def test_enumerated_orders_are_normalized(n, directed, spec):
    logps = [lp for _, lp in enumerate_orders(spec, n, directed)]
    assert np.exp(logps).sum() == pytest.approx(1.0, abs=1e-12)
    for order, lp in enumerate_orders(spec, n, directed):
        assert log_prob_order(spec, order, directed) == pytest.approx(lp)


def test_groups_must_partition():
    with pytest.raises(ValueError):
        OrderSpec.vertex_entry([[0, 1], [1, 2]]).validate(3)
    with pytest.raises(ValueError):
        OrderSpec.vertex_entry([[0, 1]]).validate(3)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 9), directed=st.booleans(), seed=st.integers(0, 2**32 - 1),
       mode=st.sampled_from(["uniform", "entry", "groups"]))
def test_sampled_orders_satisfy_invariants(n, directed, seed, mode):
    if mode == "uniform":
        spec = OrderSpec.uniform()
    elif mode == "entry":
        spec = OrderSpec.vertex_entry()
    else:
        cut = max(1, n // 2)
        spec = OrderSpec.vertex_entry([list(range(cut, n)), list(range(cut))])
    o = sample_order(spec, (n, directed), np.random.default_rng(seed))
    _check_order(o, spec, n, directed)
    again = sample_order(spec, (n, directed), np.random.default_rng(seed))
    assert np.array_equal(o.sequence, again.sequence)
