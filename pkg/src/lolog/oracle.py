"""Brute-force exact law for tiny graphs (n <= 4).

Every feasible order s and every graph y are enumerated:

    p(y) = sum_s p(s) prod_t p(y_{s_t} | theta, y^{t-1}, s_{<=t})

Change statistics do not depend on theta, so the enumeration is built once
per model and can then be evaluated at many parameter values. Graphs are
identified by a bitmask over the canonical dyad indices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import log_expit, logsumexp

from .graph import Graph, dyad_at, dyad_index, n_dyads
from .ordering import enumerate_orders
from .sampler import ModelSpec, logistic
from .terms import change_stats, change_stats0

MAX_DYADS = 6


def graph_from_key(key: int, n: int, directed: bool = False, attrs=None, labels=None) -> Graph:
    nd = n_dyads(n, directed)
    edges = [tuple(dyad_at(n, directed, k)) for k in range(nd) if key >> k & 1]
    return Graph.from_edges(n, edges, directed, labels=labels, attrs=attrs)


def graph_key(graph: Graph) -> int:
    key = 0
    for i, j in graph.edges().tolist():
        key |= 1 << dyad_index(graph.n, graph.directed, i, j)
    return key


class Enumeration:
    """Theta-free enumeration of all (order, graph) pairs for a model."""

    def __init__(self, model: ModelSpec):
        n, directed = model.n, model.directed
        nd = n_dyads(n, directed)
        if nd > MAX_DYADS:
            raise ValueError(f"exact enumeration supports at most {MAX_DYADS} dyads (n <= 4 undirected), got {nd}")
        self.model = model
        self.n, self.directed, self.nd = n, directed, nd
        terms = model.terms
        p = len(terms)
        n_leaves = 1 << nd
        bits = (np.arange(n_leaves)[:, None] >> np.arange(nd)[None, :]) & 1  # bit t: y at position t
        memo: dict = {}
        log_ps, keys, c1s, c0s = [], [], [], []
        for order, logp_s in enumerate_orders(model.order, n, directed):
            pos = order.entry_times
            pos_key = None if pos is None else tuple(pos.tolist())
            canon = np.array([dyad_index(n, directed, i, j) for i, j in order.sequence.tolist()], dtype=np.int64)
            C1 = np.empty((n_leaves, nd, p))
            C0 = np.empty((n_leaves, nd, p))
            for t in range(nd):
                dyad = tuple(order.sequence[t].tolist())
                prefixes = np.arange(1 << t)
                v1 = np.empty((prefixes.size, p))
                v0 = np.empty((prefixes.size, p))
                for b in prefixes.tolist():
                    gkey = 0
                    for u in range(t):
                        if b >> u & 1:
                            gkey |= 1 << int(canon[u])
                    mkey = (gkey, dyad, pos_key)
                    if mkey not in memo:
                        g = graph_from_key(gkey, n, directed, model.attrs, model.labels)
                        memo[mkey] = (change_stats(terms, g, pos, dyad), change_stats0(terms, g, pos, dyad))
                    v1[b], v0[b] = memo[mkey]
                idx = np.arange(n_leaves) & ((1 << t) - 1)
                C1[:, t] = v1[idx]
                C0[:, t] = v0[idx]
            log_ps.append(logp_s)
            keys.append(bits @ (1 << canon))
            c1s.append(C1)
            c0s.append(C0)
        self.log_ps = np.array(log_ps)
        self.keys = np.array(keys)  # (O, L) canonical graph key per leaf
        self.bits = bits  # (L, T)
        self.C1 = np.array(c1s)  # (O, L, T, p)
        self.C0 = np.array(c0s)

    def law(self, theta) -> "ExactLaw":
        theta = np.asarray(theta, dtype=float)
        X = (self.C1 - self.C0) @ theta  # (O, L, T)
        y = self.bits[None, :, :].astype(bool)
        log_cond = np.where(y, log_expit(X), log_expit(-X)).sum(axis=2)
        prob1 = logistic(X)
        g = np.where(y[..., None], self.C1, self.C0).sum(axis=2)
        G = (prob1[..., None] * self.C1 + (1 - prob1[..., None]) * self.C0).sum(axis=2)
        log_w = self.log_ps[:, None] + log_cond
        log_total = logsumexp(log_w)
        w = np.exp(log_w)
        probs = np.bincount(self.keys.ravel(), weights=w.ravel(), minlength=1 << self.nd)
        return ExactLaw(self.model.with_theta(theta), self, w, g, G, probs, float(np.exp(log_total)))


@dataclass
class ExactLaw:
    model: ModelSpec
    enumeration: Enumeration
    leaf_weights: np.ndarray  # (O, L) p(s) p(y | s)
    leaf_g: np.ndarray  # (O, L, p)
    leaf_G: np.ndarray
    probs: np.ndarray  # p(y) indexed by canonical key
    total: float

    @property
    def n(self) -> int:
        return self.model.n

    @property
    def E_g(self) -> np.ndarray:
        return np.einsum("ol,olp->p", self.leaf_weights, self.leaf_g)

    @property
    def E_G(self) -> np.ndarray:
        return np.einsum("ol,olp->p", self.leaf_weights, self.leaf_G)

    def graph(self, key: int) -> Graph:
        return graph_from_key(key, self.model.n, self.model.directed, self.model.attrs, self.model.labels)

    def stat_table(self, stats) -> np.ndarray:
        """(2^n_d, q) values of order-independent statistics for every graph."""
        rows = []
        for key in range(self.probs.size):
            g = self.graph(key)
            rows.append([s.value(g) for s in stats])
        return np.array(rows, dtype=float).reshape(self.probs.size, len(stats))

    def expect(self, stats) -> np.ndarray:
        return self.probs @ self.stat_table(stats)

    def cov_h(self, stats) -> np.ndarray:
        H = self.stat_table(stats)
        mean = self.probs @ H
        Z = H - mean
        return (Z * self.probs[:, None]).T @ Z

    def jacobian(self, stats=None) -> np.ndarray:
        """J[k, j] = d E[h_k] / d theta_j * (-1) = -cov(h_k, g_j) + cov(h_k, G_j).

        With ``stats=None`` the moment statistics are the model statistics g
        themselves (evaluated per leaf, so order-dependent terms are allowed).
        """
        w = self.leaf_weights
        if stats is None:
            H = self.leaf_g
        else:
            table = self.stat_table(stats)
            H = table[self.enumeration.keys]
        diff = self.leaf_g - self.leaf_G
        EH = np.einsum("ol,olk->k", w, H)
        Ediff = np.einsum("ol,olj->j", w, diff)
        cross = np.einsum("ol,olk,olj->kj", w, H, diff)
        return -(cross - np.outer(EH, Ediff))

    def edge_marginals(self) -> np.ndarray:
        nd = self.probs.size.bit_length() - 1
        keys = np.arange(self.probs.size)
        return np.array([self.probs[(keys >> d) & 1 == 1].sum() for d in range(nd)])


def exact_law(model: ModelSpec, theta=None) -> ExactLaw:
    theta = model.theta if theta is None else theta
    return Enumeration(model).law(theta)


def exact_dyad_independent_law(model: ModelSpec, theta=None) -> np.ndarray:
    """Edge probability of every dyad (canonical order) for a dyad-independent model."""
    if not model.dyad_independent:
        bad = [t.label for t in model.terms if not t.dyad_independent]
        raise ValueError(f"terms {bad} are not dyad independent")
    theta = model.theta if theta is None else np.asarray(theta, dtype=float)
    empty = model.template()
    out = np.empty(empty.n_dyads)
    for k in range(empty.n_dyads):
        d = dyad_at(model.n, model.directed, k)
        c1 = change_stats(model.terms, empty, None, d)
        c0 = change_stats0(model.terms, empty, None, d)
        out[k] = logistic(float(theta @ (c1 - c0)))
    return out


def dyad_independent_graph_probs(dyad_probs: np.ndarray) -> np.ndarray:
    """Product-law probability of every graph key."""
    nd = dyad_probs.size
    keys = np.arange(1 << nd)
    bits = (keys[:, None] >> np.arange(nd)[None, :]) & 1
    return np.prod(np.where(bits == 1, dyad_probs, 1 - dyad_probs), axis=1)
