"""Model statistics expressed through their change statistics.

Every term reports ``change(graph, pos, i, j)``: the increment its statistic
receives when edge variable (i, j) is set to 1 given the current partial
graph. Declining an edge changes nothing for the built-in terms, so
``change0`` returns 0; subclasses may override it.

``pos`` is the 1-based entry position of every vertex under a vertex-entry
order (None for uniform dyad orders). The acting vertex of a dyad is the
endpoint that entered last.

Order-independent terms also implement ``value(graph, pos)``, the statistic
computed from scratch on a finished graph; these double as moment
statistics for GMM fitting.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import log, log1p
from typing import Any

import numpy as np

from .graph import Graph, shared_neighbors

# kernel codes, mirrored in _kernel.py
EDGES, TRIANGLES, TWO_STARS, DEGREE, NODECOV, NODECOV_PROD, NODEMATCH, NODEMIX, LOG_ORDER, PREF_ATTACH, SHARED_NBRS = range(11)


class Term:
    kind = ""
    order_independent = True
    # order-dependent, but determined by the final graph once the vertex entry sequence is fixed
    entry_determined = False
    dyad_independent = False
    needs_entry_order = False

    @property
    def label(self) -> str:
        return self.kind

    def change(self, graph: Graph, pos, i: int, j: int) -> float:
        raise NotImplementedError

    def change0(self, graph: Graph, pos, i: int, j: int) -> float:
        return 0.0

    def value(self, graph: Graph, pos=None) -> float:
        raise NotImplementedError(f"{self.label} has no order-free value")

    def validate(self, graph: Graph) -> None:
        pass

    def kernel_code(self, graph: Graph):
        """(kind code, param1, param2, per-vertex values) or None."""
        return None

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.label})"


class Edges(Term):
    kind = "edges"
    dyad_independent = True

    def change(self, graph, pos, i, j):
        return 1.0

    def value(self, graph, pos=None):
        return float(graph.edge_count)

    def kernel_code(self, graph):
        return EDGES, 0.0, 0.0, None


class Triangles(Term):
    kind = "triangles"

    def change(self, graph, pos, i, j):
        return float(shared_neighbors(graph, i, j))

    def value(self, graph, pos=None):
        if graph.directed:
            raise NotImplementedError("triangle count from scratch is only defined for undirected graphs")
        a = graph.to_sparse()
        return float((a @ a).multiply(a).sum() / 6)

    def kernel_code(self, graph):
        return TRIANGLES, 0.0, 0.0, None


class TwoStars(Term):
    kind = "two-stars"

    def change(self, graph, pos, i, j):
        return float(graph.degree(i) + graph.degree(j))

    def value(self, graph, pos=None):
        d = graph.degrees()
        return float(np.sum(d * (d - 1) // 2))

    def kernel_code(self, graph):
        return TWO_STARS, 0.0, 0.0, None


class Degree(Term):
    """Number of vertices whose degree equals ``k``."""

    kind = "degree"

    def __init__(self, k: int):
        if int(k) != k or k < 0:
            raise ValueError(f"degree level must be a non-negative integer, got {k}")
        self.k = int(k)

    @property
    def label(self):
        return f"degree{self.k}"

    def change(self, graph, pos, i, j):
        k = self.k
        di, dj = graph.degree(i), graph.degree(j)
        return float((di + 1 == k) + (dj + 1 == k) - (di == k) - (dj == k))

    def value(self, graph, pos=None):
        return float(np.sum(graph.degrees() == self.k))

    def kernel_code(self, graph):
        return DEGREE, float(self.k), 0.0, None


class _AttrTerm(Term):
    dyad_independent = True
    numeric = False

    def __init__(self, attr: str):
        self.attr = attr

    def values(self, graph):
        try:
            return graph.attrs[self.attr]
        except KeyError:
            raise KeyError(f"vertex attribute {self.attr!r} not found") from None

    def validate(self, graph):
        x = self.values(graph)
        if self.numeric and not np.issubdtype(x.dtype, np.number):
            raise ValueError(f"{self.kind} needs a numeric attribute, {self.attr!r} is categorical")

    def codes(self, graph) -> np.ndarray:
        _, inv = np.unique(self.values(graph), return_inverse=True)
        return inv.astype(np.float64)


class NodeCov(_AttrTerm):
    """Main effect: x_i + x_j summed over edges."""

    kind = "nodecov-main"
    numeric = True

    @property
    def label(self):
        return f"nodecov.{self.attr}"

    def change(self, graph, pos, i, j):
        x = self.values(graph)
        return float(x[i] + x[j])

    def value(self, graph, pos=None):
        e = graph.edges()
        x = self.values(graph).astype(float)
        return float(np.sum(x[e[:, 0]] + x[e[:, 1]]))

    def kernel_code(self, graph):
        return NODECOV, 0.0, 0.0, self.values(graph).astype(np.float64)


class NodeCovProd(NodeCov):
    """Product form: x_i * x_j summed over edges."""

    kind = "nodecov-prod"

    @property
    def label(self):
        return f"nodecovprod.{self.attr}"

    def change(self, graph, pos, i, j):
        x = self.values(graph)
        return float(x[i] * x[j])

    def value(self, graph, pos=None):
        e = graph.edges()
        x = self.values(graph).astype(float)
        return float(np.sum(x[e[:, 0]] * x[e[:, 1]]))

    def kernel_code(self, graph):
        return NODECOV_PROD, 0.0, 0.0, self.values(graph).astype(np.float64)


class NodeMatch(_AttrTerm):
    kind = "nodematch"

    @property
    def label(self):
        return f"nodematch.{self.attr}"

    def change(self, graph, pos, i, j):
        x = self.values(graph)
        return float(x[i] == x[j])

    def value(self, graph, pos=None):
        e = graph.edges()
        x = self.values(graph)
        return float(np.sum(x[e[:, 0]] == x[e[:, 1]]))

    def kernel_code(self, graph):
        return NODEMATCH, 0.0, 0.0, self.codes(graph)


class NodeMix(_AttrTerm):
    """Edges joining level ``levels[0]`` to level ``levels[1]`` (unordered)."""

    kind = "nodemix"

    def __init__(self, attr: str, levels):
        super().__init__(attr)
        if len(levels) != 2:
            raise ValueError("nodemix needs exactly two levels")
        self.levels = tuple(levels)

    @property
    def label(self):
        return f"nodemix.{self.attr}.{self.levels[0]}.{self.levels[1]}"

    def _level_values(self, graph):
        x = self.values(graph)
        out = []
        for lv in self.levels:
            if np.issubdtype(x.dtype, np.number):
                lv = float(lv)
                hit = np.isclose(x.astype(float), lv)
            else:
                lv = str(lv)
                hit = x.astype(str) == lv
            if not hit.any():
                raise ValueError(f"level {lv!r} does not occur in attribute {self.attr!r}")
            out.append(x[np.argmax(hit)])
        return out

    def validate(self, graph):
        super().validate(graph)
        self._level_values(graph)

    def change(self, graph, pos, i, j):
        x = self.values(graph)
        a, b = self._level_values(graph)
        return float((x[i] == a and x[j] == b) or (x[i] == b and x[j] == a))

    def value(self, graph, pos=None):
        e = graph.edges()
        x = self.values(graph)
        a, b = self._level_values(graph)
        xi, xj = x[e[:, 0]], x[e[:, 1]]
        return float(np.sum(((xi == a) & (xj == b)) | ((xi == b) & (xj == a))))

    def kernel_code(self, graph):
        x = self.values(graph)
        levels, inv = np.unique(x, return_inverse=True)
        a, b = self._level_values(graph)
        ca = float(np.flatnonzero(levels == a)[0])
        cb = float(np.flatnonzero(levels == b)[0])
        return NODEMIX, ca, cb, inv.astype(np.float64)


def _acting(pos, i, j):
    if pos is None:
        raise ValueError("term requires a vertex-entry order (no acting vertex under uniform dyad orders)")
    return (i, j) if pos[i] > pos[j] else (j, i)


class LogOrder(Term):
    """log of the entry position of the acting vertex."""

    kind = "log-order"
    order_independent = False
    entry_determined = True
    needs_entry_order = True

    def change(self, graph, pos, i, j):
        act, _ = _acting(pos, i, j)
        return log(pos[act])

    def value(self, graph, pos=None):
        # order-free only once the entry sequence is known
        if pos is None:
            raise ValueError("log-order needs entry positions")
        e = graph.edges()
        return float(np.sum(np.log(np.maximum(pos[e[:, 0]], pos[e[:, 1]]))))

    def kernel_code(self, graph):
        return LOG_ORDER, 0.0, 0.0, None


class PrefAttach(Term):
    """log((k + d_alter) / sum_j (k + d_j)) over vertices entered before the actor."""

    kind = "pref-attach"
    order_independent = False
    needs_entry_order = True

    def __init__(self, k: float = 1.0):
        if not k > 0:
            raise ValueError(f"preferential attachment offset must be positive, got {k}")
        self.k = float(k)

    @property
    def label(self):
        return "pref-attach" if self.k == 1.0 else f"pref-attach.k{self.k:g}"

    def change(self, graph, pos, i, j):
        act, alter = _acting(pos, i, j)
        # prior vertices hold every edge except those of the actor: sum = 2E - d_act
        denom = self.k * (pos[act] - 1) + 2 * graph.edge_count - graph.degree(act)
        if denom <= 0:
            raise ValueError("preferential attachment evaluated before any vertex entered")
        return log((self.k + graph.degree(alter)) / denom)

    def kernel_code(self, graph):
        return PREF_ATTACH, self.k, 0.0, None


class SharedNeighbors(Term):
    """log(1 + SN(i, j) / min(d_i, d_j)); zero when either degree is zero."""

    kind = "shared-nbrs"
    order_independent = False

    def change(self, graph, pos, i, j):
        m = min(graph.degree(i), graph.degree(j))
        if m == 0:
            return 0.0
        return log1p(shared_neighbors(graph, i, j) / m)

    def kernel_code(self, graph):
        return SHARED_NBRS, 0.0, 0.0, None


REGISTRY = {
    "edges": Edges,
    "triangles": Triangles,
    "two-stars": TwoStars,
    "degree": Degree,
    "nodecov-main": NodeCov,
    "nodecov": NodeCov,
    "nodecov-prod": NodeCovProd,
    "nodematch": NodeMatch,
    "nodemix": NodeMix,
    "log-order": LogOrder,
    "pref-attach": PrefAttach,
    "shared-nbrs": SharedNeighbors,
}


@dataclass(frozen=True)
class TermSpec:
    kind: str
    params: dict[str, Any] = field(default_factory=dict)

    def build(self) -> Term:
        try:
            cls = REGISTRY[self.kind]
        except KeyError:
            raise ValueError(f"unknown term kind {self.kind!r}") from None
        return cls(**self.params)


def make_term(kind: str, **params) -> Term:
    return TermSpec(kind, params).build()


# -- change-statistic evaluation --------------------------------------------

def change_stats(terms, graph: Graph, pos, dyad) -> np.ndarray:
    """c(1 | current graph) for every term; does not mutate ``graph``."""
    i, j = dyad
    return np.array([t.change(graph, pos, i, j) for t in terms], dtype=float)


def change_stats0(terms, graph: Graph, pos, dyad) -> np.ndarray:
    i, j = dyad
    return np.array([t.change0(graph, pos, i, j) for t in terms], dtype=float)


def apply_edge(terms, graph: Graph, pos, dyad) -> np.ndarray:
    """Set the edge and return the change it produced."""
    c = change_stats(terms, graph, pos, dyad)
    graph.set_edge(dyad[0], dyad[1], 1)
    return c


def full_stats(terms, graph: Graph, order) -> np.ndarray:
    """g(y, s): replay ``order`` from the empty graph summing realized changes."""
    seq = np.asarray(order.sequence).reshape(-1, 2)
    if seq.shape[0] != graph.n_dyads:
        raise ValueError(f"order has {seq.shape[0]} dyads, graph has {graph.n_dyads}")
    pos = order.entry_times
    work = graph.empty_like()
    total = np.zeros(len(terms))
    for i, j in seq.tolist():
        if graph.has_edge(i, j):
            total += apply_edge(terms, work, pos, (i, j))
        else:
            total += change_stats0(terms, work, pos, (i, j))
    return total
