"""Binary graph state with incremental degree bookkeeping.

Vertices are dense 0-based integers. Neighbor lists are kept sorted so that
shared-neighbor counts reduce to a merge. For directed graphs the out- and
in-lists are stored separately; structural queries (shared neighbors,
degree) use the undirected projection.
"""

from __future__ import annotations

import math
from bisect import bisect_left, insort
from typing import Iterable, NamedTuple

import numpy as np
import scipy.sparse as sp


class Dyad(NamedTuple):
    tail: int
    head: int


def n_dyads(n: int, directed: bool) -> int:
    return n * (n - 1) if directed else n * (n - 1) // 2


def dyad_at(n: int, directed: bool, index: int) -> Dyad:
    """Dyad with canonical index ``index`` (row-major over tails)."""
    nd = n_dyads(n, directed)
    if not 0 <= index < nd:
        raise IndexError(f"dyad index {index} out of range [0, {nd})")
    if directed:
        i, r = divmod(index, n - 1)
        return Dyad(i, r + (r >= i))
    # row i starts at i*(2n - i - 1)/2
    i = n - 2 - int(math.floor(math.sqrt(-8 * index + 4 * n * (n - 1) - 7) / 2.0 - 0.5))
    # guard against floating point at row boundaries
    while i > 0 and i * (2 * n - i - 1) // 2 > index:
        i -= 1
    while (i + 1) * (2 * n - i - 2) // 2 <= index:
        i += 1
    j = index - i * (2 * n - i - 1) // 2 + i + 1
    return Dyad(i, j)


def dyad_index(n: int, directed: bool, tail: int, head: int) -> int:
    if tail == head:
        raise ValueError("self-loop dyad")
    if not (0 <= tail < n and 0 <= head < n):
        raise IndexError(f"dyad ({tail}, {head}) outside vertex range")
    if directed:
        return tail * (n - 1) + head - (head > tail)
    i, j = (tail, head) if tail < head else (head, tail)
    return i * (2 * n - i - 1) // 2 + j - i - 1


class Graph:
    """Simple (no loops, no multi-edges) binary graph on ``n`` vertices.

    ``attrs`` maps attribute names to length-``n`` arrays; ``labels`` holds
    the external vertex names used for ingestion and output.
    """

    def __init__(self, n: int, directed: bool = False, labels=None, attrs=None):
        if n < 1:
            raise ValueError("graph needs at least one vertex")
        self.n = int(n)
        self.directed = bool(directed)
        self._out: list[list[int]] = [[] for _ in range(self.n)]
        self._in: list[list[int]] = [[] for _ in range(self.n)] if directed else self._out
        self._deg = np.zeros(self.n, dtype=np.int64)
        self.edge_count = 0
        self.labels = list(labels) if labels is not None else [str(i) for i in range(self.n)]
        if len(self.labels) != self.n:
            raise ValueError("labels length does not match vertex count")
        self.attrs = {}
        for name, values in (attrs or {}).items():
            values = np.asarray(values)
            if values.shape != (self.n,):
                raise ValueError(f"attribute {name!r} has shape {values.shape}, expected ({self.n},)")
            self.attrs[name] = values

    @classmethod
    def from_edges(cls, n: int, edges, directed: bool = False, labels=None, attrs=None) -> "Graph":
        g = cls(n, directed, labels=labels, attrs=attrs)
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if e.size == 0:
            return g
        if np.any(e[:, 0] == e[:, 1]):
            raise ValueError("self-loops are not allowed")
        if np.any(e < 0) or np.any(e >= n):
            raise IndexError("edge endpoint outside vertex range")
        if not directed:
            e = np.sort(e, axis=1)
        e = np.unique(e, axis=0)
        g._fill(e)
        return g

    def _fill(self, e: np.ndarray) -> None:
        n = self.n
        if self.directed:
            self._out = _grouped(e[:, 0], e[:, 1], n)
            self._in = _grouped(e[:, 1], e[:, 0], n)
            self._deg = np.bincount(e.ravel(), minlength=n).astype(np.int64)
        else:
            src = np.concatenate([e[:, 0], e[:, 1]])
            dst = np.concatenate([e[:, 1], e[:, 0]])
            self._out = _grouped(src, dst, n)
            self._in = self._out
            self._deg = np.bincount(src, minlength=n).astype(np.int64)
        self.edge_count = int(e.shape[0])

    # -- basic queries -------------------------------------------------------
    @property
    def n_dyads(self) -> int:
        return n_dyads(self.n, self.directed)

    def _check(self, i: int, j: int) -> None:
        if i == j:
            raise ValueError(f"self-loop dyad ({i}, {j})")
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise IndexError(f"dyad ({i}, {j}) outside vertex range 0..{self.n - 1}")

    def has_edge(self, i: int, j: int) -> bool:
        lst = self._out[i]
        k = bisect_left(lst, j)
        return k < len(lst) and lst[k] == j

    def set_edge(self, i: int, j: int, value: int = 1) -> None:
        """Set the edge variable (i, j); idempotent."""
        self._check(i, j)
        present = self.has_edge(i, j)
        if value and not present:
            insort(self._out[i], j)
            insort(self._in[j], i)
            self._deg[i] += 1
            self._deg[j] += 1
            self.edge_count += 1
        elif not value and present:
            self._out[i].remove(j)
            self._in[j].remove(i)
            self._deg[i] -= 1
            self._deg[j] -= 1
            self.edge_count -= 1

    def degree(self, i: int) -> int:
        """Total degree (out + in for directed graphs)."""
        return int(self._deg[i])

    def degrees(self) -> np.ndarray:
        return self._deg.copy()

    def out_degree(self, i: int) -> int:
        return len(self._out[i])

    def in_degree(self, i: int) -> int:
        return len(self._in[i])

    def out_neighbors(self, i: int) -> list[int]:
        return self._out[i]

    def in_neighbors(self, i: int) -> list[int]:
        return self._in[i]

    def neighbors(self, i: int) -> list[int]:
        """Sorted neighbors of ``i`` in the undirected projection."""
        if not self.directed:
            return self._out[i]
        return sorted(set(self._out[i]).union(self._in[i]))

    def shared_neighbors(self, i: int, j: int) -> int:
        return shared_neighbors(self, i, j)

    def edges(self) -> np.ndarray:
        """(m, 2) array of edges; undirected edges have tail < head."""
        rows = [(i, j) for i in range(self.n) for j in self._out[i] if self.directed or i < j]
        return np.array(rows, dtype=np.int64).reshape(-1, 2)

    def to_sparse(self) -> sp.csr_matrix:
        """Adjacency matrix; symmetric for undirected graphs."""
        e = self.edges()
        data = np.ones(e.shape[0], dtype=np.int64)
        a = sp.csr_matrix((data, (e[:, 0], e[:, 1])), shape=(self.n, self.n))
        if not self.directed:
            a = a + a.T
        return a.tocsr()

    def projection(self) -> sp.csr_matrix:
        """0/1 adjacency of the undirected projection."""
        a = self.to_sparse()
        if self.directed:
            a = ((a + a.T) > 0).astype(np.int64)
        return a.tocsr()

    def copy(self) -> "Graph":
        return Graph.from_edges(self.n, self.edges(), self.directed, labels=self.labels, attrs=self.attrs)

    def empty_like(self) -> "Graph":
        return Graph(self.n, self.directed, labels=self.labels, attrs=self.attrs)

    def subgraph(self, vertices: Iterable[int]) -> "Graph":
        """Induced subgraph, vertices relabelled in the given order."""
        vs = np.asarray(list(vertices), dtype=np.int64)
        index = -np.ones(self.n, dtype=np.int64)
        index[vs] = np.arange(vs.size)
        e = self.edges()
        keep = (index[e[:, 0]] >= 0) & (index[e[:, 1]] >= 0)
        sub = index[e[keep]]
        labels = [self.labels[v] for v in vs]
        attrs = {k: v[vs] for k, v in self.attrs.items()}
        return Graph.from_edges(vs.size, sub, self.directed, labels=labels, attrs=attrs)

    def __repr__(self) -> str:
        kind = "directed" if self.directed else "undirected"
        return f"Graph(n={self.n}, {kind}, edges={self.edge_count})"


def _grouped(src: np.ndarray, dst: np.ndarray, n: int) -> list[list[int]]:
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    bounds = np.searchsorted(src, np.arange(n + 1))
    return [dst[bounds[v]:bounds[v + 1]].tolist() for v in range(n)]


def shared_neighbors(g: Graph, i: int, j: int) -> int:
    """Number of vertices adjacent to both ``i`` and ``j``."""
    a = g.neighbors(i)
    b = g.neighbors(j)
    if len(a) > len(b):
        a, b = b, a
    count = 0
    for v in a:
        k = bisect_left(b, v)
        if k < len(b) and b[k] == v:
            count += 1
    return count
