"""Distributions over the order in which edge variables are considered.

Two families are supported:

* ``uniform``: every permutation of the dyads is equally likely.
* ``vertex-entry``: vertices enter group by group (uniformly shuffled within
  a group). When the t-th vertex enters, the dyads joining it to the t-1
  vertices already present are appended in uniformly random order (both
  orientations for directed graphs, shuffled jointly).

An ``EdgeOrder`` carries the dyad sequence and, for vertex-entry orders, the
realized entry sequence; the acting vertex of a dyad is its later-entered
endpoint.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import lgamma

import numpy as np

from .graph import Graph, dyad_at, n_dyads

UNIFORM = "uniform"
VERTEX_ENTRY = "vertex-entry"


@dataclass(frozen=True)
class OrderSpec:
    mode: str = UNIFORM
    # None in vertex-entry mode means one group holding every vertex
    groups: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        if self.mode not in (UNIFORM, VERTEX_ENTRY):
            raise ValueError(f"unknown order mode {self.mode!r}")
        if self.groups is not None:
            if self.mode != VERTEX_ENTRY:
                raise ValueError("entry groups only apply to vertex-entry orders")
            object.__setattr__(self, "groups", tuple(tuple(int(v) for v in grp) for grp in self.groups))

    @classmethod
    def uniform(cls) -> "OrderSpec":
        return cls(UNIFORM)

    @classmethod
    def vertex_entry(cls, groups=None) -> "OrderSpec":
        return cls(VERTEX_ENTRY, groups)

    @classmethod
    def fixed_entry(cls, sequence) -> "OrderSpec":
        """Fully observed entry order (one singleton group per vertex)."""
        return cls(VERTEX_ENTRY, tuple((int(v),) for v in sequence))

    @property
    def vertex_mode(self) -> bool:
        return self.mode == VERTEX_ENTRY

    def resolved_groups(self, n: int) -> tuple[tuple[int, ...], ...]:
        if self.groups is None:
            return (tuple(range(n)),)
        self.validate(n)
        return self.groups

    def validate(self, n: int) -> None:
        if self.groups is None:
            return
        flat = [v for grp in self.groups for v in grp]
        if sorted(flat) != list(range(n)):
            raise ValueError("entry groups must partition the vertex set {0, ..., n-1}")
        if any(len(grp) == 0 for grp in self.groups):
            raise ValueError("entry groups must be non-empty")

    def entry_is_fixed(self, n: int) -> bool:
        return self.vertex_mode and all(len(grp) == 1 for grp in self.resolved_groups(n))

    def group_arrays(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """CSR-style (pointer, members) encoding of the entry groups."""
        if not self.vertex_mode:
            return np.zeros(1, dtype=np.int64), np.zeros(0, dtype=np.int64)
        groups = self.resolved_groups(n)
        ptr = np.zeros(len(groups) + 1, dtype=np.int64)
        ptr[1:] = np.cumsum([len(grp) for grp in groups])
        members = np.array([v for grp in groups for v in grp], dtype=np.int64)
        return ptr, members


@dataclass
class EdgeOrder:
    sequence: np.ndarray  # (n_d, 2) dyads in consideration order
    entry_sequence: np.ndarray | None = None  # vertices in entry order

    @property
    def entry_times(self) -> np.ndarray | None:
        """1-based entry position of each vertex (None for dyad orders)."""
        if self.entry_sequence is None:
            return None
        pos = np.empty(self.entry_sequence.size, dtype=np.int64)
        pos[self.entry_sequence] = np.arange(1, self.entry_sequence.size + 1)
        return pos

    def __len__(self) -> int:
        return int(self.sequence.shape[0])


def _vertex_count(g_template) -> tuple[int, bool]:
    if isinstance(g_template, Graph):
        return g_template.n, g_template.directed
    n, directed = g_template
    return int(n), bool(directed)


def sample_order(spec: OrderSpec, g_template, rng: np.random.Generator) -> EdgeOrder:
    """Draw an edge order; ``g_template`` is a Graph or an ``(n, directed)`` pair."""
    n, directed = _vertex_count(g_template)
    if spec.mode == UNIFORM:
        nd = n_dyads(n, directed)
        perm = rng.permutation(nd)
        seq = np.array([dyad_at(n, directed, int(k)) for k in perm], dtype=np.int64).reshape(-1, 2)
        return EdgeOrder(seq)

    entry = []
    for grp in spec.resolved_groups(n):
        members = np.array(grp, dtype=np.int64)
        entry.extend(rng.permutation(members).tolist())
    rows = []
    for t, v in enumerate(entry):
        prior = entry[:t]
        if directed:
            cand = [(v, a) for a in prior] + [(a, v) for a in prior]
        else:
            cand = [(min(v, a), max(v, a)) for a in prior]
        for k in rng.permutation(len(cand)):
            rows.append(cand[k])
    seq = np.array(rows, dtype=np.int64).reshape(-1, 2)
    return EdgeOrder(seq, np.array(entry, dtype=np.int64))


def log_prob_order(spec: OrderSpec, order: EdgeOrder, directed: bool = False) -> float:
    """log p(s) for the given order; ``-inf`` if the order is infeasible."""
    seq = np.asarray(order.sequence, dtype=np.int64).reshape(-1, 2)
    if spec.mode == UNIFORM:
        n = _infer_n(seq, directed, order)
        if n is None or not _is_permutation_of_dyads(seq, n, directed):
            return -np.inf
        return -lgamma(n_dyads(n, directed) + 1)

    entry = order.entry_sequence
    if entry is None:
        return -np.inf
    entry = np.asarray(entry, dtype=np.int64)
    n = entry.size
    if sorted(entry.tolist()) != list(range(n)):
        return -np.inf
    try:
        groups = spec.resolved_groups(n)
    except ValueError:
        return -np.inf
    offset = 0
    logp = 0.0
    for grp in groups:
        if set(entry[offset:offset + len(grp)].tolist()) != set(grp):
            return -np.inf
        offset += len(grp)
        logp -= lgamma(len(grp) + 1)
    if not _is_permutation_of_dyads(seq, n, directed):
        return -np.inf
    pos = order.entry_times
    acting = np.maximum(pos[seq[:, 0]], pos[seq[:, 1]])
    # each entering vertex owns one contiguous block of its dyads to prior vertices
    if seq.shape[0] and np.any(np.diff(acting) < 0):
        return -np.inf
    for t in range(2, n + 1):
        m = (t - 1) * (2 if directed else 1)
        logp -= lgamma(m + 1)
    return logp


def _infer_n(seq, directed, order) -> int | None:
    if order.entry_sequence is not None:
        return int(len(order.entry_sequence))
    nd = seq.shape[0]
    # solve n_d(n) = nd
    for n in range(1, 100000):
        k = n_dyads(n, directed)
        if k == nd:
            if nd == 0:
                return None
            return n
        if k > nd:
            return None
    return None


def _is_permutation_of_dyads(seq: np.ndarray, n: int, directed: bool) -> bool:
    nd = n_dyads(n, directed)
    if seq.shape[0] != nd:
        return False
    if nd == 0:
        return True
    if np.any(seq[:, 0] == seq[:, 1]) or np.any(seq < 0) or np.any(seq >= n):
        return False
    if directed:
        keys = seq[:, 0] * n + seq[:, 1]
    else:
        keys = np.minimum(seq[:, 0], seq[:, 1]) * n + np.maximum(seq[:, 0], seq[:, 1])
    return np.unique(keys).size == nd


def enumerate_orders(spec: OrderSpec, n: int, directed: bool = False):
    """Yield every feasible ``EdgeOrder`` with its log-probability (tiny n only)."""
    from itertools import permutations, product

    if spec.mode == UNIFORM:
        nd = n_dyads(n, directed)
        dyads = [tuple(dyad_at(n, directed, k)) for k in range(nd)]
        logp = -lgamma(nd + 1)
        for perm in permutations(dyads):
            yield EdgeOrder(np.array(perm, dtype=np.int64).reshape(-1, 2)), logp
        return

    groups = spec.resolved_groups(n)
    for entry_parts in product(*(permutations(grp) for grp in groups)):
        entry = [v for part in entry_parts for v in part]
        blocks = []
        for t, v in enumerate(entry):
            prior = entry[:t]
            if directed:
                cand = [(v, a) for a in prior] + [(a, v) for a in prior]
            else:
                cand = [(min(v, a), max(v, a)) for a in prior]
            blocks.append(list(permutations(cand)))
        entry_arr = np.array(entry, dtype=np.int64)
        for choice in product(*blocks):
            rows = [d for block in choice for d in block]
            order = EdgeOrder(np.array(rows, dtype=np.int64).reshape(-1, 2), entry_arr)
            yield order, log_prob_order(spec, order, directed)
