"""Exact forward sampling from the latent-order logistic model.

Each edge variable, in the sampled order, is drawn from a logistic law whose
log-odds are ``theta . c(1 | y^{t-1}) - theta . c(0 | y^{t-1})``. Alongside the
graph we accumulate

* ``g``: the realized change statistics (the model statistics g(y, s)),
* ``G``: the conditional expectations of the change statistics,
  sum_t E[c(Y_t) | past]; E[G] = E[g] and d/dtheta log p(y|s) = g - G,
* the conditional log-likelihood log p(y | s, theta).

Models built only from stock terms run through the compiled kernel; any
other term falls back to the pure-Python engine, which is also the reference
used by the tests and the exact oracle.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from . import _kernel
from .graph import Graph
from .ordering import EdgeOrder, OrderSpec, sample_order
from .terms import Edges, PrefAttach, Term, change_stats, change_stats0


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Terms, parameters and order distribution over a fixed vertex set."""

    terms: tuple
    theta: np.ndarray
    order: OrderSpec
    n: int
    directed: bool = False
    attrs: dict = field(default_factory=dict)
    labels: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        theta = np.asarray(self.theta, dtype=float).reshape(-1)
        object.__setattr__(self, "theta", theta)
        if theta.size != len(self.terms):
            raise ValueError(f"theta has {theta.size} entries for {len(self.terms)} terms")
        if self.n < 1:
            raise ValueError("model needs at least one vertex")
        self.order.validate(self.n)
        if not self.order.vertex_mode:
            for t in self.terms:
                if t.needs_entry_order:
                    raise ValueError(f"term {t.label!r} requires a vertex-entry order")
        template = self.template()
        for t in self.terms:
            t.validate(template)

    @classmethod
    def from_graph(cls, graph: Graph, terms, theta=None, order: OrderSpec | None = None) -> "ModelSpec":
        terms = tuple(terms)
        theta = np.zeros(len(terms)) if theta is None else theta
        return cls(terms, theta, order or OrderSpec.uniform(), graph.n, graph.directed,
                   dict(graph.attrs), tuple(graph.labels))

    def with_theta(self, theta) -> "ModelSpec":
        return replace(self, theta=np.asarray(theta, dtype=float))

    def template(self) -> Graph:
        return Graph(self.n, self.directed, labels=self.labels, attrs=self.attrs)

    @property
    def labels_of_terms(self) -> list[str]:
        return [t.label for t in self.terms]

    @property
    def order_independent(self) -> bool:
        return all(t.order_independent for t in self.terms)

    @property
    def dyad_independent(self) -> bool:
        return all(t.dyad_independent for t in self.terms)

    @cached_property
    def compiled(self):
        return compile_terms(self.terms, self.template())

    @property
    def has_kernel(self) -> bool:
        return self.compiled is not None


def compile_terms(terms, template: Graph):
    """Kernel arrays for ``terms`` or None if any term lacks a kernel code."""
    p = len(terms)
    kinds = np.zeros(p, dtype=np.int64)
    par1 = np.zeros(p)
    par2 = np.zeros(p)
    attr = np.zeros((p, template.n))
    for t, term in enumerate(terms):
        code = term.kernel_code(template) if isinstance(term, Term) else None
        if code is None:
            return None
        kinds[t], par1[t], par2[t], values = code
        if values is not None:
            attr[t] = values
    return kinds, par1, par2, attr


@dataclass
class SampleDraw:
    edges: np.ndarray  # (m, 2)
    g: np.ndarray
    G: np.ndarray
    log_cond_lik: float
    entry_sequence: np.ndarray | None
    order: EdgeOrder | None
    n: int
    directed: bool = False
    attrs: dict = field(default_factory=dict)
    labels: tuple | None = None
    h: np.ndarray | None = None  # auxiliary (moment) statistics, when requested

    @cached_property
    def graph(self) -> Graph:
        return Graph.from_edges(self.n, self.edges, self.directed, labels=self.labels, attrs=self.attrs)

    @property
    def entry_times(self) -> np.ndarray | None:
        if self.entry_sequence is None:
            return None
        pos = np.empty(self.n, dtype=np.int64)
        pos[self.entry_sequence] = np.arange(1, self.n + 1)
        return pos


def logistic(x):
    """Numerically stable logistic function (no overflow for large |x|)."""
    x = np.asarray(x, dtype=float)
    if np.any(np.isnan(x)):
        raise ValueError("NaN log-odds")
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out if out.ndim else float(out)


def edge_prob(theta, c1, c0=None) -> float:
    """P(edge) given change statistics for the edge (c1) and non-edge (c0)."""
    theta = np.asarray(theta, dtype=float)
    x = float(theta @ np.asarray(c1, dtype=float))
    if c0 is not None:
        x -= float(theta @ np.asarray(c0, dtype=float))
    return logistic(x)


def _log_sigmoid(x: float) -> float:
    return -np.logaddexp(0.0, -x)


# -- seeds ------------------------------------------------------------------

def replicate_seed(master_seed: int, index: int, stream: tuple = ()) -> np.random.SeedSequence:
    """Seed of replicate ``index``; ``stream`` separates batches drawn under one master seed."""
    return np.random.SeedSequence(master_seed, spawn_key=tuple(stream) + (index,))


def replicate_rng(master_seed: int, index: int, stream: tuple = ()) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(replicate_seed(master_seed, index, stream)))


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def default_threads() -> int:
    return max(1, int(os.environ.get("LOLOG_THREADS", "1")))


# -- the Python reference engine --------------------------------------------

def _python_sweep(model: ModelSpec, order: EdgeOrder, rng, observed: Graph | None, aux=()):
    terms = list(model.terms) + list(aux)
    p = len(model.terms)
    theta = model.theta
    graph = model.template()
    pos = order.entry_times
    g = np.zeros(len(terms))
    G = np.zeros(len(terms))
    ll = 0.0
    for i, j in np.asarray(order.sequence).reshape(-1, 2).tolist():
        c1 = change_stats(terms, graph, pos, (i, j))
        c0 = change_stats0(terms, graph, pos, (i, j))
        x = float(theta @ (c1[:p] - c0[:p]))
        prob = logistic(x)
        if observed is not None:
            y = observed.has_edge(i, j)
        else:
            y = rng.random() < prob
        G += prob * c1 + (1.0 - prob) * c0
        if y:
            g += c1
            ll += _log_sigmoid(x)
            graph.set_edge(i, j, 1)
        else:
            g += c0
            ll += _log_sigmoid(-x)
    return graph, g, G, ll


def cond_log_lik(model: ModelSpec, graph: Graph, order: EdgeOrder):
    """(log p(y | s, theta), g(y, s), G(y, s)) by replaying ``graph`` along ``order``."""
    if graph.n != model.n or graph.directed != model.directed:
        raise ValueError("graph does not match the model's vertex set")
    if len(order) != graph.n_dyads:
        raise ValueError(f"order has {len(order)} dyads, graph has {graph.n_dyads}")
    _, g, G, ll = _python_sweep(model, order, None, graph)
    return ll, g, G


# -- sampling ---------------------------------------------------------------

def _csr(graph: Graph):
    ptr = np.zeros(graph.n + 1, dtype=np.int64)
    lists = [graph.out_neighbors(i) for i in range(graph.n)]
    ptr[1:] = np.cumsum([len(x) for x in lists])
    idx = np.array([v for x in lists for v in x], dtype=np.int64)
    return ptr, idx


_EMPTY = np.zeros(0, dtype=np.int64)


def _kernel_sweep(model: ModelSpec, rng, flags, observed=None, aux_compiled=None):
    kinds, par1, par2, attr = model.compiled
    n_model = kinds.size
    if aux_compiled is not None:
        kinds = np.concatenate([kinds, aux_compiled[0]])
        par1 = np.concatenate([par1, aux_compiled[1]])
        par2 = np.concatenate([par2, aux_compiled[2]])
        attr = np.vstack([attr, aux_compiled[3]])
    theta = np.concatenate([model.theta, np.zeros(kinds.size - n_model)])
    gptr, gmem = model.order.group_arrays(model.n)
    if observed is not None:
        flags |= _kernel.REPLAY
        optr, oidx = _csr(observed) if not isinstance(observed, tuple) else observed
    else:
        optr, oidx = np.zeros(model.n + 1, dtype=np.int64), _EMPTY
    return _kernel.sweep(model.n, model.directed, model.order.vertex_mode, gptr, gmem,
                         kinds, par1, par2, attr, theta, n_model, optr, oidx, flags, rng)


def _auto_keep_order(model: ModelSpec, keep_order):
    if keep_order is None:
        return model.n * (model.n - 1) <= 2_000_000
    return keep_order


def sample_graph(model: ModelSpec, rng=None, keep_order=None, engine: str = "auto") -> SampleDraw:
    """Draw one (graph, order) pair together with g, G and log p(y | s)."""
    rng = _as_rng(rng)
    keep_order = _auto_keep_order(model, keep_order)
    if engine == "python" or (engine == "auto" and not model.has_kernel):
        order = sample_order(model.order, (model.n, model.directed), rng)
        graph, g, G, ll = _python_sweep(model, order, rng, None)
        return SampleDraw(graph.edges(), g, G, ll, order.entry_sequence, order if keep_order else None,
                          model.n, model.directed, model.attrs, model.labels)
    if not model.has_kernel:
        raise ValueError("model contains terms without a compiled implementation")
    flags = _kernel.WANT_G | _kernel.WANT_LOGLIK | (_kernel.WANT_ORDER if keep_order else 0)
    g, G, ll, et, eh, _, entry, _, _, order = _kernel_sweep(model, rng, flags)
    entry_seq = entry if model.order.vertex_mode else None
    edge_order = EdgeOrder(order, entry_seq) if keep_order else None
    edges = np.column_stack([et, eh])
    return SampleDraw(edges, g, G, float(ll), entry_seq, edge_order, model.n, model.directed,
                      model.attrs, model.labels)


def growth_parameters(model: ModelSpec):
    """(theta_edges, theta_pa, k) when ``model`` can use the thinned growth sampler, else None.

    That is a vertex-entry model whose terms are at most one edges term and
    at most one pref-attach term.
    """
    if not model.order.vertex_mode:
        return None
    theta_e, theta_pa, k = 0.0, 0.0, 1.0
    seen = set()
    for t, th in zip(model.terms, model.theta):
        kind = type(t)
        if kind in seen or kind not in (Edges, PrefAttach):
            return None
        seen.add(kind)
        if kind is Edges:
            theta_e = float(th)
        else:
            theta_pa, k = float(th), t.k
    return theta_e, theta_pa, k


def draw_graph(model: ModelSpec, rng=None) -> SampleDraw:
    """A draw for callers that only need the graph and its entry sequence.

    Growth models (see :func:`growth_parameters`) skip most dyads, so G and
    log_cond_lik come back as NaN; any other model falls through to
    :func:`sample_graph`.
    """
    params = growth_parameters(model)
    if params is None:
        return sample_graph(model, rng, keep_order=False)
    rng = _as_rng(rng)
    gptr, gmem = model.order.group_arrays(model.n)
    n_e, g_pa, et, eh, entry = _kernel.grow(model.n, model.directed, gptr, gmem, *params, rng)
    g = np.array([n_e if type(t) is Edges else g_pa for t in model.terms])
    return SampleDraw(np.column_stack([et, eh]), g, np.full(g.size, np.nan), np.nan, entry, None,
                      model.n, model.directed, model.attrs, model.labels)


def _map(fn, items, threads):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def sample_batch(model: ModelSpec, r: int, master_seed: int, keep_order=False, threads=None,
                 engine: str = "auto") -> list[SampleDraw]:
    """``r`` independent draws; replicate i uses ``replicate_rng(master_seed, i)``."""
    if r < 1:
        raise ValueError("need at least one replicate")
    threads = threads or default_threads()
    return _map(lambda i: sample_graph(model, replicate_rng(master_seed, i), keep_order, engine), range(r), threads)


@dataclass
class BatchStats:
    """Statistic matrices of a simulated batch (one row per replicate)."""

    g: np.ndarray
    G: np.ndarray
    h: np.ndarray | None = None


def simulate_stats(model: ModelSpec, r: int, master_seed: int, moments=None, threads=None,
                   stream: tuple = ()) -> BatchStats:
    """g, G (and moment statistics h) for ``r`` draws without keeping graphs.

    ``moments`` is a sequence of statistics; stock order-independent terms are
    accumulated inside the sweep, anything else is evaluated on the finished
    graph via ``stat.value(graph, entry_times)``.
    """
    threads = threads or default_threads()
    moments = list(moments or [])
    kernel_idx, python_idx = [], []
    aux_terms = []
    template = model.template()
    for k, stat in enumerate(moments):
        if isinstance(stat, Term) and stat.kernel_code(template) is not None:
            kernel_idx.append(k)
            aux_terms.append(stat)
        else:
            python_idx.append(k)
    use_kernel = model.has_kernel
    aux_compiled = compile_terms(aux_terms, template) if aux_terms and use_kernel else None
    p = len(model.terms)

    def one(i):
        rng = replicate_rng(master_seed, i, stream)
        h = np.zeros(len(moments))
        if use_kernel:
            g, G, _, et, eh, _, entry, _, _, _ = _kernel_sweep(model, rng, _kernel.WANT_G, aux_compiled=aux_compiled)
            h[kernel_idx] = g[p:]
            entry_seq = entry if model.order.vertex_mode else None
            graph = None
            if python_idx:
                graph = Graph.from_edges(model.n, np.column_stack([et, eh]), model.directed,
                                         labels=model.labels, attrs=model.attrs)
            g, G = g[:p], G[:p]
        else:
            order = sample_order(model.order, (model.n, model.directed), rng)
            graph, g, G, _ = _python_sweep(model, order, rng, None)
            entry_seq = order.entry_sequence
            h = np.array([m.value(graph, order.entry_times) for m in moments])
            return g, G, h
        pos = _entry_times(entry_seq, model.n)
        for k in python_idx:
            h[k] = moments[k].value(graph, pos)
        return g, G, h

    out = _map(one, range(r), threads)
    g = np.array([o[0] for o in out]).reshape(r, p)
    G = np.array([o[1] for o in out]).reshape(r, p)
    h = np.array([o[2] for o in out]).reshape(r, len(moments)) if moments else None
    return BatchStats(g, G, h)


def _entry_times(entry_seq, n):
    if entry_seq is None:
        return None
    pos = np.empty(n, dtype=np.int64)
    pos[entry_seq] = np.arange(1, n + 1)
    return pos


def replay_rows(model: ModelSpec, observed: Graph, r: int, master_seed: int, threads=None, stream: tuple = ()):
    """Change-statistic rows and outcomes from replaying ``observed`` along r sampled orders.

    Returns (X, y, loglik) with X of shape (r * n_d, p).
    """
    threads = threads or default_threads()
    if model.has_kernel:
        csr = _csr(observed)

        def one(i):
            out = _kernel_sweep(model, replicate_rng(master_seed, i, stream), _kernel.WANT_ROWS | _kernel.WANT_LOGLIK,
                                observed=csr)
            return out[7], out[8].astype(float), out[2]
    else:
        def one(i):
            rng = replicate_rng(master_seed, i, stream)
            order = sample_order(model.order, (model.n, model.directed), rng)
            pos = order.entry_times
            graph = model.template()
            X = np.empty((len(order), len(model.terms)))
            y = np.empty(len(order))
            for t, (a, b) in enumerate(order.sequence.tolist()):
                c1 = change_stats(model.terms, graph, pos, (a, b))
                c0 = change_stats0(model.terms, graph, pos, (a, b))
                X[t] = c1 - c0
                y[t] = observed.has_edge(a, b)
                if y[t]:
                    graph.set_edge(a, b, 1)
            return X, y, np.nan

    out = _map(one, range(r), threads)
    X = np.vstack([o[0] for o in out])
    y = np.concatenate([o[1] for o in out])
    ll = np.array([o[2] for o in out])
    return X, y, ll
