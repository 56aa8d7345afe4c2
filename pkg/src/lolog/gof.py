"""Goodness of fit by simulation: compare graph summaries of the observed
network with their distribution over networks drawn from a fitted model.

Distributional statistics (degree, edgewise shared partners) are reported
per bin; scalar statistics as a single bin. Directed graphs are summarized
through their undirected projection.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .graph import Graph
from .sampler import ModelSpec, default_threads, draw_graph, replicate_rng, _map


def _adjacency(g: Graph):
    return g.projection().astype(np.int64)


def degree_distribution(g: Graph) -> np.ndarray:
    """Vertex counts at degree 0..max (projection degree for directed graphs)."""
    d = np.asarray(_adjacency(g).sum(axis=1)).ravel() if g.directed else g.degrees()
    return np.bincount(d, minlength=1)


def edgewise_shared_partners(g: Graph) -> np.ndarray:
    """Shared-partner count of every edge of the projection."""
    a = _adjacency(g)
    coo = a.tocoo()
    keep = coo.row < coo.col
    i, j = coo.row[keep], coo.col[keep]
    if i.size == 0:
        return np.zeros(0, dtype=np.int64)
    a2 = a @ a
    return np.asarray(a2[i, j]).ravel().astype(np.int64)


def esp_distribution(g: Graph) -> np.ndarray:
    return np.bincount(edgewise_shared_partners(g), minlength=1)


def triangle_count(g: Graph) -> int:
    a = _adjacency(g)
    return int(round((a @ a).multiply(a).sum() / 6))


def two_star_count(g: Graph) -> int:
    d = degree_distribution(g)
    k = np.arange(d.size)
    return int(np.sum(d * k * (k - 1) // 2))


def transitivity(g: Graph) -> float:
    """3 * triangles / two-stars (0 when there are no two-stars)."""
    s = two_star_count(g)
    return 3 * triangle_count(g) / s if s else 0.0


def local_triangles(g: Graph) -> np.ndarray:
    a = _adjacency(g)
    return np.asarray((a @ a).multiply(a).sum(axis=1)).ravel() / 2


def sv_transitivity(g: Graph) -> float:
    """Degree-corrected clustering in the manner of Soffer and Vazquez.

    Vertex i with t_i triangles is compared with the largest number of
    triangles its neighbourhood could hold given the neighbour degrees,

        omega_i = 1/2 * sum_{j in N(i)} min(k_j - 1, k_i - 1),

    since neighbour j can link to at most k_j - 1 other neighbours of i (and
    to at most k_i - 1 of them). The statistic is the mean of t_i / omega_i
    over vertices with omega_i > 0, or 0 when there are none. On regular
    graphs omega_i = C(k, 2) and this is the ordinary transitivity.
    """
    a = _adjacency(g).tocsr()
    k = np.asarray(a.sum(axis=1)).ravel()
    t = local_triangles(g)
    rows = np.repeat(np.arange(g.n), np.diff(a.indptr))
    cap = np.minimum(k[a.indices] - 1, k[rows] - 1)
    omega = np.bincount(rows, weights=cap, minlength=g.n) / 2
    ok = omega > 0
    if not ok.any():
        return 0.0
    return float(np.mean(t[ok] / omega[ok]))


def log_bin(counts) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pool a degree histogram into bins [0], [1], [2, 3], [4, 7], ...

    Returns (lower, upper, pooled) with inclusive bounds; the label of a
    bin is the geometric mean of its bounds, see :func:`log_bin_labels`.
    """
    counts = np.asarray(counts)
    top = counts.size - 1
    lo, hi = [0], [0]
    b = 1
    while b <= max(top, 1):
        lo.append(b)
        hi.append(2 * b - 1)
        b *= 2
    lo, hi = np.array(lo), np.array(hi)
    csum = np.concatenate([[0], np.cumsum(counts)])
    pooled = csum[np.minimum(hi, top) + 1] - csum[np.minimum(lo, top + 1)]
    pooled = np.where(lo > top, 0, pooled)
    return lo, hi, pooled


def log_bin_labels(lo, hi) -> np.ndarray:
    return np.where(lo == 0, 0.0, np.sqrt(lo * np.maximum(hi, 1)))


class GraphStatistic:
    """Order-independent statistic usable as a GMM moment."""

    kind = ""
    order_independent = True
    entry_determined = False

    @property
    def label(self) -> str:
        return self.kind

    def value(self, graph: Graph, pos=None) -> float:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}()"


class SVTransitivity(GraphStatistic):
    kind = "sv-transitivity"

    def value(self, graph, pos=None):
        return sv_transitivity(graph)


class Transitivity(GraphStatistic):
    kind = "transitivity"

    def value(self, graph, pos=None):
        return transitivity(graph)


STATISTICS = {"sv-transitivity": SVTransitivity, "transitivity": Transitivity}

# scalar summaries available to gof reports
SCALARS = {
    "edges": lambda g: float(g.edge_count),
    "triangles": lambda g: float(triangle_count(g)),
    "two-stars": lambda g: float(two_star_count(g)),
    "transitivity": transitivity,
    "sv-transitivity": sv_transitivity,
    "mean-degree": lambda g: 2.0 * g.edge_count / g.n,
}
DISTRIBUTIONS = {"degree": degree_distribution, "esp": esp_distribution}
LOG_BINNED = {"degree-log": degree_distribution}


def summarize(g: Graph, stat: str) -> np.ndarray:
    if stat in SCALARS:
        return np.array([SCALARS[stat](g)])
    if stat in DISTRIBUTIONS:
        return DISTRIBUTIONS[stat](g).astype(float)
    if stat in LOG_BINNED:
        return log_bin(LOG_BINNED[stat](g))[2].astype(float)
    raise ValueError(f"unknown goodness-of-fit statistic {stat!r}; "
                     f"choose from {sorted(SCALARS) + sorted(DISTRIBUTIONS) + sorted(LOG_BINNED)}")


@dataclass
class GofReport:
    name: str
    bins: np.ndarray
    observed: np.ndarray | None  # None when the statistic is unobservable (growth checkpoints)
    simulated: np.ndarray  # (r, n_bins)
    checkpoint: int | None = None
    meta: dict = field(default_factory=dict)

    QUANTILES = (0.0, 0.05, 0.5, 0.95, 1.0)
    # plotting position p(r + 1): a fresh draw falls inside [q_lo, q_hi] with
    # probability hi - lo (numpy's default interpolation gives (hi - lo)(r - 1)/(r + 1))
    METHOD = "weibull"

    @property
    def r(self) -> int:
        return self.simulated.shape[0]

    @property
    def quantiles(self) -> np.ndarray:
        """(5, n_bins): min, 5%, 50%, 95%, max."""
        return np.quantile(self.simulated, self.QUANTILES, axis=0, method=self.METHOD)

    def inside_envelope(self, lo: float = 0.05, hi: float = 0.95) -> np.ndarray:
        if self.observed is None:
            raise ValueError("no observed values for this report")
        q = np.quantile(self.simulated, [lo, hi], axis=0, method=self.METHOD)
        return (self.observed >= q[0]) & (self.observed <= q[1])

    def rows(self):
        q = self.quantiles
        obs = self.observed if self.observed is not None else np.full(self.bins.size, np.nan)
        for k, b in enumerate(self.bins):
            yield b, obs[k], q[1, k], q[2, k], q[3, k]

    def to_tsv(self) -> str:
        lines = ["bin\tobserved\tq05\tq50\tq95"]
        for b, o, q05, q50, q95 in self.rows():
            lines.append(f"{_fmt(b)}\t{_fmt(o)}\t{_fmt(q05)}\t{_fmt(q50)}\t{_fmt(q95)}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        q = self.quantiles
        return {
            "name": self.name,
            "checkpoint": self.checkpoint,
            "r": self.r,
            "bins": self.bins.tolist(),
            "observed": None if self.observed is None else self.observed.tolist(),
            "quantiles": {k: q[i].tolist() for i, k in enumerate(("min", "q05", "q50", "q95", "max"))},
            "simulated": self.simulated.tolist(),
            **self.meta,
        }


def _fmt(x) -> str:
    x = float(x)
    if np.isnan(x):
        return "NA"
    return str(int(x)) if x.is_integer() else f"{x:.6g}"


def _pad(rows: list) -> np.ndarray:
    width = max(len(r) for r in rows)
    out = np.zeros((len(rows), width))
    for k, r in enumerate(rows):
        out[k, :len(r)] = r
    return out


def _bins(stat: str, width: int) -> np.ndarray:
    if stat in SCALARS:
        return np.array([0])
    if stat in LOG_BINNED:
        lo = np.array([0] + [2 ** k for k in range(width - 1)])
        hi = np.array([0] + [2 ** (k + 1) - 1 for k in range(width - 1)])
        return log_bin_labels(lo, hi)
    return np.arange(width)


def _first_entered(graph: Graph, entry_sequence, m: int) -> Graph:
    return graph.subgraph(np.asarray(entry_sequence)[:m])


def gof_run(fit, model: ModelSpec, observed: Graph, r: int = 100, seed: int = 0, stats=("degree", "esp"),
            growth_checkpoints=None, threads=None) -> list[GofReport]:
    """Simulate ``r`` networks at the fitted parameters and summarize them.

    ``fit`` is a FitResult or a parameter vector. With ``growth_checkpoints``
    (vertex-entry orders only) each statistic is also computed on the
    subgraph induced by the first m entered vertices of every simulation.
    """
    theta = np.asarray(getattr(fit, "theta", fit), dtype=float)
    if theta.size != len(model.terms):
        raise ValueError(f"fit has {theta.size} parameters, model has {len(model.terms)} terms")
    if observed.n != model.n or observed.directed != model.directed:
        raise ValueError("observed graph does not match the model's vertex set")
    if r < 1:
        raise ValueError("need at least one simulation")
    checkpoints = []
    if growth_checkpoints:
        if not model.order.vertex_mode:
            raise ValueError("growth checkpoints need a vertex-entry order")
        checkpoints = sorted(int(m) for m in growth_checkpoints)
        if checkpoints[0] < 1 or checkpoints[-1] > model.n:
            raise ValueError(f"growth checkpoints must lie in 1..{model.n}")
    stats = list(stats)
    for s in stats:
        summarize(Graph(1), s)  # validates the name
    fitted = model.with_theta(theta)
    threads = threads or default_threads()

    def one(i):
        d = draw_graph(fitted, replicate_rng(seed, i))
        g = d.graph
        out = {(s, None): summarize(g, s) for s in stats}
        for m in checkpoints:
            sub = _first_entered(g, d.entry_sequence, m)
            for s in stats:
                out[(s, m)] = summarize(sub, s)
        return out

    sims = _map(one, range(r), threads)
    obs_entry = None
    if checkpoints and model.order.entry_is_fixed(model.n):
        obs_entry = [grp[0] for grp in model.order.resolved_groups(model.n)]
    reports = []
    for m in [None] + checkpoints:
        g_obs = observed if m is None else (_first_entered(observed, obs_entry, m) if obs_entry else None)
        for s in stats:
            obs = summarize(g_obs, s) if g_obs is not None else None
            block = _pad([sim[(s, m)] for sim in sims] + ([obs] if obs is not None else []))
            if obs is not None:
                obs, block = block[-1], block[:-1]
            name = s if m is None else f"{s}@{m}"
            reports.append(GofReport(name, _bins(s, block.shape[1]), obs, block, m))
    return reports


def write_reports(reports, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for rep in reports:
        (out / f"{rep.name.replace('@', '_at_')}.tsv").write_text(rep.to_tsv())
    (out / "report.json").write_text(json.dumps({"reports": [rep.to_dict() for rep in reports]}, indent=1))
