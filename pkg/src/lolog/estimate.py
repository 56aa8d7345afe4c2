"""Variational, method-of-moments and GMM fitting.

All three share one sign convention for the moment Jacobian. With moment
residual m(theta) = h(y) - E_theta h(Y),

    J[k, j] = d m_k / d theta_j = -cov(h_k, g_j) + cov(h_k, G_j)

which follows from d/dtheta_j log p(y, s) = g_j - G_j. MOM is the square
case h = g. Newton steps are theta <- theta - J^{-1} m (MOM) and
theta <- theta - (J'WJ)^{-1} J'W m (GMM), damped by backtracking on the
quadratic form m'Wm evaluated with the previous iteration's W.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import norm

from .graph import Graph
from .numerics import (SingularMatrixError, cross_cov, hotelling_t2, irls_logistic, ridge_inverse, sample_cov,
                       solve)
from .sampler import ModelSpec, replay_rows, simulate_stats

log = logging.getLogger(__name__)

MOM_EPSILON = 0.1
GMM_EPSILON = 0.1


@dataclass
class FitConfig:
    r: int = 1000
    # None picks the method default (MOM_EPSILON / GMM_EPSILON)
    epsilon: float | None = None
    max_iters: int = 100
    beta1: float = 0.5
    beta2: float = 1.2
    alpha0: float = 1.0
    master_seed: int = 0
    variational_r: int = 20
    threads: int | None = None
    theta0: Sequence[float] | None = None

    def __post_init__(self):
        if self.r < 2:
            raise ValueError("r must be at least 2")
        if not 0 < self.beta1 < 1 < self.beta2:
            raise ValueError("need 0 < beta1 < 1 < beta2")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.alpha0 <= 1:
            raise ValueError("alpha0 must lie in (0, 1]")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.variational_r < 1:
            raise ValueError("variational_r must be at least 1")

    def tolerance(self, method: str) -> float:
        if self.epsilon is not None:
            return float(self.epsilon)
        return MOM_EPSILON if method == "mom" else GMM_EPSILON


@dataclass
class FitResult:
    method: str
    labels: list
    theta: np.ndarray
    covariance: np.ndarray
    residuals: np.ndarray | None = None
    objective_trace: list = field(default_factory=list)
    converged: bool = True
    iterations: int = 0
    observed: np.ndarray | None = None  # g(y) or h(y) matched by the fit
    observed_labels: list | None = None
    theta_trace: list = field(default_factory=list)
    epsilon: float | None = None
    separated: bool = False

    @property
    def theta_hat(self) -> np.ndarray:
        return self.theta

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))

    @property
    def z(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.theta / self.se

    @property
    def p_values(self) -> np.ndarray:
        return 2 * norm.sf(np.abs(self.z))

    def table(self) -> str:
        """Term, observed statistic, estimate, SE and p-value, one row per parameter."""
        obs = self.observed
        show_obs = obs is not None and obs.size == self.theta.size
        width = max([len(s) for s in self.labels] + [4])
        head = f"{'term':<{width}}  {'observed':>12}  {'theta':>10}  {'se':>9}  {'p-value':>8}"
        lines = [head, "-" * len(head)]
        for k, name in enumerate(self.labels):
            o = f"{obs[k]:12.4g}" if show_obs else f"{'':>12}"
            lines.append(f"{name:<{width}}  {o}  {self.theta[k]:10.4f}  {self.se[k]:9.4f}  {self.p_values[k]:8.4f}")
        if obs is not None and not show_obs:
            lines.append("")
            lines.append("moment statistics h(y):")
            for name, v in zip(self.observed_labels or [], obs):
                lines.append(f"  {name:<{width}}  {v:12.6g}")
        return "\n".join(lines)


@dataclass
class MomentSpec:
    """Order-independent statistics h(y) matched by GMM."""

    stats: tuple

    def __post_init__(self):
        object.__setattr__(self, "stats", tuple(self.stats))
        if not self.stats:
            raise ValueError("moment specification is empty")

    @property
    def labels(self) -> list:
        return [s.label for s in self.stats]

    def __len__(self) -> int:
        return len(self.stats)

    def validate(self, model: ModelSpec) -> None:
        fixed = model.order.entry_is_fixed(model.n)
        for s in self.stats:
            if not observable(s, model):
                hint = " (it is determined only once the entry order is fixed)" if \
                    getattr(s, "entry_determined", False) and not fixed else ""
                raise ValueError(f"moment statistic {s.label!r} is not order independent{hint}")
        if len(self.stats) < len(model.terms):
            raise ValueError(f"GMM needs at least as many moments as parameters: "
                             f"{len(self.stats)} moments for {len(model.terms)} parameters")


def observable(stat, model: ModelSpec) -> bool:
    """True when ``stat`` is a function of the observed graph (and the fixed entry order, if any)."""
    if getattr(stat, "order_independent", False):
        return True
    return bool(getattr(stat, "entry_determined", False)) and model.order.entry_is_fixed(model.n)


def fixed_entry_times(model: ModelSpec):
    if not model.order.entry_is_fixed(model.n):
        return None
    pos = np.empty(model.n, dtype=np.int64)
    for t, grp in enumerate(model.order.resolved_groups(model.n)):
        pos[grp[0]] = t + 1
    return pos


def observed_values(stats, observed: Graph, model: ModelSpec) -> np.ndarray:
    pos = fixed_entry_times(model)
    return np.array([s.value(observed, pos) for s in stats], dtype=float)


def _check_graph(observed: Graph, model: ModelSpec) -> None:
    if observed.n != model.n or observed.directed != model.directed:
        raise ValueError(f"observed graph (n={observed.n}, directed={observed.directed}) does not match "
                         f"the model (n={model.n}, directed={model.directed})")


# -- variational -------------------------------------------------------------

def variational_fit(observed: Graph, model: ModelSpec, r: int = 20, seed: int = 0, threads=None) -> FitResult:
    """Logistic regression on change-statistic rows from replaying ``observed`` along r sampled orders.

    Each row carries weight 1/r, so the criterion is the average of the r
    conditional log-likelihoods. Identical rows are pooled before IRLS.
    """
    _check_graph(observed, model)
    if r < 1:
        raise ValueError("r must be at least 1")
    X, y, _ = replay_rows(model, observed, r, seed, threads, stream=(0xFA,))
    zero = [model.terms[k].label for k in np.flatnonzero(np.all(X == 0, axis=0))]
    if zero:
        raise ValueError(f"terms {zero} have identically zero change statistics on the observed graph; "
                         f"they are not identifiable")
    rows, counts = pool_rows(np.column_stack([X, y]))
    fit = irls_logistic(rows[:, :-1], rows[:, -1], counts / r)
    return FitResult("variational", model.labels_of_terms, fit.coef, fit.cov,
                     objective_trace=list(fit.loglik_trace), converged=fit.converged, iterations=fit.iterations,
                     observed=observed_values(model.terms, observed, model) if _all_observable(model) else None,
                     observed_labels=model.labels_of_terms, separated=fit.separated)


def pool_rows(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Distinct rows of A with their multiplicities (row order unspecified).

    Much faster than ``np.unique(axis=0)``: each column is reduced to level
    codes and the codes are packed into one int64 key.
    """
    key = np.zeros(A.shape[0], dtype=np.int64)
    size = 1
    for j in range(A.shape[1]):
        levels, inv = np.unique(A[:, j], return_inverse=True)
        if size * levels.size >= 2 ** 62:
            _, key = np.unique(key, return_inverse=True)
            key = key.ravel().astype(np.int64)
            size = int(key.max()) + 1
        key = key * levels.size + inv.ravel()
        size *= levels.size
    _, first, counts = np.unique(key, return_index=True, return_counts=True)
    return A[first], counts


def _all_observable(model: ModelSpec) -> bool:
    return all(observable(t, model) for t in model.terms)


# -- generic moment search ---------------------------------------------------

@dataclass
class MomentBatch:
    """Monte Carlo (or exact) summary of the moments at one theta."""

    mean: np.ndarray  # E h
    jacobian: np.ndarray  # d m / d theta, (q, p)
    cov: np.ndarray  # cov h, (q, q)
    r: int = 0


def batch_from_stats(h: np.ndarray, g: np.ndarray, G: np.ndarray) -> MomentBatch:
    J = -cross_cov(h, g) + cross_cov(h, G)
    return MomentBatch(h.mean(axis=0), J, sample_cov(h), h.shape[0])


@dataclass
class SearchResult:
    theta: np.ndarray
    converged: bool
    iterations: int
    trace: list  # criterion per evaluated theta (nan for rejected points)
    theta_trace: list
    accepted: list
    objective_pairs: list  # (old, new) m'Wm under the previous W at every accepted step


def _direction(batch: MomentBatch, m: np.ndarray, W: np.ndarray, square: bool):
    """Newton direction and stopping criterion."""
    J = batch.jacobian
    if square:
        return -solve(J, m), hotelling_t2(m, batch.cov)
    score = J.T @ W @ m
    step = -solve(J.T @ W @ J, score)
    return step, float(-step @ score)


def moment_search(evaluate: Callable[[np.ndarray, int], MomentBatch], theta0, target, config: FitConfig,
                  method: str = "gmm", callback=None) -> SearchResult:
    """Damped Newton search for theta solving E_theta h = target.

    ``method="mom"`` uses the square Jacobian directly and stops on the
    Hotelling statistic m' cov(h)^{-1} m; ``"gmm"`` uses the weighted normal
    equations and stops on the Newton decrement s'(J'WJ)^{-1}s with
    s = J'Wm (the two coincide when h = g).
    """
    eps = config.tolerance(method)
    square = method == "mom"
    target = np.asarray(target, dtype=float)
    theta = np.asarray(theta0, dtype=float).copy()
    alpha = config.alpha0
    prev = None  # (theta, m, W, direction, alpha used)
    trace, thetas, accepted, pairs = [], [], [], []
    best = (np.inf, theta.copy())
    converged = False
    it = 0

    def backtrack(it, why):
        # retry the previous step at a shorter length
        nonlocal theta, prev, alpha
        p_theta, p_m, p_W, p_dir, p_alpha = prev
        alpha = config.beta1 * p_alpha
        log.debug("iteration %d: %s, alpha -> %.3g", it, why, alpha)
        theta = p_theta + alpha * p_dir
        prev = (p_theta, p_m, p_W, p_dir, alpha)
        trace.append(np.nan)
        accepted.append(False)
        if callback:
            callback(it, theta, None)

    for it in range(config.max_iters):
        batch = evaluate(theta, it)
        m = target - batch.mean
        thetas.append(theta.copy())
        pair = None
        if prev is not None:
            p_m, p_W = prev[1], prev[2]
            old, new = float(p_m @ p_W @ p_m), float(m @ p_W @ m)
            if not new <= old:
                backtrack(it, f"objective rose {old:.4g} -> {new:.4g}")
                continue
            pair = (old, new)
        try:
            W = ridge_inverse(batch.cov)
            direction, crit = _direction(batch, m, W, square)
        except SingularMatrixError:
            if prev is None:
                raise
            # degenerate draws at the trial point count as an objective increase
            backtrack(it, "singular Jacobian")
            continue
        if pair is not None:
            pairs.append(pair)
        accepted.append(True)
        trace.append(crit)
        if callback:
            callback(it, theta, crit)
        log.debug("iteration %d: criterion %.4g", it, crit)
        if crit < best[0]:
            best = (crit, theta.copy())
        if crit < eps:
            converged = True
            break
        prev = (theta.copy(), m, W, direction, alpha)
        theta = theta + alpha * direction
        alpha = min(1.0, config.beta2 * alpha)
    if converged:
        final = theta
    else:
        final = best[1]
        log.warning("moment search stopped after %d iterations without reaching criterion < %g", it + 1, eps)
    return SearchResult(final, converged, it + 1, trace, thetas, accepted, pairs)


def mom_covariance(batch: MomentBatch) -> np.ndarray:
    Jinv = np.linalg.inv(batch.jacobian)
    C = Jinv @ batch.cov @ Jinv.T
    return (C + C.T) / 2


def gmm_covariance(batch: MomentBatch) -> np.ndarray:
    J = batch.jacobian
    W = ridge_inverse(batch.cov)
    bread = np.linalg.inv(J.T @ W @ J)
    C = bread @ J.T @ W @ batch.cov @ W @ J @ bread
    return (C + C.T) / 2


# -- Monte Carlo fits --------------------------------------------------------

def _start(observed, model, config: FitConfig):
    if config.theta0 is not None:
        theta0 = np.asarray(config.theta0, dtype=float)
        if theta0.size != len(model.terms):
            raise ValueError(f"theta0 has {theta0.size} entries for {len(model.terms)} terms")
        return theta0
    init = variational_fit(observed, model, config.variational_r, config.master_seed, config.threads)
    return init.theta


def _evaluator(model: ModelSpec, stats, config: FitConfig, as_model_stats: bool):
    def evaluate(theta, it):
        m = model.with_theta(theta)
        if as_model_stats:
            b = simulate_stats(m, config.r, config.master_seed, threads=config.threads, stream=(it,))
            return batch_from_stats(b.g, b.g, b.G)
        b = simulate_stats(m, config.r, config.master_seed, moments=stats, threads=config.threads, stream=(it,))
        return batch_from_stats(b.h, b.g, b.G)
    return evaluate


def mom_fit(observed: Graph, model: ModelSpec, config: FitConfig | None = None) -> FitResult:
    """Method of moments: solve g(y) = E_theta g(Y) by simulated, damped Newton steps."""
    config = config or FitConfig()
    _check_graph(observed, model)
    bad = [t.label for t in model.terms if not observable(t, model)]
    if bad:
        raise ValueError(f"terms {bad} depend on the edge order, so g(y) is unobserved; use gmm_fit with "
                         f"order-independent moment statistics instead")
    target = observed_values(model.terms, observed, model)
    theta0 = _start(observed, model, config)
    evaluate = _evaluator(model, None, config, True)
    try:
        res = moment_search(evaluate, theta0, target, config, "mom")
        final = evaluate(res.theta, config.max_iters + 1)
        cov = mom_covariance(final)
    except (SingularMatrixError, np.linalg.LinAlgError) as exc:
        raise SingularMatrixError(f"moment Jacobian is singular: {exc}") from exc
    return FitResult("mom", model.labels_of_terms, res.theta, cov, target - final.mean, res.trace, res.converged,
                     res.iterations, target, model.labels_of_terms, res.theta_trace, config.tolerance("mom"))


def gmm_fit(observed: Graph, model: ModelSpec, moments: MomentSpec, config: FitConfig | None = None) -> FitResult:
    """Continuously updated GMM on order-independent statistics h(y)."""
    config = config or FitConfig()
    _check_graph(observed, model)
    moments.validate(model)
    target = observed_values(moments.stats, observed, model)
    theta0 = _start(observed, model, config)
    evaluate = _evaluator(model, moments.stats, config, False)
    try:
        res = moment_search(evaluate, theta0, target, config, "gmm")
        final = evaluate(res.theta, config.max_iters + 1)
        cov = gmm_covariance(final)
    except (SingularMatrixError, np.linalg.LinAlgError) as exc:
        raise SingularMatrixError(f"GMM normal matrix is singular: {exc}") from exc
    return FitResult("gmm", model.labels_of_terms, res.theta, cov, target - final.mean, res.trace, res.converged,
                     res.iterations, target, moments.labels, res.theta_trace, config.tolerance("gmm"))


def fit(observed: Graph, model: ModelSpec, method: str, moments: MomentSpec | None = None,
        config: FitConfig | None = None) -> FitResult:
    config = config or FitConfig()
    if method == "variational":
        return variational_fit(observed, model, config.variational_r, config.master_seed, config.threads)
    if method == "mom":
        return mom_fit(observed, model, config)
    if method == "gmm":
        if moments is None:
            raise ValueError("gmm needs moment statistics")
        return gmm_fit(observed, model, moments, config)
    raise ValueError(f"unknown fitting method {method!r}")


# -- exact diagnostics -------------------------------------------------------

def exact_evaluator(model: ModelSpec, stats=None):
    """Oracle-exact ``evaluate`` for :func:`moment_search` on tiny graphs."""
    from .oracle import Enumeration

    enum = Enumeration(model)

    def evaluate(theta, it=0):
        law = enum.law(theta)
        if stats is None:
            w = law.leaf_weights
            H = law.leaf_g
            mean = np.einsum("ol,olk->k", w, H)
            Z = H - mean
            cov = np.einsum("ol,olk,olj->kj", w, Z, Z)
            return MomentBatch(mean, law.jacobian(), cov)
        return MomentBatch(law.expect(stats), law.jacobian(stats), law.cov_h(stats))
    return evaluate


def mom_gradient_check(model: ModelSpec, theta=None, delta: float = 1e-4) -> dict:
    """Compare the covariance form of dm/dtheta with central differences of the exact E g."""
    from .oracle import Enumeration

    theta = model.theta if theta is None else np.asarray(theta, dtype=float)
    enum = Enumeration(model)
    J = enum.law(theta).jacobian()
    fd = np.empty_like(J)
    for j in range(theta.size):
        e = np.zeros_like(theta)
        e[j] = delta
        fd[:, j] = -(enum.law(theta + e).E_g - enum.law(theta - e).E_g) / (2 * delta)
    return {"jacobian": J, "finite_difference": fd, "max_abs_discrepancy": float(np.max(np.abs(J - fd)))}

