"""End-to-end acceptance checks, one test per criterion.

Each test reports a single PASS/FAIL line through the ``record`` fixture;
the lines are repeated in the terminal summary.
"""

import time

import numpy as np
import pytest
import statsmodels.api as sm

from conftest import model
from lolog import OrderSpec, make_term, sample_graph
from lolog.estimate import (FitConfig, MomentSpec, exact_evaluator, gmm_fit, mom_fit, mom_gradient_check,
                            moment_search, variational_fit)
from lolog.gof import gof_run
from lolog.graph import dyad_index
from lolog.oracle import Enumeration, exact_law
from lolog.sampler import cond_log_lik, draw_graph, replicate_rng

pytestmark = pytest.mark.slow

PA = OrderSpec.vertex_entry()


def _mean_degree(m, sims, seed):
    deg = [2 * draw_graph(m, replicate_rng(seed, i)).edges.shape[0] / m.n for i in range(sims)]
    return float(np.mean(deg)), float(np.std(deg, ddof=1) / np.sqrt(sims))


def test_oracle_normalization(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    colour = {"colour": np.array([0, 1, 0])}
    cases = [
        model(["edges", "triangles"], [0, 0], 3),
        model(["edges", make_term("nodematch", attr="colour")], [0, 0], 3, attrs=colour),
        model(["edges", "pref-attach", "shared-nbrs"], [0, 0, 0], 3, order=PA),
        model(["edges", "triangles", "two-stars"], [0, 0, 0], 4),
    ]
    worst = 0.0
    for m in cases:
        enum = Enumeration(m)
        for _ in range(5):
            law = enum.law(rng.normal(0, 1.5, len(m.terms)))
            worst = max(worst, abs(law.probs.sum() - 1), abs(law.total - 1))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-10 and elapsed < 10
    record(1, ok, f"max |sum p - 1| = {worst:.2e}, {elapsed:.1f}s")
    assert ok


def test_sampler_exactness(record):
    t0 = time.perf_counter()
    m = model(["edges", "triangles"], [0.5, 1.0], 3)
    law = exact_law(m)
    rng = np.random.default_rng(202)
    draws = 200_000
    bit = {(i, j): 1 << dyad_index(3, False, i, j) for i in range(3) for j in range(i + 1, 3)}
    counts = np.zeros(law.probs.size)
    for _ in range(draws):
        key = 0
        for i, j in sample_graph(m, rng).edges.tolist():
            key |= bit[(min(i, j), max(i, j))]
        counts[key] += 1
    tv = 0.5 * np.abs(counts / draws - law.probs).sum()
    elapsed = time.perf_counter() - t0
    ok = tv < 0.01 and elapsed < 30
    record(2, ok, f"TV = {tv:.4f} over {draws} draws, {elapsed:.1f}s")
    assert ok


def test_derivative_identities(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(303)
    worst_a = 0.0
    cases = [
        model(["edges", "triangles", "two-stars"], [-0.3, 0.4, 0.1], 7),
        model(["edges", "pref-attach", "shared-nbrs"], [0.2, 0.8, -0.2], 7, order=PA),
    ]
    for m in cases:
        for _ in range(3):
            draw = sample_graph(m, rng, keep_order=True)
            theta = m.theta + rng.normal(0, 0.3, m.theta.size)
            mt = m.with_theta(theta)
            _, g, G = cond_log_lik(mt, draw.graph, draw.order)
            fd = np.empty_like(theta)
            for j in range(theta.size):
                e = np.zeros_like(theta)
                e[j] = 1e-5
                up = cond_log_lik(m.with_theta(theta + e), draw.graph, draw.order)[0]
                down = cond_log_lik(m.with_theta(theta - e), draw.graph, draw.order)[0]
                fd[j] = (up - down) / 2e-5
            worst_a = max(worst_a, float(np.max(np.abs(fd - (g - G)))))
    worst_b = 0.0
    for m in [model(["edges", "triangles"], [0.3, -0.5], 4),
              model(["edges", "pref-attach", "shared-nbrs"], [-0.2, 0.7, 0.4], 3, order=PA)]:
        worst_b = max(worst_b, mom_gradient_check(m)["max_abs_discrepancy"])
    elapsed = time.perf_counter() - t0
    ok = worst_a < 1e-6 and worst_b < 1e-5 and elapsed < 10
    record(3, ok, f"(a) {worst_a:.1e}  (b) {worst_b:.1e}, {elapsed:.1f}s")
    assert ok


def _monotone(means, ses, sign):
    """Strict monotonicity with at most one tie.

    A step is a tie when it goes the wrong way (or nowhere) by less than two
    standard errors of the difference.
    """
    ties = 0
    for a, b, sa, sb in zip(means, means[1:], ses, ses[1:]):
        step = sign * (b - a)
        if step > 0:
            continue
        if -step <= 2 * np.hypot(sa, sb):
            ties += 1
        else:
            return False
    return ties <= 1


def test_growth_mean_degree(record):
    t0 = time.perf_counter()
    sizes = (2000, 4000, 8000, 16000)
    res = {}
    for theta in [(0.0, 1.0), (-4.0, 0.5), (3.0, 1.5)]:
        for n in sizes:
            m = model(["edges", "pref-attach"], theta, n, order=PA)
            res[theta, n] = _mean_degree(m, 12, seed=n)
    elapsed = time.perf_counter() - t0
    lo, hi = res[(0.0, 1.0), 2000][0], res[(0.0, 1.0), 16000][0]
    up = [res[(-4.0, 0.5), n] for n in sizes]
    down = [res[(3.0, 1.5), n] for n in sizes]
    ok_vals = abs(lo - 2.03) <= 0.15 and abs(hi - 1.98) <= 0.15
    ok_up = _monotone([u[0] for u in up], [u[1] for u in up], +1)
    ok_down = _monotone([d[0] for d in down], [d[1] for d in down], -1)
    ok = ok_vals and ok_up and ok_down and elapsed < 300
    fmt = lambda seq: " ".join(f"{x[0]:.2f}" for x in seq)
    record(4, ok, f"(0,1): {lo:.2f}/{hi:.2f}; (-4,.5): {fmt(up)}; (3,1.5): {fmt(down)}; {elapsed:.0f}s")
    assert ok


def test_expected_degree_law(record):
    got = {}
    for t1, want, tol in [(0.0, 2.0, 0.15), (np.log(1.5), 3.0, 0.2)]:
        m = model(["edges", "pref-attach"], [t1, 1.0], 4000, order=PA)
        got[want] = (_mean_degree(m, 12, seed=55)[0], tol)
    ok = all(abs(v - w) <= tol for w, (v, tol) in got.items())
    record(5, ok, ", ".join(f"target {w:.1f}: {v:.3f}" for w, (v, _) in got.items()))
    assert ok


def test_dyad_independence_equivalence(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(606)
    n = 200
    attrs = {"group": rng.integers(0, 3, n)}
    m = model(["edges", make_term("nodematch", attr="group")], [-2.5, 1.2], n, attrs=attrs)
    g = sample_graph(m, replicate_rng(606, 0)).graph
    var = variational_fit(g, m, r=2)
    iu, ju = np.triu_indices(n, 1)
    X = np.column_stack([np.ones(iu.size), attrs["group"][iu] == attrs["group"][ju]]).astype(float)
    y = np.zeros(iu.size)
    y[[dyad_index(n, False, i, j) for i, j in g.edges().tolist()]] = 1
    mle = sm.Logit(y, X).fit(method="newton", tol=1e-14, maxiter=100, disp=0).params
    gap_var = float(np.max(np.abs(var.theta - mle)))
    r = 2000
    worst = 0.0
    for name, theta0 in [("warm", None), ("cold", [0.0, 0.0])]:
        cfg = FitConfig(r=r, master_seed=7, theta0=theta0)
        for res in (mom_fit(g, m, cfg), gmm_fit(g, m, MomentSpec(m.terms), cfg)):
            mc_se = res.se / np.sqrt(r)
            worst = max(worst, float(np.max(np.abs(res.theta - mle) / mc_se)))
    elapsed = time.perf_counter() - t0
    ok = gap_var < 1e-8 and worst <= 3 and elapsed < 120
    record(6, ok, f"|variational - MLE| = {gap_var:.1e}, MOM/GMM within {worst:.2f} MC SE, {elapsed:.0f}s")
    assert ok


def test_self_consistency(record):
    t0 = time.perf_counter()
    reps = 20
    tri = model(["edges", "triangles"], [-4.5, 0.7], 500)
    pa = model(["edges", "pref-attach"], [0.0, 1.0], 500, order=PA)
    h = MomentSpec((make_term("edges"), make_term("two-stars"), make_term("degree", k=1)))
    hits = {"mom": 0, "gmm": 0}
    for rep in range(reps):
        g = sample_graph(tri, replicate_rng(77, rep)).graph
        res = mom_fit(g, tri, FitConfig(r=150, master_seed=rep))
        hits["mom"] += bool(np.all(np.abs(res.theta - tri.theta) <= 3 * res.se))
        g = sample_graph(pa, replicate_rng(78, rep)).graph
        res = gmm_fit(g, pa, h, FitConfig(r=150, master_seed=rep))
        hits["gmm"] += bool(np.all(np.abs(res.theta - pa.theta) <= 3 * res.se))
    elapsed = time.perf_counter() - t0
    ok = min(hits.values()) >= 0.9 * reps and elapsed < 900
    record(7, ok, f"triangle MOM {hits['mom']}/{reps}, pref-attach GMM {hits['gmm']}/{reps}, {elapsed:.0f}s")
    assert ok


def test_gmm_descent(record):
    rng = np.random.default_rng(808)
    m = model(["edges", "pref-attach"], [0.0, 0.0], 3, order=PA)
    stats = (make_term("edges"), make_term("two-stars"), make_term("triangles"))
    evaluate = exact_evaluator(m, stats)
    bad, fd_gap = 0, 0.0
    for _ in range(50):
        theta = rng.normal(0, 1.5, 2)
        A = rng.normal(size=(3, 3))
        W = A @ A.T + 0.1 * np.eye(3)
        target = rng.uniform(0, 3, 3)
        b = evaluate(theta)
        mres = target - b.mean
        J = b.jacobian
        d = -np.linalg.solve(J.T @ W @ J, J.T @ W @ mres)
        slope = 2 * mres @ W @ J @ d

        def Q(t):
            r_ = target - evaluate(t).mean
            return r_ @ W @ r_

        fd = (Q(theta + 1e-6 * d) - Q(theta - 1e-6 * d)) / 2e-6
        fd_gap = max(fd_gap, abs(fd - slope) / max(1.0, abs(slope)))
        bad += not (slope < 0 and fd < 0)
    increases = 0
    for k in range(5):
        truth = rng.normal(0, 1, 2)
        res = moment_search(evaluate, rng.normal(0, 2, 2), evaluate(truth).mean,
                            FitConfig(r=2, epsilon=1e-12, max_iters=40), "gmm")
        increases += sum(new > old for old, new in res.objective_pairs)
    ok = bad == 0 and fd_gap < 1e-4 and increases == 0
    record(8, ok, f"{bad}/50 non-descent directions, FD gap {fd_gap:.1e}, {increases} accepted increases")
    assert ok


def test_gof_calibration(record):
    # each graph is refit and then checked against simulations from its own fit
    t0 = time.perf_counter()
    truth = model(["edges", "pref-attach"], [0.0, 1.0], 200, order=PA)
    h = MomentSpec((make_term("edges"), make_term("two-stars"), make_term("degree", k=1)))
    graphs = 40
    inside = total = 0
    for i in range(graphs):
        y = draw_graph(truth, replicate_rng(909, i)).graph
        theta = gmm_fit(y, truth, h, FitConfig(r=100, max_iters=40, master_seed=i)).theta
        for rep in gof_run(theta, truth, y, r=200, seed=911 + i):
            keep = rep.simulated.mean(axis=0) >= 5
            inside += int(rep.inside_envelope()[keep].sum())
            total += int(keep.sum())
    frac = inside / total
    elapsed = time.perf_counter() - t0
    ok = frac >= 0.9
    record(9, ok, f"{inside}/{total} bins inside the 5-95% envelope ({frac:.3f}) over {graphs} graphs, {elapsed:.0f}s")
    assert ok


def test_lazega_fits(record):
    record(10, None, "skipped: Lazega network not bundled")
    pytest.skip("Lazega network is not bundled with the package")
