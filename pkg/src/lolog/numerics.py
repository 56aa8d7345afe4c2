"""Small dense linear algebra and logistic regression helpers."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla


class SingularMatrixError(np.linalg.LinAlgError):
    pass


class SeparationWarning(UserWarning):
    pass


class RidgeWarning(UserWarning):
    pass


def solve(A, b, rtol: float = 1e-12) -> np.ndarray:
    """Solve ``A x = b`` by pivoted LU; raises on (numerically) singular ``A``."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise ValueError("non-finite input to solve")
    scale = np.max(np.abs(A)) if A.size else 0.0
    if scale == 0.0:
        raise SingularMatrixError("zero matrix")
    with warnings.catch_warnings():
        # singularity is judged by the pivot test below
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(A, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if np.min(pivots) < rtol * scale:
        raise SingularMatrixError(f"matrix is singular to tolerance (min pivot {np.min(pivots):.3g})")
    return sla.lu_solve((lu, piv), b, check_finite=False)


def sample_cov(X) -> np.ndarray:
    """Unbiased covariance of the columns of ``X`` (rows are replicates)."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] < 2:
        raise ValueError("need at least two rows for a sample covariance")
    Z = X - X.mean(axis=0)
    C = Z.T @ Z / (X.shape[0] - 1)
    return (C + C.T) / 2


def cross_cov(X, Y) -> np.ndarray:
    """C[k, j] = cov(X[:, k], Y[:, j]) with divisor r - 1."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape[0] != Y.shape[0]:
        raise ValueError("row counts differ")
    if X.shape[0] < 2:
        raise ValueError("need at least two rows for a sample covariance")
    return (X - X.mean(axis=0)).T @ (Y - Y.mean(axis=0)) / (X.shape[0] - 1)


def ridge_cholesky(C, lam: float = 1e-8, warn_above: float = 1e-4):
    """Cholesky factor of ``C + lam * mean(diag) * I``, escalating ``lam`` by 10x until it succeeds.

    Returns (factor, lam_used).
    """
    C = np.asarray(C, dtype=float)
    if not np.all(np.isfinite(C)):
        raise ValueError("non-finite covariance")
    p = C.shape[0]
    scale = float(np.mean(np.diag(C))) if p else 0.0
    if scale <= 0.0:
        scale = 1.0
    while lam < 1e6:
        try:
            factor = sla.cho_factor(C + lam * scale * np.eye(p), lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            lam *= 10.0
            continue
        if lam > warn_above:
            warnings.warn(f"covariance needed ridge {lam:.1e} to become positive definite", RidgeWarning,
                          stacklevel=2)
        return factor, lam
    raise SingularMatrixError("covariance could not be regularized")


def ridge_inverse(C, lam: float = 1e-8) -> np.ndarray:
    factor, _ = ridge_cholesky(C, lam)
    inv = sla.cho_solve(factor, np.eye(np.asarray(C).shape[0]), check_finite=False)
    return (inv + inv.T) / 2


def hotelling_t2(resid, cov) -> float:
    """resid' cov^{-1} resid, with the ridge applied to ``cov``."""
    resid = np.asarray(resid, dtype=float).reshape(-1)
    if not np.all(np.isfinite(resid)):
        raise ValueError("non-finite residual")
    factor, _ = ridge_cholesky(np.atleast_2d(cov))
    return float(max(resid @ sla.cho_solve(factor, resid, check_finite=False), 0.0))


@dataclass
class LogisticFit:
    coef: np.ndarray
    cov: np.ndarray
    loglik: float
    iterations: int
    converged: bool
    separated: bool
    loglik_trace: list


def _loglik(X, y, w, beta):
    eta = X @ beta
    # y*eta - log(1 + e^eta)
    return float(np.sum(w * (y * eta - np.logaddexp(0.0, eta))))


def irls_logistic(X, y, weights=None, max_iter: int = 100, tol: float = 1e-8,
                  separation_bound: float = 30.0) -> LogisticFit:
    """Weighted logistic regression by Newton/IRLS with step halving.

    Converges when max |score| < ``tol``. Separation is reported when a
    coefficient exceeds ``separation_bound`` in magnitude or the fit becomes
    perfect; the fit is still returned.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float).reshape(-1)
    if X.ndim != 2 or X.shape[0] != y.size or w.size != y.size:
        raise ValueError("inconsistent design dimensions")
    zero_cols = np.flatnonzero(np.all(X == 0, axis=0))
    if zero_cols.size:
        raise ValueError(f"design columns {zero_cols.tolist()} are identically zero")
    beta = np.zeros(X.shape[1])
    ll = _loglik(X, y, w, beta)
    trace = [ll]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        eta = X @ beta
        mu = np.exp(-np.logaddexp(0.0, -eta))
        score = X.T @ (w * (y - mu))
        if np.max(np.abs(score)) < tol:
            converged = True
            it -= 1
            break
        info = (X * (w * mu * (1 - mu))[:, None]).T @ X
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(info, score, rcond=None)[0]
        alpha = 1.0
        while True:
            cand = beta + alpha * step
            ll_new = _loglik(X, y, w, cand)
            if ll_new >= ll - 1e-12 * max(1.0, abs(ll)) or alpha < 1e-10:
                break
            alpha /= 2
        if ll_new < ll:
            # no ascent possible at machine precision
            converged = True
            break
        beta, ll = cand, ll_new
        trace.append(ll)
    eta = X @ beta
    mu = np.exp(-np.logaddexp(0.0, -eta))
    info = (X * (w * mu * (1 - mu))[:, None]).T @ X
    cov = np.linalg.pinv(info)
    cov = (cov + cov.T) / 2
    separated = bool(np.any(np.abs(beta) > separation_bound) or np.all(np.abs(y - mu) < 1e-6))
    if separated:
        warnings.warn("logistic fit shows (quasi-)separation; coefficients diverge", SeparationWarning,
                      stacklevel=2)
    return LogisticFit(beta, cov, ll, it, converged, separated, trace)
