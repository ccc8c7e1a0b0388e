"""Logistic link primitives and unpenalized fits on a restricted support."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, sparse
from scipy.special import expit

from .config import SolverConfig
from .errors import ConvergenceError, SeparationError, SingularityError

RIDGE_STEPS = (1e-10, 1e-8)


def logistic(t):
    """Lambda(t) = 1 / (1 + exp(-t))."""
    return expit(t)


def logistic_deriv(t):
    """Lambda'(t) = Lambda(t) Lambda(-t); never exceeds 1/4."""
    return expit(t) * expit(-t)


def logistic_deriv2(t):
    return logistic_deriv(t) * (1.0 - 2.0 * expit(t))


def softplus(t):
    """log(1 + exp(t)) without overflow."""
    t = np.asarray(t, dtype=float)
    pos = t > 0
    out = np.empty_like(t)
    out[pos] = t[pos] + np.log1p(np.exp(-t[pos]))
    out[~pos] = np.log1p(np.exp(t[~pos]))
    return out if out.ndim else float(out)


def logit_loss(y, eta) -> float:
    """Sum over observations of -y*eta + log(1 + exp(eta))."""
    return float(np.sum(softplus(eta) - y * eta))


def dense_columns(X, cols) -> np.ndarray:
    cols = np.asarray(cols, dtype=np.intp)
    if sparse.issparse(X):
        return np.asarray(X[:, cols].toarray(), dtype=float)
    return np.asarray(X[:, cols], dtype=float)


@dataclass(frozen=True)
class RestrictedFit:
    beta: np.ndarray
    support: np.ndarray
    converged: bool
    iterations: int
    final_gradient_norm: float


def _as_support(support, p: int) -> np.ndarray:
    s = np.unique(np.asarray(list(support) if not isinstance(support, np.ndarray) else support,
                             dtype=np.intp))
    if s.size and (s[0] < 0 or s[-1] >= p):
        raise IndexError(f"support index out of range for p={p}")
    return s


def _solve_psd(A: np.ndarray, b: np.ndarray, what: str) -> np.ndarray:
    """Solve A x = b for symmetric PSD A, escalating a relative ridge on failure."""
    scale = float(np.mean(np.diag(A))) if A.size else 0.0
    if not scale > 0 or not np.isfinite(scale):
        raise SingularityError("normal equations have zero or non-finite diagonal",
                               subproblem=what)
    for ridge in (0.0, *RIDGE_STEPS):
        M = A + ridge * scale * np.eye(A.shape[0]) if ridge else A
        try:
            c = linalg.cho_factor(M, lower=True, check_finite=False)
        except linalg.LinAlgError:
            continue
        x = linalg.cho_solve(c, b, check_finite=False)
        # one step of iterative refinement against the unridged system
        x = x + linalg.cho_solve(c, b - A @ x, check_finite=False)
        if np.all(np.isfinite(x)):
            return x
    raise SingularityError("rank-deficient even after ridge escalation", subproblem=what)


def fit_restricted_logit_arrays(X, y, G: int, support, config: SolverConfig | None = None,
                                start: np.ndarray | None = None) -> RestrictedFit:
    """Pooled logit MLE with coefficients outside ``support`` fixed at zero.

    Minimizes (1/G) sum{-y x'b + log(1 + exp(x'b))} by damped Newton.
    """
    cfg = config or SolverConfig()
    p = X.shape[1]
    S = _as_support(support, p)
    beta = np.zeros(p)
    if S.size == 0:
        return RestrictedFit(beta, S, True, 0, 0.0)
    XS = dense_columns(X, S)
    b = np.zeros(S.size) if start is None else np.array(start, dtype=float)[S]
    eta = XS @ b
    obj = logit_loss(y, eta) / G
    name = f"restricted-logit |S|={S.size}"
    gnorm = np.inf
    for it in range(1, cfg.max_newton + 1):
        mu = expit(eta)
        grad = XS.T @ (mu - y) / G
        gnorm = float(np.max(np.abs(grad)))
        if gnorm <= cfg.grad_tol:
            beta[S] = b
            return RestrictedFit(beta, S, True, it - 1, gnorm)
        w = mu * (1.0 - mu)
        H = (XS * w[:, None]).T @ XS / G
        step = _solve_psd(H, grad, name)
        t = 1.0
        for _ in range(50):
            b_new = b - t * step
            eta_new = XS @ b_new
            obj_new = logit_loss(y, eta_new) / G
            if obj_new <= obj + 1e-15 * max(1.0, abs(obj)):
                break
            t *= 0.5
        else:
            b_new, eta_new, obj_new = b, eta, obj
        change = float(np.max(np.abs(b_new - b)))
        b, eta, obj = b_new, eta_new, obj_new
        if np.max(np.abs(b)) > cfg.separation_cap:
            raise SeparationError(
                f"coefficient norm exceeds {cfg.separation_cap}; data look separated",
                subproblem=name)
        if change < cfg.newton_tol:
            grad = XS.T @ (expit(eta) - y) / G
            gnorm = float(np.max(np.abs(grad)))
            if gnorm <= 1e-8:
                beta[S] = b
                return RestrictedFit(beta, S, True, it, gnorm)
    raise ConvergenceError(f"Newton did not converge (gradient {gnorm:.3e})", subproblem=name,
                           final_gradient_norm=gnorm)


def fit_restricted_logit(ds, support, config: SolverConfig | None = None,
                         start: np.ndarray | None = None) -> RestrictedFit:
    return fit_restricted_logit_arrays(ds.X, ds.y, ds.G, support, config, start)


def fit_restricted_wls(y, X, weights, support, G: int = 1) -> RestrictedFit:
    """Weighted least squares (1/G) sum w (y - x'b)^2 over coefficients in ``support``.

    All-zero weights raise ``SingularityError``.
    """
    y = np.asarray(y, dtype=float)
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    p = X.shape[1]
    S = _as_support(support, p)
    beta = np.zeros(p)
    if S.size == 0:
        return RestrictedFit(beta, S, True, 0, 0.0)
    if not np.any(w > 0):
        raise SingularityError("all weights are zero", subproblem="restricted-wls")
    XS = dense_columns(X, S)
    XW = XS * w[:, None]
    b = _solve_psd(XW.T @ XS, XW.T @ y, f"restricted-wls |S|={S.size}")
    beta[S] = b
    grad = -2.0 * XW.T @ (y - XS @ b) / G
    return RestrictedFit(beta, S, True, 1, float(np.max(np.abs(grad))))
