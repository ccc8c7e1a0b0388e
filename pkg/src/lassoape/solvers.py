"""Loading-weighted lasso solvers: lasso logit and weighted least-squares lasso.

Objectives (averaged over clusters):

    logit:        (1/G) sum {-y x'b + log(1 + e^{x'b})} + (lam/G) sum_j l_j |b_j|
    weighted-ls:  (1/G) sum w (y - x'b)^2 + 2 (lam/G) sum_j l_j |b_j|

A zero loading leaves that coordinate unpenalized.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.special import expit

from ._cd import cd_dense, cd_sparse
from .config import SolverConfig
from .errors import ConvergenceError, DomainError, ShapeError
from .logistic import logit_loss
from .penalty import PenaltyLoadings, problem_columns

SNAP = 1e-12


@dataclass(frozen=True)
class LassoProblem:
    kind: str  # "logit" | "weighted-ls"
    X: np.ndarray | sparse.csc_matrix
    y: np.ndarray
    penalty: PenaltyLoadings
    G: int
    weights: np.ndarray | None = None
    excluded_col: int | None = None
    factor: float | None = None  # multiplier on the penalty; default 1 (logit) / 2 (weighted-ls)

    def __post_init__(self):
        if self.kind not in ("logit", "weighted-ls"):
            raise ValueError(f"unknown problem kind {self.kind!r}")
        if self.penalty.loadings.shape != (self.columns.size,):
            raise ShapeError(f"penalty has {self.penalty.loadings.size} loadings, "
                             f"problem has {self.columns.size} columns")

    @property
    def columns(self) -> np.ndarray:
        return problem_columns(self.X.shape[1], self.excluded_col)

    @property
    def penalty_factor(self) -> float:
        if self.factor is not None:
            return self.factor
        return 1.0 if self.kind == "logit" else 2.0

    def expand(self, coef: np.ndarray) -> np.ndarray:
        full = np.zeros(self.X.shape[1])
        full[self.columns] = coef
        return full

    def gradient(self, coef: np.ndarray) -> np.ndarray:
        """Gradient of the smooth (averaged) loss over the problem's columns."""
        eta = self.X @ self.expand(coef)
        if self.kind == "logit":
            resid = expit(eta) - self.y
        else:
            resid = -2.0 * self.weights * (self.y - eta)
        g = self.X.T @ resid
        return np.asarray(g).ravel()[self.columns] / self.G

    def objective(self, coef: np.ndarray) -> float:
        eta = self.X @ self.expand(coef)
        if self.kind == "logit":
            smooth = logit_loss(self.y, eta)
        else:
            smooth = float(self.weights @ (self.y - eta) ** 2)
        pen = self.penalty_factor * self.penalty.lam * float(self.penalty.loadings @ np.abs(coef))
        return (smooth + pen) / self.G


@dataclass(frozen=True)
class SelectionFit:
    coef: np.ndarray
    support: np.ndarray
    objective: float
    kkt_violation: float
    iterations: int
    history: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))


@dataclass(frozen=True)
class KKTReport:
    violations: list[tuple[int, float]]
    max_violation: float

    @property
    def ok(self) -> bool:
        return not self.violations


def kkt_violations(problem: LassoProblem, coef: np.ndarray) -> np.ndarray:
    """Per-coordinate subgradient violation (0 where the optimality condition holds)."""
    g = problem.gradient(coef)
    thr = problem.penalty_factor * problem.penalty.lam * problem.penalty.loadings / problem.G
    viol = np.where(coef != 0, np.abs(g + np.sign(coef) * thr), np.maximum(np.abs(g) - thr, 0.0))
    return viol


def kkt_check(fit: SelectionFit, problem: LassoProblem, tol: float = 1e-6) -> KKTReport:
    viol = kkt_violations(problem, fit.coef)
    bad = np.flatnonzero(viol > tol)
    return KKTReport([(int(j), float(viol[j])) for j in bad],
                     float(viol.max()) if viol.size else 0.0)


def _check_design(X):
    data = X.data if sparse.issparse(X) else X
    if not np.all(np.isfinite(data)):
        raise DomainError("design contains NaN or infinite values")


def _prep(X):
    if sparse.issparse(X):
        Xc = sparse.csc_matrix(X, dtype=float)
        Xc.sort_indices()
        return Xc
    return np.asfortranarray(X, dtype=float)


def _xwx(X, w):
    if sparse.issparse(X):
        return np.asarray(X.multiply(X).T @ w).ravel()
    return w @ (X * X)


def _run_cd(X, w, r, beta, thresh, skip, max_sweeps, tol):
    xwx = _xwx(X, w)
    hist = np.empty(max_sweeps)
    if sparse.issparse(X):
        k = cd_sparse(X.indptr.astype(np.int64), X.indices.astype(np.int64), X.data, w, r, beta,
                      thresh, skip, xwx, max_sweeps, tol, hist)
    else:
        k = cd_dense(X, w, r, beta, thresh, skip, xwx, max_sweeps, tol, hist)
    return k, hist[:k], xwx


def _expand_thresholds(p, cols, values):
    thr = np.zeros(p)
    thr[cols] = values
    skip = np.ones(p, dtype=np.bool_)
    skip[cols] = False
    return thr, skip


def _finish(problem: LassoProblem, coef: np.ndarray, iterations: int, history) -> SelectionFit:
    coef = np.where(np.abs(coef) < SNAP, 0.0, coef)
    viol = kkt_violations(problem, coef)
    return SelectionFit(coef, np.flatnonzero(coef), problem.objective(coef),
                        float(viol.max()) if viol.size else 0.0, iterations, np.asarray(history))


def solve_weighted_lasso(y, X, weights, penalty: PenaltyLoadings, excluded_col: int | None = None,
                         *, G: int | None = None, config: SolverConfig | None = None,
                         start: np.ndarray | None = None, factor: float = 2.0) -> SelectionFit:
    """Minimize (1/G) sum w (y - x'g)^2 + factor (lam/G) sum l_j |g_j| by coordinate descent.

    Coefficients are indexed over the columns of X other than ``excluded_col``.
    """
    cfg = config or SolverConfig()
    X = _prep(X)
    _check_design(X)
    y = np.asarray(y, dtype=float)
    w = np.asarray(weights, dtype=float)
    if np.any(w <= 0):
        raise DomainError("weighted lasso needs strictly positive weights")
    G = X.shape[0] if G is None else G
    problem = LassoProblem("weighted-ls", X, y, penalty, G, w, excluded_col, factor)
    cols = problem.columns
    p = X.shape[1]
    thr, skip = _expand_thresholds(p, cols, 0.5 * factor * penalty.thresholds)
    beta = np.zeros(p) if start is None else problem.expand(np.asarray(start, dtype=float))
    r = y - X @ beta
    scale = float(np.sqrt(np.max(_xwx(X, w)[cols]))) if cols.size else 1.0
    tol_cd = max(G * cfg.tol / (20.0 * max(scale, 1e-300)), 1e-14)
    total, hist = 0, []
    for _ in range(6):
        k, h, _ = _run_cd(X, w, r, beta, thr, skip, cfg.max_sweeps, tol_cd)
        total += k
        hist.extend(2.0 * h / G)
        coef = beta[cols]
        if kkt_violations(problem, np.where(np.abs(coef) < SNAP, 0.0, coef)).max(initial=0.0) <= cfg.tol:
            return _finish(problem, coef, total, hist)
        tol_cd /= 100.0
        r = y - X @ beta
    fit = _finish(problem, beta[cols], total, hist)
    raise ConvergenceError(f"weighted lasso KKT violation {fit.kkt_violation:.3e}",
                           subproblem="weighted-lasso", kkt_violation=fit.kkt_violation)


def solve_lasso_logit(ds_or_X, penalty: PenaltyLoadings, config: SolverConfig | None = None, *,
                      y=None, G: int | None = None, start: np.ndarray | None = None) -> SelectionFit:
    """Lasso logit by proximal Newton: IRLS quadratic model + coordinate descent + line search."""
    cfg = config or SolverConfig()
    if y is None:
        X, y, G = ds_or_X.X, ds_or_X.y, ds_or_X.G
    else:
        X = ds_or_X
        G = X.shape[0] if G is None else G
    X = _prep(X)
    _check_design(X)
    y = np.asarray(y, dtype=float)
    p = X.shape[1]
    problem = LassoProblem("logit", X, y, penalty, G)
    thr = penalty.thresholds.astype(float)
    skip = np.zeros(p, dtype=np.bool_)
    beta = np.zeros(p) if start is None else np.array(start, dtype=float)
    eta = X @ beta
    F = (logit_loss(y, eta) + float(thr @ np.abs(beta))) / G
    history = [F]
    tol_cd = 1e-6
    for outer in range(1, cfg.max_outer + 1):
        mu = expit(eta)
        w = np.maximum(mu * (1.0 - mu), cfg.weight_floor)
        r = (y - mu) / w
        b = beta.copy()
        _, _, xwx = _run_cd(X, w, r, b, thr, skip, cfg.max_sweeps, tol_cd)
        d = b - beta
        t = 1.0
        for _ in range(60):
            cand = beta + t * d
            eta_c = X @ cand
            F_c = (logit_loss(y, eta_c) + float(thr @ np.abs(cand))) / G
            if F_c <= F + 1e-13 * max(1.0, abs(F)):
                break
            t *= 0.5
        else:
            cand, eta_c, F_c = beta, eta, F
        beta, eta, F = cand, eta_c, F_c
        history.append(F)
        snapped = np.where(np.abs(beta) < SNAP, 0.0, beta)
        viol = kkt_violations(problem, snapped).max(initial=0.0)
        if viol <= cfg.tol:
            return _finish(problem, beta, outer, history)
        scale = float(np.sqrt(np.max(xwx))) if p else 1.0
        tol_cd = max(min(tol_cd, 0.05 * G * viol / max(scale, 1e-300)), 1e-14)
    fit = _finish(problem, beta, cfg.max_outer, history)
    raise ConvergenceError(f"lasso logit did not converge (KKT violation {fit.kkt_violation:.3e})",
                           subproblem="lasso-logit", kkt_violation=fit.kkt_violation)
