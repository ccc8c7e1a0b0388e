"""Cluster nodewise post-lasso rows of the approximate inverse of (1/G) sum f^2 x x'."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import PenaltyConfig, SolverConfig
from .errors import SingularityError
from .logistic import dense_columns, fit_restricted_wls
from .penalty import (PenaltyKind, PenaltyLoadings, intercept_columns, lambda_for,
                      loadings_weighted, problem_columns)
from .solvers import SelectionFit, solve_weighted_lasso

TAU_FLOOR = 1e-12


@dataclass(frozen=True)
class IteratedFit:
    """Final lasso fit, its post-lasso refit and the loadings used, after the m-bar loop."""

    lasso: SelectionFit
    post: np.ndarray  # post-lasso coefficients, problem indexing
    penalty: PenaltyLoadings
    columns: np.ndarray  # problem column -> original column

    @property
    def lasso_support(self) -> np.ndarray:
        """Original column indices selected by the lasso."""
        return self.columns[self.lasso.support]


def iterated_weighted_lasso(ds, weights, target, excluded_col: int | None,
                            penalty_cfg: PenaltyConfig, solver_cfg: SolverConfig) -> IteratedFit:
    """Weighted lasso with loadings refreshed m_bar times from post-lasso residuals."""
    kind = PenaltyKind.WEIGHTED if excluded_col is None else PenaltyKind.NODEWISE
    lam = lambda_for(kind, ds.G, ds.p, penalty_cfg)
    cols = problem_columns(ds.p, excluded_col)
    free = np.isin(cols, intercept_columns(ds.X)) if not penalty_cfg.penalize_intercept else None
    fit = post = None
    for m in range(penalty_cfg.m_bar + 1):
        pen = loadings_weighted(ds, weights, target, post, m, excluded_col, lam)
        if free is not None and free.any():
            pen = PenaltyLoadings(pen.lam, np.where(free, 0.0, pen.loadings), m, pen.kind)
        fit = solve_weighted_lasso(target, ds.X, weights, pen, excluded_col, G=ds.G,
                                   config=solver_cfg, start=None if fit is None else fit.coef,
                                   factor=penalty_cfg.weighted_factor)
        refit = fit_restricted_wls(target, ds.X, weights, cols[fit.support], G=ds.G)
        post = refit.beta[cols]
    return IteratedFit(fit, post, pen, cols)


@dataclass(frozen=True)
class NodewiseRow:
    k: int
    gamma_tilde: np.ndarray  # length p - 1, columns other than k in order
    tau_sq: float
    support: np.ndarray  # nonzero positions of gamma_tilde (problem indexing)
    selection: IteratedFit | None = None

    @property
    def lasso_support(self) -> np.ndarray:
        """Original column indices selected by the nodewise lasso."""
        if self.selection is None:
            return np.zeros(0, dtype=np.intp)
        return self.selection.lasso_support


@dataclass(frozen=True)
class ThetaRow:
    k: int
    theta_tilde: np.ndarray


def _residual(ds, k, gamma_tilde):
    D = dense_columns(ds.X, [k])[:, 0]
    cols = problem_columns(ds.p, k)
    if cols.size:
        full = np.zeros(ds.p)
        full[cols] = gamma_tilde
        return D, D - ds.X @ full
    return D, D.copy()


def nodewise_fit(ds, f_hat_sq, k: int, penalty_cfg: PenaltyConfig | None = None,
                 solver_cfg: SolverConfig | None = None) -> NodewiseRow:
    """Weighted lasso of column k on the others, post-lasso refit, and tau^2_k."""
    if not 0 <= k < ds.p:
        raise IndexError(f"k={k} outside [0, {ds.p})")
    penalty_cfg = penalty_cfg or PenaltyConfig()
    solver_cfg = solver_cfg or SolverConfig()
    w = np.asarray(f_hat_sq, dtype=float)
    selection = None
    if ds.p == 1:
        gamma = np.zeros(0)
    else:
        D = dense_columns(ds.X, [k])[:, 0]
        selection = iterated_weighted_lasso(ds, w, D, k, penalty_cfg, solver_cfg)
        gamma = selection.post
    _, resid = _residual(ds, k, gamma)
    tau_sq = float(w @ resid**2) / ds.G
    if tau_sq <= TAU_FLOOR:
        raise SingularityError(f"tau^2 = {tau_sq:.3e}: column {k} is (nearly) collinear "
                               "with the selected columns", subproblem=f"nodewise k={k}")
    return NodewiseRow(k, gamma, tau_sq, np.flatnonzero(gamma), selection)


def tau_sq_identity_check(row: NodewiseRow, ds, f_hat_sq) -> float:
    """|tau^2 - D' F^2 (D - X gamma) / G|; zero whenever gamma solves its normal equations."""
    w = np.asarray(f_hat_sq, dtype=float)
    D, resid = _residual(ds, row.k, row.gamma_tilde)
    tau_direct = float(w @ resid**2) / ds.G
    return abs(tau_direct - float(D @ (w * resid)) / ds.G)


def embed_row(gamma_tilde: np.ndarray, k: int) -> np.ndarray:
    """[-g_1, ..., -g_{k-1}, 1, -g_k, ..., -g_{p-1}] with the 1 at position k."""
    return np.insert(-np.asarray(gamma_tilde, dtype=float), k, 1.0)


def precision_row(row: NodewiseRow) -> np.ndarray:
    """Row k of the approximate inverse: embedded row divided by tau^2_k."""
    return embed_row(row.gamma_tilde, row.k) / row.tau_sq


def theta_row(row: NodewiseRow, f_hat_sq, G: int) -> ThetaRow:
    scale = float(np.sum(f_hat_sq)) / (G * row.tau_sq)
    return ThetaRow(row.k, embed_row(row.gamma_tilde, row.k) * scale)
