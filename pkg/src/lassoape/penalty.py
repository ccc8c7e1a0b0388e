"""Penalty levels and iterated penalty loadings for the three lasso problems."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import sparse

from .config import PenaltyConfig
from .errors import DomainError, ShapeError
from .logistic import logistic

# Wichura (1988), algorithm AS241 PPND16: coefficients listed lowest degree first.
_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
      2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
      5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)


def _poly(coef, x):
    out = np.full_like(x, coef[-1])
    for c in coef[-2::-1]:
        out = out * x + c
    return out


def inv_norm_cdf(q):
    """Standard normal quantile Phi^{-1}(q) for q in (0, 1) (AS241, double precision)."""
    qa = np.asarray(q, dtype=float)
    if not np.all((qa > 0) & (qa < 1)):
        raise DomainError(f"inv_norm_cdf requires 0 < q < 1, got {q}")
    h = qa - 0.5
    out = np.empty_like(qa)
    central = np.abs(h) <= 0.425
    if np.any(central):
        hc = h[central]
        r = 0.180625 - hc * hc
        out[central] = hc * _poly(_A, r) / _poly(_B, r)
    tail = ~central
    if np.any(tail):
        ht = h[tail]
        r = np.sqrt(-np.log(np.where(ht < 0, qa[tail], 1.0 - qa[tail])))
        near = r <= 5.0
        val = np.empty_like(r)
        rn = r[near] - 1.6
        val[near] = _poly(_C, rn) / _poly(_D, rn)
        rf = r[~near] - 5.0
        val[~near] = _poly(_E, rf) / _poly(_F, rf)
        out[tail] = np.where(ht < 0, -val, val)
    return out if out.ndim else float(out)


class PenaltyKind(str, Enum):
    LOGIT = "logit-beta"
    NODEWISE = "nodewise-gamma"
    WEIGHTED = "weighted-zeta"


@dataclass(frozen=True)
class PenaltyLoadings:
    lam: float
    loadings: np.ndarray
    iteration: int
    kind: PenaltyKind

    def __post_init__(self):
        if not self.lam >= 0 or not math.isfinite(self.lam):
            raise DomainError(f"lambda must be finite and >= 0, got {self.lam}")
        if not np.all(np.isfinite(self.loadings)) or np.any(self.loadings < 0):
            raise DomainError("loadings must be finite and >= 0")

    @property
    def thresholds(self) -> np.ndarray:
        """Per-coordinate l1 weight lambda * l_j on the summed (not averaged) loss scale."""
        return self.lam * self.loadings


def lambda_for(kind: PenaltyKind | str, G: int, p: int, config: PenaltyConfig | None = None) -> float:
    """Penalty level c sqrt(G) Phi^{-1}(1 - gamma / (2 * multiplicity))."""
    cfg = config or PenaltyConfig()
    kind = PenaltyKind(kind)
    if p < 1:
        raise DomainError("p must be >= 1")
    if cfg.gamma is None and G < 3:
        raise DomainError(f"default gamma rule needs G >= 3, got G={G}")
    gamma = cfg.gamma_for(G)
    if kind is PenaltyKind.LOGIT:
        mult = p
    elif kind is PenaltyKind.NODEWISE:
        if p < 2:
            raise DomainError("nodewise penalty needs p >= 2")
        mult = p * (p - 1)
    else:
        mult = p * p
    z = inv_norm_cdf(1.0 - gamma / (2.0 * mult))
    return cfg.lambda_scale * cfg.c * math.sqrt(G) * z


def intercept_columns(X) -> np.ndarray:
    """Indices of columns identically equal to one."""
    if sparse.issparse(X):
        Xc = sparse.csc_matrix(X)
        full = np.diff(Xc.indptr) == Xc.shape[0]
        cols = [j for j in np.flatnonzero(full)
                if np.all(Xc.data[Xc.indptr[j]:Xc.indptr[j + 1]] == 1.0)]
        return np.array(cols, dtype=np.intp)
    return np.flatnonzero(np.all(np.asarray(X) == 1.0, axis=0))


def cluster_score_rms(ds, r: np.ndarray, cols: np.ndarray | None = None) -> np.ndarray:
    """sqrt{(1/G) sum_g (sum_i r_ig X_ig,j)^2} for every column j (or ``cols``)."""
    X = ds.X if cols is None else ds.X[:, cols]
    if sparse.issparse(X):
        C = sparse.csr_matrix((np.asarray(r, dtype=float), (ds.cluster_index, np.arange(ds.n))),
                              shape=(ds.G, ds.n))
        S = (C @ X).tocsc()
        sq = np.asarray(S.multiply(S).sum(axis=0)).ravel()
    else:
        S = np.add.reduceat(np.asarray(r, dtype=float)[:, None] * X, ds.offsets[:-1], axis=0)
        sq = np.einsum("gj,gj->j", S, S)
    return np.sqrt(sq / ds.G)


def loadings_logit(ds, beta_tilde: np.ndarray | None, m: int, lam: float = 0.0) -> PenaltyLoadings:
    """Loadings for the lasso logit.

    m = 0: 0.5 * {(1/G) sum_g sum_i n_g X_ig,j^2}^{1/2}
    m >= 1: {(1/G) sum_g (sum_i (Y - Lambda(X'beta_tilde)) X_ig,j)^2}^{1/2}
    """
    if m == 0:
        ng = np.repeat(ds.cluster_sizes, ds.cluster_sizes).astype(float)
        if ds.is_sparse:
            sq = np.asarray(ds.X.multiply(ds.X).T @ ng).ravel()
        else:
            sq = ng @ (ds.X * ds.X)
        load = 0.5 * np.sqrt(sq / ds.G)
    else:
        if beta_tilde is None:
            raise ValueError("beta_tilde required for m >= 1")
        beta_tilde = np.asarray(beta_tilde, dtype=float)
        if beta_tilde.shape != (ds.p,):
            raise ShapeError(f"beta_tilde must have length {ds.p}")
        resid = ds.y - logistic(ds.X @ beta_tilde)
        load = cluster_score_rms(ds, resid)
    return PenaltyLoadings(float(lam), load, m, PenaltyKind.LOGIT)


def problem_columns(p: int, excluded_col: int | None) -> np.ndarray:
    cols = np.arange(p)
    return cols if excluded_col is None else np.delete(cols, excluded_col)


def loadings_weighted(ds, f_hat_sq: np.ndarray, target: np.ndarray, coef_tilde: np.ndarray | None,
                      m: int, excluded_col: int | None = None, lam: float = 0.0) -> PenaltyLoadings:
    """Loadings for the weighted lasso with weights f^2 (nodewise gamma or zeta problems).

    m = 0: 2 max_{g,i}|f X_k| {(1/G) sum_g (sum_i f t)^2}^{1/2}
    m >= 1: 2 {(1/G) sum_g (sum_i f^2 (t - X'coef) X_k)^2}^{1/2}
    ``coef_tilde`` and the result use the problem's own column indexing.
    """
    w = np.asarray(f_hat_sq, dtype=float)
    if np.any(w <= 0):
        raise DomainError("weights f_hat^2 must be positive")
    t = np.asarray(target, dtype=float)
    cols = problem_columns(ds.p, excluded_col)
    kind = PenaltyKind.WEIGHTED if excluded_col is None else PenaltyKind.NODEWISE
    if m == 0:
        f = np.sqrt(w)
        Xc = ds.X[:, cols]
        if sparse.issparse(Xc):
            fx = abs(sparse.diags(f) @ Xc)
            maxfx = np.asarray(fx.max(axis=0).todense()).ravel()
        else:
            maxfx = np.max(np.abs(f[:, None] * Xc), axis=0) if cols.size else np.zeros(0)
        ft = ds.cluster_sum(f * t)
        load = 2.0 * maxfx * math.sqrt(float(ft @ ft) / ds.G)
    else:
        if coef_tilde is None:
            raise ValueError("coef_tilde required for m >= 1")
        coef_tilde = np.asarray(coef_tilde, dtype=float)
        if coef_tilde.shape != (cols.size,):
            raise ShapeError(f"coef_tilde must have length {cols.size}")
        full = np.zeros(ds.p)
        full[cols] = coef_tilde
        resid = w * (t - ds.X @ full)
        load = 2.0 * cluster_score_rms(ds, resid, cols)
    return PenaltyLoadings(float(lam), np.asarray(load, dtype=float), m, kind)
