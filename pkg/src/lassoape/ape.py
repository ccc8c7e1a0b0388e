"""Post-double-selection APE estimation for lasso logit with clustered data.

Pipeline for a target set A:

1. lasso logit -> beta_hat, post-lasso -> beta_tilde (loadings iterated m_bar times)
2. weights f^2 = Lambda'(X beta_tilde)
3. per k: beta_tilde^k (post-lasso on supp(beta_hat) with k forced in),
   S^k = beta_tilde^k_k (1 - 2 Lambda(X beta_tilde)), nodewise lasso gamma^k,
   weighted lasso zeta^k, their post-lasso refits, theta^k, mu^k = zeta^k + theta^k
4. final logit restricted to T_k = {k} u supp(beta_hat) u supp(zeta_hat^k) u supp(gamma_hat^k)
5. alpha_k = (1/G) sum beta_check_k Lambda'(X beta_check), APE_k = (G/n) alpha_k
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import EstimatorConfig, PenaltyConfig, SolverConfig, VarianceConfig
from .errors import NumericalError
from .logistic import RestrictedFit, fit_restricted_logit, logistic, logistic_deriv
from .nodewise import (IteratedFit, NodewiseRow, ThetaRow, iterated_weighted_lasso,
                       nodewise_fit, theta_row)
from .penalty import PenaltyKind, PenaltyLoadings, intercept_columns, lambda_for, loadings_logit
from .solvers import SelectionFit, solve_lasso_logit

RESULT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class TargetNuisance:
    k: int
    beta_tilde_k: RestrictedFit
    S_hat: np.ndarray
    nodewise: NodewiseRow
    zeta: IteratedFit
    theta: ThetaRow

    @property
    def zeta_tilde(self) -> np.ndarray:
        return self.zeta.post

    @property
    def mu_tilde(self) -> np.ndarray:
        return self.zeta.post + self.theta.theta_tilde


@dataclass(frozen=True)
class NuisanceBundle:
    beta_hat: SelectionFit
    beta_tilde: RestrictedFit
    f_hat_sq: np.ndarray
    targets: dict[int, TargetNuisance]
    beta_penalty: PenaltyLoadings

    def __getitem__(self, k: int) -> TargetNuisance:
        return self.targets[k]


@dataclass(frozen=True)
class ApeResult:
    k: int
    alpha_tilde: float
    ape: float
    sigma_tilde: float
    support_union: np.ndarray
    scores: np.ndarray  # per-cluster score sums entering the variance
    bootstrap_scores: np.ndarray  # per-cluster score sums entering the multiplier bootstrap
    beta_check: RestrictedFit = field(repr=False)
    G: int = 0
    n: int = 0

    @property
    def converged(self) -> bool:
        return self.beta_check.converged

    def to_dict(self, name: str | None = None) -> dict:
        out = {"k": self.k, "alpha_tilde": self.alpha_tilde, "ape": self.ape,
               "sigma_tilde": self.sigma_tilde, "support_size": int(self.support_union.size),
               "converged": self.converged}
        if name is not None:
            out["name"] = name
        return out


def _tag(exc: NumericalError, tag: str) -> NumericalError:
    sub = f"{tag}; {exc.subproblem}" if exc.subproblem else tag
    return type(exc)(str(exc).split("] ", 1)[-1], subproblem=sub, **exc.info)


def fit_beta(ds, penalty_cfg: PenaltyConfig, solver_cfg: SolverConfig):
    """Lasso logit with iterated loadings; returns (beta_hat, beta_tilde, final loadings)."""
    lam = lambda_for(PenaltyKind.LOGIT, ds.G, ds.p, penalty_cfg)
    free = intercept_columns(ds.X) if not penalty_cfg.penalize_intercept else None
    lasso = post = None
    for m in range(penalty_cfg.m_bar + 1):
        pen = loadings_logit(ds, None if post is None else post.beta, m, lam)
        if free is not None and free.size:
            load = pen.loadings.copy()
            load[free] = 0.0
            pen = PenaltyLoadings(pen.lam, load, m, pen.kind)
        lasso = solve_lasso_logit(ds, pen, solver_cfg, start=None if lasso is None else lasso.coef)
        post = fit_restricted_logit(ds, lasso.support, solver_cfg)
    return lasso, post, pen


def _target_nuisance(ds, k, beta_hat, beta_tilde, f_hat_sq, lam_beta_tilde, cfg) -> TargetNuisance:
    support_k = np.union1d(beta_hat.support, [k])
    try:
        beta_tilde_k = fit_restricted_logit(ds, support_k, cfg.solver)
    except NumericalError as exc:
        raise _tag(exc, f"k={k} post-lasso beta^k") from exc
    S_hat = beta_tilde_k.beta[k] * (1.0 - 2.0 * lam_beta_tilde)
    try:
        row = nodewise_fit(ds, f_hat_sq, k, cfg.penalty, cfg.solver)
    except NumericalError as exc:
        raise _tag(exc, f"k={k} nodewise gamma") from exc
    try:
        zeta = iterated_weighted_lasso(ds, f_hat_sq, S_hat, None, cfg.penalty, cfg.solver)
    except NumericalError as exc:
        raise _tag(exc, f"k={k} weighted zeta") from exc
    return TargetNuisance(k, beta_tilde_k, S_hat, row, zeta, theta_row(row, f_hat_sq, ds.G))


def _map(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def estimate_nuisance(ds, targets, config: EstimatorConfig | None = None) -> NuisanceBundle:
    cfg = config or EstimatorConfig()
    targets = [int(k) for k in targets]
    for k in targets:
        if not 0 <= k < ds.p:
            raise IndexError(f"target {k} outside [0, {ds.p})")
    try:
        beta_hat, beta_tilde, pen = fit_beta(ds, cfg.penalty, cfg.solver)
    except NumericalError as exc:
        raise _tag(exc, "beta") from exc
    eta = ds.X @ beta_tilde.beta
    f_hat_sq = logistic_deriv(eta)
    lam = logistic(eta)
    per_k = _map(lambda k: _target_nuisance(ds, k, beta_hat, beta_tilde, f_hat_sq, lam, cfg),
                 sorted(set(targets)), cfg.threads)
    return NuisanceBundle(beta_hat, beta_tilde, f_hat_sq, {t.k: t for t in per_k}, pen)


def support_union(bundle: NuisanceBundle, k: int) -> np.ndarray:
    t = bundle[k]
    return np.union1d(np.union1d([k], bundle.beta_hat.support),
                      np.union1d(t.zeta.lasso_support, t.nodewise.lasso_support)).astype(np.intp)


def orthogonal_score(X, y, alpha: float, beta, mu, k: int, G: int, n: int,
                     literal_sign: bool = False) -> np.ndarray:
    """Per-observation score alpha G/n - beta_k Lambda'(x'beta) - mu'x (y - Lambda(x'beta)).

    ``literal_sign=True`` flips the last term to ``+``.
    """
    eta = X @ np.asarray(beta, dtype=float)
    correction = np.asarray(X @ np.asarray(mu, dtype=float)).ravel() * (y - logistic(eta))
    sign = 1.0 if literal_sign else -1.0
    return alpha * G / n - beta[k] * logistic_deriv(eta) + sign * correction


def plugin_ape(ds, beta, k: int) -> float:
    """(1/n) sum beta_k Lambda'(x'beta): APE at a given coefficient vector."""
    beta = np.asarray(beta, dtype=float)
    return float(beta[k] * np.mean(logistic_deriv(ds.X @ beta)))


def estimate_ape(ds, bundle: NuisanceBundle, k: int,
                 config: EstimatorConfig | None = None) -> ApeResult:
    cfg = config or EstimatorConfig()
    vcfg: VarianceConfig = cfg.variance
    T = support_union(bundle, k)
    try:
        check = fit_restricted_logit(ds, T, cfg.solver)
    except NumericalError as exc:
        raise _tag(exc, f"k={k} final logit |T|={T.size}") from exc
    alpha = float(check.beta[k] * np.sum(logistic_deriv(ds.X @ check.beta))) / ds.G
    t = bundle[k]
    bt = bundle.beta_tilde.beta
    # Variance uses beta_tilde_k, the bootstrap uses beta_tilde^k_k; both at x'beta_tilde.
    boot_coef = t.beta_tilde_k.beta[k]
    var_coef = boot_coef if vcfg.use_beta_tilde_k else bt[k]
    base = orthogonal_score(ds.X, ds.y, alpha, bt, t.mu_tilde, k, ds.G, ds.n, vcfg.literal_mu_sign)
    base += bt[k] * bundle.f_hat_sq  # drop the beta_k term, re-added per use below
    var_obs = base - var_coef * bundle.f_hat_sq
    boot_obs = base - boot_coef * bundle.f_hat_sq
    scores = ds.cluster_sum(var_obs)
    sigma = float(np.sqrt(np.mean(scores**2)))
    return ApeResult(k, alpha, alpha * ds.G / ds.n, sigma, T, scores, ds.cluster_sum(boot_obs),
                     check, ds.G, ds.n)


def fit_apes(ds, targets, config: EstimatorConfig | None = None):
    """Run the full pipeline; returns (results ordered as ``targets``, bundle)."""
    cfg = config or EstimatorConfig()
    bundle = estimate_nuisance(ds, targets, cfg)
    cache = {k: r for k, r in zip(bundle.targets,
                                  _map(lambda k: estimate_ape(ds, bundle, k, cfg),
                                       list(bundle.targets), cfg.threads))}
    return [cache[int(k)] for k in targets], bundle


def results_json(results, names=None, meta: dict | None = None) -> str:
    rows = [r.to_dict(None if names is None else names[i]) for i, r in enumerate(results)]
    doc = {"schema_version": RESULT_SCHEMA_VERSION, **(meta or {}), "results": rows}
    return json.dumps(doc, indent=2, sort_keys=True)
