"""Simulation designs (M1-M10 and the low-dimensional Fig1 design), oracle APEs
and Monte Carlo coverage of the multiplier-bootstrap intervals."""

from __future__ import annotations

import dataclasses
import math
import time
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import log_ndtr

from .ape import fit_apes, plugin_ape
from .bootstrap import bootstrap_maxima
from .config import BootstrapConfig, EstimatorConfig
from .data import ClusteredDataset
from .errors import ConfigError, LassoApeError
from .logistic import logistic_deriv

MODELS = tuple(f"M{i}" for i in range(1, 11)) + ("Fig1",)
MODEL_RHO = {f"M{i}": r for i, r in zip(range(1, 11), [0.1, 0.3, 0.5, 0.7, 0.9] * 2)}
RHO_GRID = (0.1, 0.3, 0.5, 0.7, 0.9)
MIXTURE_PROB = 0.1
MIXTURE_SHIFT = 1.5


@dataclass(frozen=True)
class DgpSpec:
    """One simulation design.

    For M-models the first covariate is the intercept and the rest are
    X1_ig + X2_g with both parts ~ N(0, Toeplitz(rho)) (M1-M5) or the
    contaminated mixture Z0 - 1.5 B Z1 (M6-M10).  Fig1 has i.i.d.
    observations (one per cluster).
    """

    model: str = "M1"
    rho: float | None = None
    beta2: float = 0.5
    G0: int = 200
    n: int = 500
    p: int = 300
    seed: int = 0

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"unknown DGP {self.model!r}; choose from {', '.join(MODELS)}")
        if self.p < 1 or self.n < 1 or self.G0 < 1:
            raise ConfigError("n, p and G0 must be positive")
        if self.model != "Fig1" and self.rho is not None and self.rho not in RHO_GRID:
            warnings.warn(f"rho={self.rho} is outside the design grid {RHO_GRID}", stacklevel=2)

    @property
    def toeplitz_rho(self) -> float:
        if self.rho is not None:
            return self.rho
        return 0.5 if self.model == "Fig1" else MODEL_RHO[self.model]

    @property
    def mixture(self) -> bool:
        return self.model in {f"M{i}" for i in range(6, 11)}

    @classmethod
    def scaled(cls, model: str, G0: int, beta2: float = 0.5, seed: int = 0) -> "DgpSpec":
        """Design with p = 1.5 G0 and n = 2.5 G0."""
        return cls(model, None, beta2, G0, int(round(2.5 * G0)), int(round(1.5 * G0)), seed)

    @classmethod
    def fig1(cls, seed: int = 0) -> "DgpSpec":
        return cls("Fig1", 0.5, -1.0, 200, 200, 10, seed)

    def beta0(self) -> np.ndarray:
        b = np.zeros(self.p)
        if self.model == "Fig1":
            head = [0.1, self.beta2, 1.0]
        else:
            head = [1.0, self.beta2] + [1.0 / j for j in range(3, 21)]
        m = min(len(head), self.p)
        b[:m] = head[:m]
        return b


def toeplitz(rho: float, d: int) -> np.ndarray:
    idx = np.arange(d)
    return rho ** np.abs(idx[:, None] - idx[None, :])


@lru_cache(maxsize=32)
def _toeplitz_chol(rho: float, d: int) -> np.ndarray:
    return np.linalg.cholesky(toeplitz(rho, d)) if d else np.zeros((0, 0))


def _draw_block(rng, spec: DgpSpec, m: int, d: int) -> np.ndarray:
    L = _toeplitz_chol(spec.toeplitz_rho, d)
    Z0 = rng.standard_normal((m, d)) @ L.T
    if not spec.mixture:
        return Z0
    Z1 = 1.0 + rng.standard_normal((m, d)) @ L.T
    B = rng.random(m) < MIXTURE_PROB
    return Z0 - MIXTURE_SHIFT * B[:, None] * Z1


def std_logistic_from_normal(z: np.ndarray) -> np.ndarray:
    """Lambda^{-1}(Phi(z)): maps N(0, 1) to the standard logistic law."""
    return log_ndtr(z) - log_ndtr(-z)


def simulate_dgp(spec: DgpSpec) -> ClusteredDataset:
    rng = np.random.default_rng([spec.seed, 0x5EED])
    d = spec.p - 1
    beta = spec.beta0()
    if spec.model == "Fig1":
        cl = np.arange(spec.n)
        Xr = _draw_block(rng, spec, spec.n, d)
        U = rng.logistic(size=spec.n)
    else:
        cl = rng.integers(spec.G0, size=spec.n)
        Xr = _draw_block(rng, spec, spec.n, d) + _draw_block(rng, spec, spec.G0, d)[cl]
        U1 = rng.normal(0.0, math.sqrt(0.5), spec.n)
        U2 = rng.normal(0.0, math.sqrt(0.5), spec.G0)
        U = std_logistic_from_normal(U1 + U2[cl])
    X = np.column_stack([np.ones(spec.n), Xr])
    y = (X @ beta + U > 0).astype(float)
    cols = ["intercept"] + [f"x{j}" for j in range(2, spec.p + 1)]
    # clusters never drawn simply do not appear
    return ClusteredDataset.from_arrays(X, y, cl, cols)


def _index_draws(rng, spec: DgpSpec, m: int, b: np.ndarray) -> np.ndarray:
    """Draws of b'X_{-1} under the marginal law of one observation."""
    if not b.any():
        return np.zeros(m)
    s = math.sqrt(float(b @ toeplitz(spec.toeplitz_rho, b.size) @ b))
    parts = 1 if spec.model == "Fig1" else 2
    total = np.zeros(m)
    for _ in range(parts):
        z = s * rng.standard_normal(m)
        if spec.mixture:
            z1 = b.sum() + s * rng.standard_normal(m)
            z = z - MIXTURE_SHIFT * (rng.random(m) < MIXTURE_PROB) * z1
        total += z
    return total


def oracle_true_ape(spec: DgpSpec, k: int, oracle_n: int = 3_000_000, seed: int = 12345,
                    chunk: int = 1_000_000) -> tuple[float, float]:
    """Monte Carlo E[beta0_k Lambda'(X'beta0)] with its standard error.

    Only the index X'beta0 is simulated; its law is exact (a sum of
    Gaussian or Gaussian-mixture projections).
    """
    beta = spec.beta0()
    if beta[k] == 0.0:
        return 0.0, 0.0
    rng = np.random.default_rng([seed, spec.seed, 0x0A1E])
    s1 = s2 = 0.0
    shift = None
    done = 0
    while done < oracle_n:
        m = min(chunk, oracle_n - done)
        v = beta[k] * logistic_deriv(beta[0] + _index_draws(rng, spec, m, beta[1:]))
        if shift is None:
            shift = float(v[0])  # shifted sums avoid cancellation in the variance
        d = v - shift
        s1 += float(d.sum())
        s2 += float(d @ d)
        done += m
    md = s1 / oracle_n
    var = max(s2 / oracle_n - md**2, 0.0)
    return shift + md, math.sqrt(var / oracle_n)


def target_set_A(size: int) -> list[int]:
    """A_m from the simultaneous-coverage study as 0-based column indices.

    A_1 = {2}, A_2 = {2, 3}, A_3 = {2, 3, 4}, A_5 = {2..6}, A_10 = {2..10},
    A_20 = {2..20}, A_30 = {2..31}, ... (1-based covariate numbering, intercept = 1).
    """
    last = {1: 2, 2: 3, 3: 4, 5: 6, 10: 10, 20: 20}.get(size, size + 1)
    return list(range(1, last))


@dataclass
class CoverageReport:
    spec: DgpSpec
    target_set: list[int]
    reps: int
    B: int
    level: float
    studentize: bool
    coverage: float
    mc_se: float
    mean_bias: dict[int, float]
    true_ape: dict[int, float]
    oracle_se: dict[int, float]
    failures: int
    covered: list[bool] = field(repr=False, default_factory=list)
    elapsed: float = 0.0

    def to_dict(self) -> dict:
        return {"spec": dataclasses.asdict(self.spec), "targets": self.target_set,
                "reps": self.reps, "B": self.B, "level": self.level,
                "studentize": self.studentize, "coverage": _finite_or_none(self.coverage),
                "mc_se": _finite_or_none(self.mc_se),
                "mean_bias": {str(k): _finite_or_none(v) for k, v in self.mean_bias.items()},
                "true_ape": {str(k): v for k, v in self.true_ape.items()},
                "oracle_se": {str(k): v for k, v in self.oracle_se.items()},
                "failures": self.failures, "completed": len(self.covered),
                "elapsed_seconds": self.elapsed}


def _finite_or_none(v: float) -> float | None:
    # NaN (no completed replication) is not valid JSON
    return v if math.isfinite(v) else None


def rep_seed(seed: int, rep: int, stream: int = 0) -> int:
    return int(np.random.SeedSequence([seed, rep, stream]).generate_state(1, np.uint64)[0] >> 1)


def _one_rep(spec, targets, B, level, studentize, seed, rep, config, truth, widen):
    ds = simulate_dgp(dataclasses.replace(spec, seed=rep_seed(seed, rep)))
    try:
        results, _ = fit_apes(ds, targets, config)
        out = bootstrap_maxima(results, BootstrapConfig(B, level, studentize, rep_seed(seed, rep, 1)))
    except LassoApeError as exc:
        return None, str(exc)
    covered = True
    est = {}
    for iv, r in zip(out.intervals, results):
        est[r.k] = r.ape
        half = (iv["ape_upper"] - iv["ape_lower"]) / 2.0 * widen
        centre = r.ape
        if not (centre - half <= truth[r.k] <= centre + half):
            covered = False
    return (covered, est), None


def run_coverage(spec: DgpSpec, targets, reps: int, B: int = 600, level: float = 0.05,
                 seed: int = 0, *, studentize: bool = False, config: EstimatorConfig | None = None,
                 oracle_n: int = 3_000_000, n_jobs: int = 1, widen: float = 1.0,
                 progress: bool = False) -> CoverageReport:
    """Fraction of replications whose simultaneous intervals cover every true APE.

    Intervals are compared on the APE scale, (G/n) I_k against E[beta_k Lambda'(X'beta)].
    ``widen`` multiplies every half-width (``inf`` gives trivially covering intervals).
    """
    if reps < 1:
        raise ConfigError("reps must be >= 1")
    cfg = config or EstimatorConfig()
    targets = [int(k) for k in targets]
    t0 = time.perf_counter()
    truth, oracle_se = {}, {}
    for k in targets:
        truth[k], oracle_se[k] = oracle_true_ape(spec, k, oracle_n)
    args = (spec, targets, B, level, studentize, seed)
    if n_jobs == 1:
        outs = []
        for rep in range(reps):
            outs.append(_one_rep(*args, rep, cfg, truth, widen))
            if progress and (rep + 1) % 10 == 0:
                done = [o[0][0] for o in outs if o[0] is not None]
                print(f"  rep {rep + 1}/{reps}: coverage so far {np.mean(done):.3f}", flush=True)
    else:
        from joblib import Parallel, delayed
        outs = Parallel(n_jobs=n_jobs)(delayed(_one_rep)(*args, rep, cfg, truth, widen)
                                       for rep in range(reps))
    ok = [o[0] for o in outs if o[0] is not None]
    failures = len(outs) - len(ok)
    covered = [c for c, _ in ok]
    cov = float(np.mean(covered)) if covered else float("nan")
    mc_se = math.sqrt(cov * (1 - cov) / len(covered)) if covered else float("nan")
    bias = {k: float(np.mean([e[k] for _, e in ok]) - truth[k]) if ok else float("nan")
            for k in targets}
    return CoverageReport(spec, targets, reps, B, level, studentize, cov, mc_se, bias, truth,
                          oracle_se, failures, covered, time.perf_counter() - t0)


@dataclass
class DebiasingReport:
    reps: int
    true_ape: float
    oracle_se: float
    ds_estimates: np.ndarray = field(repr=False)
    naive_estimates: np.ndarray = field(repr=False)
    failures: int

    @property
    def ds_bias(self) -> float:
        return float(np.mean(self.ds_estimates) - self.true_ape)

    @property
    def naive_bias(self) -> float:
        return float(np.mean(self.naive_estimates) - self.true_ape)


def run_debiasing(spec: DgpSpec | None = None, k: int = 1, reps: int = 500, seed: int = 0,
                  config: EstimatorConfig | None = None,
                  oracle_n: int = 3_000_000) -> DebiasingReport:
    """Post-double-selection APE versus the plug-in APE at the lasso logit coefficients."""
    spec = spec or DgpSpec.fig1()
    truth, se = oracle_true_ape(spec, k, oracle_n)
    ds_est, naive, failures = [], [], 0
    for rep in range(reps):
        ds = simulate_dgp(dataclasses.replace(spec, seed=rep_seed(seed, rep)))
        try:
            (res,), bundle = fit_apes(ds, [k], config)
        except LassoApeError:
            failures += 1
            continue
        ds_est.append(res.ape)
        naive.append(plugin_ape(ds, bundle.beta_hat.coef, k))
    return DebiasingReport(reps, truth, se, np.array(ds_est), np.array(naive), failures)
