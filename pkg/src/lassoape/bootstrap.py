"""Multiplier cluster bootstrap: max statistic, critical value, simultaneous intervals.

Multipliers xi^b_g come from a Philox counter-based stream keyed by
(seed, b) and read at position g, so replicate b is reproducible no matter
how replicates are split across workers.  Uniforms are mapped to normals
with ``inv_norm_cdf``.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import BootstrapConfig
from .errors import ConfigError, DomainError
from .penalty import inv_norm_cdf

REPORT_SCHEMA_VERSION = 1


def multiplier_matrix(seed: int, replicates: range, G: int) -> np.ndarray:
    """Standard normal multipliers xi^b_g for consecutive replicates b, shape (len, G).

    Replicate b owns Philox counters [b * ceil(G/4), (b + 1) * ceil(G/4)) of the
    stream keyed by ``seed``; each counter yields four 64-bit words.
    """
    replicates = range(replicates.start, replicates.stop) if isinstance(replicates, range) \
        else range(int(replicates[0]), int(replicates[-1]) + 1)
    if len(replicates) == 0:
        return np.zeros((0, G))
    per = -(-G // 4)
    bitgen = np.random.Philox(key=int(seed), counter=replicates.start * per)
    raw = bitgen.random_raw(len(replicates) * per * 4).reshape(len(replicates), per * 4)[:, :G]
    u = ((raw >> np.uint64(11)).astype(float) + 0.5) * 2.0**-53
    return inv_norm_cdf(u)


def multipliers(seed: int, b: int, G: int) -> np.ndarray:
    """Multipliers xi^b_1..xi^b_G of a single replicate."""
    return multiplier_matrix(seed, range(b, b + 1), G)[0]


def _scales(results, studentize: bool) -> np.ndarray:
    if not studentize:
        return np.ones(len(results))
    sig = np.array([r.sigma_tilde for r in results], dtype=float)
    if np.any(sig <= 0):
        bad = [r.k for r in results if r.sigma_tilde <= 0]
        raise DomainError(f"degenerate variance (sigma_tilde = 0) for targets {bad}")
    return sig


def test_statistic(results, nulls, studentize: bool = True) -> float:
    """max_k sqrt(G) |alpha_k - alpha0_k| / sigma_k (sigma_k = 1 when not studentized)."""
    nulls = np.broadcast_to(np.asarray(nulls, dtype=float), (len(results),))
    if not results:
        return 0.0
    G = results[0].G
    alpha = np.array([r.alpha_tilde for r in results])
    return float(np.max(math.sqrt(G) * np.abs(alpha - nulls) / _scales(results, studentize)))


test_statistic.__test__ = False  # not a pytest test despite the name


def critical_value(W: np.ndarray, level_a: float) -> float:
    """The ceil((1 - a) B)-th order statistic of W (no interpolation)."""
    B = len(W)
    rank = math.ceil(round((1.0 - level_a) * B, 9))
    rank = min(max(rank, 1), B)
    return float(np.sort(W)[rank - 1])


def replicate_maxima(scores: np.ndarray, scales: np.ndarray, seed: int, B: int, G: int,
                     threads: int = 1, chunk: int = 256) -> np.ndarray:
    """W^b = max_k |sum_g xi^b_g scores[g, k]| / (sqrt(G) scale_k) for b = 0..B-1."""
    denom = math.sqrt(G) * scales

    def run(lo: int) -> np.ndarray:
        xi = multiplier_matrix(seed, range(lo, min(lo + chunk, B)), G)
        return np.max(np.abs(xi @ scores) / denom, axis=1)

    starts = list(range(0, B, chunk))
    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(lo) for lo in starts]
    return np.concatenate(parts)


@dataclass(frozen=True)
class BootstrapOutcome:
    W: np.ndarray
    c_a: float
    T_stat: float
    reject: bool
    intervals: list[dict]
    level: float
    B: int
    seed: int
    studentize: bool

    def to_dict(self) -> dict:
        return {"schema_version": REPORT_SCHEMA_VERSION, "T": self.T_stat, "c_a": self.c_a,
                "level": self.level, "B": self.B, "seed": self.seed, "reject": self.reject,
                "studentize": self.studentize, "intervals": self.intervals}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def simultaneous_intervals(c_a: float, results, studentize: bool = True) -> list[dict]:
    """I_k = alpha_k -/+ sigma_k c_a / sqrt(G), plus the same interval on the APE scale."""
    scales = _scales(results, studentize) if results else np.zeros(0)
    out = []
    for r, s in zip(results, scales):
        half = s * c_a / math.sqrt(r.G) if c_a else 0.0
        lo, hi = r.alpha_tilde - half, r.alpha_tilde + half
        f = r.G / r.n
        out.append({"k": int(r.k), "lower": float(lo), "upper": float(hi),
                    "ape_lower": float(lo * f), "ape_upper": float(hi * f)})
    return out


def bootstrap_maxima(results, config: BootstrapConfig | None = None, nulls=None,
                     threads: int = 1) -> BootstrapOutcome:
    """Multiplier cluster bootstrap over the targets in ``results`` (one shared xi per cluster)."""
    cfg = config or BootstrapConfig()
    if cfg.B < 1:
        raise ConfigError("B must be >= 1")
    if not results:
        raise ValueError("need at least one target")
    G = results[0].G
    scores = np.column_stack([r.bootstrap_scores for r in results])
    scales = _scales(results, cfg.studentize)
    W = replicate_maxima(scores, scales, cfg.seed, cfg.B, G, threads)
    c_a = critical_value(W, cfg.level_a)
    nulls = np.zeros(len(results)) if nulls is None else nulls
    T = test_statistic(results, nulls, cfg.studentize)
    return BootstrapOutcome(W, c_a, T, bool(T > c_a),
                            simultaneous_intervals(c_a, results, cfg.studentize),
                            cfg.level_a, cfg.B, cfg.seed, cfg.studentize)
