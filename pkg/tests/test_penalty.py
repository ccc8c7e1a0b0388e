from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from lassoape import ClusteredDataset, DgpSpec, DomainError, PenaltyConfig, simulate_dgp
from lassoape.penalty import (PenaltyKind, inv_norm_cdf, lambda_for, loadings_logit,
                              loadings_weighted)

from conftest import random_dataset

mpmath.mp.dps = 40


def _mp_ppf(q: float) -> float:
    """Phi^{-1}(q) by 40-digit root finding on the normal CDF."""
    q = mpmath.mpf(q)
    z0 = special.ndtri(float(q))
    return float(mpmath.findroot(lambda z: mpmath.ncdf(z) - q, mpmath.mpf(z0)))


# ---------------------------------------------------------------- inverse normal CDF


def test_median_is_zero():
    assert inv_norm_cdf(0.5) == 0.0


def test_975_reference():
    assert inv_norm_cdf(0.975) == pytest.approx(_mp_ppf(0.975), abs=1e-12)
    assert inv_norm_cdf(0.975) == pytest.approx(1.959963984540054, abs=1e-12)


@pytest.mark.parametrize("q", [1e-300, 1e-20, 1e-8, 0.01, 0.0251, 0.3, 0.425, 0.5001,
                               0.9, 0.975, 1 - 1e-10])
def test_against_high_precision(q):
    z = inv_norm_cdf(q)
    ref = _mp_ppf(q)
    assert z == pytest.approx(ref, rel=1e-14, abs=1e-14)
    # forward check in the central region, where Phi(z) - q is representable
    if 1e-3 < q < 1 - 1e-3:
        assert abs(float(mpmath.ncdf(z)) - q) <= 1e-14


@given(st.integers(1, 2**40))
def test_antisymmetry(k):
    # dyadic q so that 1 - q is exact
    q = k / 2.0**41
    assert abs(inv_norm_cdf(q) + inv_norm_cdf(1 - q)) <= 1e-14 * max(1.0, abs(inv_norm_cdf(q)))


@pytest.mark.parametrize("q", [0.0, 1.0, -0.1, 1.5, float("nan")])
def test_domain(q):
    with pytest.raises(DomainError):
        inv_norm_cdf(q)


# ---------------------------------------------------------------- lambda


def test_lambda_gamma_one_p_one_is_zero():
    assert lambda_for(PenaltyKind.LOGIT, 50, 1, PenaltyConfig(gamma=1.0)) == 0.0


def test_lambda_scripted_oracle():
    G, p, c = 200, 300, 1.1
    gamma = 0.1 / math.log(G)
    ref = c * math.sqrt(G) * special.ndtri(1 - gamma / (2 * p))
    assert lambda_for("logit-beta", G, p) == pytest.approx(ref, rel=1e-13)
    ref_nw = c * math.sqrt(G) * special.ndtri(1 - gamma / (2 * p * (p - 1)))
    assert lambda_for("nodewise-gamma", G, p) == pytest.approx(ref_nw, rel=1e-13)
    ref_z = c * math.sqrt(G) * special.ndtri(1 - gamma / (2 * p * p))
    assert lambda_for("weighted-zeta", G, p) == pytest.approx(ref_z, rel=1e-13)


@given(st.integers(3, 5000), st.integers(2, 2000))
def test_lambda_ordering_and_monotonicity(G, p):
    lo = lambda_for("logit-beta", G, p)
    assert lambda_for("weighted-zeta", G, p) >= lo
    assert lambda_for("nodewise-gamma", G, p) >= lo
    for kind in PenaltyKind:
        assert lambda_for(kind, G, p + 1) > lambda_for(kind, G, p)


def test_lambda_needs_three_clusters():
    with pytest.raises(DomainError):
        lambda_for("logit-beta", 2, 5)


def test_gamma_clamp():
    cfg = PenaltyConfig()
    for G in (3, 10, 1000, 10**6):
        g = cfg.gamma_for(G)
        assert 1 / G <= g <= 1 / math.log(G)


# ---------------------------------------------------------------- logit loadings


def test_logit_m0_single_obs():
    ds = ClusteredDataset.from_arrays(np.array([[2.0]]), np.array([1.0]), [0])
    assert loadings_logit(ds, None, 0).loadings[0] == pytest.approx(1.0)


def test_logit_perfect_fit_zero_loadings():
    # fractional outcomes equal to the fitted probabilities
    ds0 = random_dataset(4, p=4)
    beta = np.array([0.2, -0.3, 0.5, 0.0])
    y = 1 / (1 + np.exp(-(ds0.dense_X() @ beta)))
    ds = ClusteredDataset.from_arrays(ds0.dense_X(), y, np.repeat(np.arange(ds0.G), ds0.cluster_sizes))
    np.testing.assert_allclose(loadings_logit(ds, beta, 1).loadings, 0.0, atol=1e-15)


def test_logit_m0_brute_force_loop():
    ds = simulate_dgp(DgpSpec("M1", G0=40, n=100, p=12, seed=8))
    X = ds.dense_X()
    ref = np.zeros(ds.p)
    for j in range(ds.p):
        total = 0.0
        for g, c in enumerate(ds.clusters):
            for _, x in c.rows:
                total += len(c.rows) * x[j] ** 2
        ref[j] = 0.5 * math.sqrt(total / ds.G)
    np.testing.assert_allclose(loadings_logit(ds, None, 0).loadings, ref, rtol=1e-12)
    del X


def test_logit_m1_brute_force_loop():
    ds = random_dataset(5, p=5)
    beta = np.array([0.1, 0.5, -0.2, 0.0, 0.3])
    ref = np.zeros(ds.p)
    for j in range(ds.p):
        acc = 0.0
        for c in ds.clusters:
            s = sum((y - 1 / (1 + math.exp(-x @ beta))) * x[j] for y, x in c.rows)
            acc += s * s
        ref[j] = math.sqrt(acc / ds.G)
    np.testing.assert_allclose(loadings_logit(ds, beta, 1).loadings, ref, rtol=1e-12)


def test_logit_m0_scale_equivariance(rng):
    ds = random_dataset(6, p=4)
    X = ds.dense_X().copy()
    kappa = 3.7
    X[:, 2] *= kappa
    ds2 = ClusteredDataset.from_arrays(X, ds.y, np.repeat(np.arange(ds.G), ds.cluster_sizes))
    a = loadings_logit(ds, None, 0).loadings
    b = loadings_logit(ds2, None, 0).loadings
    assert b[2] == pytest.approx(kappa * a[2], rel=1e-13)
    np.testing.assert_allclose(np.delete(b, 2), np.delete(a, 2), rtol=1e-14)


# ---------------------------------------------------------------- weighted loadings


def _toy3():
    X = np.array([[1, 0.5, -1.0], [1, 2.0, 0.3], [1, -0.7, 1.1], [1, 0.1, 0.2], [1, 1.3, -0.4]])
    return ClusteredDataset.from_arrays(X, np.array([1, 0, 1, 0, 1.0]), [0, 0, 1, 2, 2])


def test_weighted_zero_target_zero_loadings():
    ds = _toy3()
    load = loadings_weighted(ds, np.full(5, 0.2), np.zeros(5), None, 0).loadings
    np.testing.assert_array_equal(load, 0.0)


def test_weighted_zero_residuals_zero_loadings():
    ds = _toy3()
    coef = np.array([0.5, -1.0])
    target = ds.dense_X()[:, [0, 2]] @ coef
    load = loadings_weighted(ds, np.full(5, 0.2), target, coef, 1, excluded_col=1).loadings
    np.testing.assert_allclose(load, 0.0, atol=1e-15)


def test_weighted_m0_hand_loop():
    ds = _toy3()
    w = np.array([0.25, 0.1, 0.2, 0.05, 0.15])
    D = ds.dense_X()[:, 1]
    load = loadings_weighted(ds, w, D, None, 0, excluded_col=1).loadings
    X = ds.dense_X()
    sums = {}
    for i, g in enumerate([0, 0, 1, 2, 2]):
        sums[g] = sums.get(g, 0.0) + math.sqrt(w[i]) * D[i]
    rms = math.sqrt(sum(v * v for v in sums.values()) / 3)
    for pos, j in enumerate([0, 2]):
        mx = max(abs(math.sqrt(w[i]) * X[i, j]) for i in range(5))
        assert load[pos] == pytest.approx(2 * mx * rms, rel=1e-12)


def test_weighted_m1_hand_loop():
    ds = _toy3()
    w = np.array([0.25, 0.1, 0.2, 0.05, 0.15])
    S = np.array([0.3, -0.2, 0.5, 0.1, -0.4])
    coef = np.array([0.05, 0.1, -0.2])
    load = loadings_weighted(ds, w, S, coef, 1).loadings
    X = ds.dense_X()
    r = w * (S - X @ coef)
    for j in range(3):
        sums = [r[0] * X[0, j] + r[1] * X[1, j], r[2] * X[2, j], r[3] * X[3, j] + r[4] * X[4, j]]
        assert load[j] == pytest.approx(2 * math.sqrt(sum(s * s for s in sums) / 3), rel=1e-12)


def test_weighted_rejects_nonpositive_weight():
    ds = _toy3()
    with pytest.raises(DomainError):
        loadings_weighted(ds, np.array([0.2, 0.0, 0.2, 0.2, 0.2]), np.ones(5), None, 0)


def test_sparse_loadings_match_dense():
    ds = simulate_dgp(DgpSpec("M1", G0=30, n=80, p=10, seed=4))
    sp = ds.to_sparse()
    w = np.full(ds.n, 0.2)
    t = ds.dense_X()[:, 3]
    beta = np.linspace(-0.2, 0.2, ds.p)
    np.testing.assert_allclose(loadings_logit(sp, None, 0).loadings,
                               loadings_logit(ds, None, 0).loadings, rtol=1e-13)
    np.testing.assert_allclose(loadings_logit(sp, beta, 1).loadings,
                               loadings_logit(ds, beta, 1).loadings, rtol=1e-12)
    np.testing.assert_allclose(loadings_weighted(sp, w, t, None, 0, 3).loadings,
                               loadings_weighted(ds, w, t, None, 0, 3).loadings, rtol=1e-13)
