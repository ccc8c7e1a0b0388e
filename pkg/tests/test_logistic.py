from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import optimize

from lassoape import ClusteredDataset, SeparationError, SingularityError
from lassoape.logistic import (fit_restricted_logit, fit_restricted_wls, logistic, logistic_deriv,
                               logistic_deriv2, softplus)

from conftest import random_dataset


# ---------------------------------------------------------------- link primitives


def test_deriv_identity():
    t = np.linspace(-30, 30, 2001)
    lam = logistic(t)
    np.testing.assert_allclose(logistic_deriv(t), lam * (1 - lam), rtol=0, atol=1e-14)


@given(st.floats(-700, 700))
def test_symmetry(t):
    # the sum itself rounds, so one half-ulp of 1.0 is the floor
    assert abs(logistic(t) + logistic(-t) - 1.0) <= 2.0**-53


def test_softplus_extremes():
    t = np.array([-745.0, -50.0, 0.0, 50.0, 745.0])
    sp = softplus(t)
    assert np.all(np.isfinite(sp))
    np.testing.assert_allclose(sp[[2, 3, 4]], [np.log(2.0), 50.0, 745.0], rtol=1e-15)
    assert 0.0 <= sp[0] < 1e-300
    np.testing.assert_allclose(sp[1], np.exp(-50.0), rtol=1e-14)


def test_second_derivative_finite_difference():
    t = np.linspace(-8, 8, 41)
    h = 1e-5
    fd = (logistic_deriv(t + h) - logistic_deriv(t - h)) / (2 * h)
    np.testing.assert_allclose(logistic_deriv2(t), fd, atol=1e-9)


# ---------------------------------------------------------------- restricted logit


def test_intercept_only_closed_form():
    y = np.array([1, 0, 0, 0] * 5, dtype=float)
    ds = ClusteredDataset.from_arrays(np.ones((20, 1)), y, np.arange(20) // 2)
    fit = fit_restricted_logit(ds, [0])
    assert fit.converged
    assert fit.beta[0] == pytest.approx(np.log(0.25 / 0.75), abs=1e-10)


def test_empty_support():
    ds = random_dataset(0)
    fit = fit_restricted_logit(ds, [])
    assert fit.converged and not np.any(fit.beta) and fit.support.size == 0


def test_matches_grid_search():
    ds = random_dataset(3, n=60, p=2, G=20, beta=np.array([0.2, 1.0]))
    X, y = ds.dense_X(), ds.y

    def negll(b):
        eta = X @ b
        return float(np.sum(softplus(eta) - y * eta))

    # coarse grid, then a fine grid around the coarse winner
    best = None
    for span, num in ((3.0, 121), (0.05, 201)):
        c = np.zeros(2) if best is None else best
        g0 = np.linspace(c[0] - span, c[0] + span, num)
        g1 = np.linspace(c[1] - span, c[1] + span, num)
        vals = np.array([[negll(np.array([a, b])) for b in g1] for a in g0])
        i, j = np.unravel_index(np.argmin(vals), vals.shape)
        best = np.array([g0[i], g1[j]])
    fit = fit_restricted_logit(ds, [0, 1])
    np.testing.assert_allclose(fit.beta, best, atol=1e-3)
    # the grid spacing is 5e-4; a continuous optimizer pins the answer to 1e-4
    ref = optimize.minimize(negll, best, method="BFGS", options={"gtol": 1e-10}).x
    np.testing.assert_allclose(fit.beta, ref, atol=1e-4)


def test_off_support_zero_and_first_order_condition():
    ds = random_dataset(7, p=6)
    S = [0, 2, 5]
    fit = fit_restricted_logit(ds, S)
    off = np.setdiff1d(np.arange(ds.p), S)
    assert np.all(fit.beta[off] == 0.0)
    X = ds.dense_X()
    grad = X.T @ (ds.y - logistic(X @ fit.beta)) / ds.G
    assert np.max(np.abs(grad[S])) <= 1e-7


def test_separation_error():
    x = np.linspace(-1, 1, 20)
    X = np.column_stack([np.ones(20), x])
    ds = ClusteredDataset.from_arrays(X, (x > 0).astype(float), np.arange(20))
    with pytest.raises(SeparationError):
        fit_restricted_logit(ds, [0, 1])


def test_permutation_invariance(rng):
    ds = random_dataset(9, p=4)
    base = fit_restricted_logit(ds, [0, 1, 3]).beta
    perm = rng.permutation(ds.n)
    labels = np.repeat(np.arange(ds.G), ds.cluster_sizes)
    ds2 = ClusteredDataset.from_arrays(ds.dense_X()[perm], ds.y[perm], labels[perm])
    np.testing.assert_allclose(fit_restricted_logit(ds2, [0, 1, 3]).beta, base, atol=1e-10)


# ---------------------------------------------------------------- restricted WLS


def test_wls_single_regressor():
    x = np.array([1.0, 2.0, -1.0, 0.5])
    y = np.array([2.0, 3.5, -2.5, 1.0])
    fit = fit_restricted_wls(y, x[:, None], np.ones(4), [0])
    assert fit.beta[0] == pytest.approx(x @ y / (x @ x), rel=1e-14)


def test_wls_zero_weights():
    with pytest.raises(SingularityError):
        fit_restricted_wls(np.ones(3), np.ones((3, 1)), np.zeros(3), [0])


def test_wls_empty_support():
    fit = fit_restricted_wls(np.ones(3), np.ones((3, 2)), np.ones(3), [])
    np.testing.assert_array_equal(fit.beta, 0.0)


def test_wls_matches_pseudo_inverse(rng):
    X = rng.normal(size=(50, 4))
    y = rng.normal(size=50)
    w = rng.uniform(0.01, 0.25, size=50)
    fit = fit_restricted_wls(y, X, w, [0, 1, 2, 3], G=7)
    sw = np.sqrt(w)
    ref = np.linalg.pinv(X * sw[:, None]) @ (y * sw)
    np.testing.assert_allclose(fit.beta, ref, atol=1e-8)
    resid = y - X @ fit.beta
    scale = np.abs(X).T @ (w * np.abs(y))
    assert np.all(np.abs(X.T @ (w * resid)) <= 1e-8 * scale)


def test_wls_collinear_ridge_escalation(rng):
    x = rng.normal(size=30)
    X = np.column_stack([x, x])
    fit = fit_restricted_wls(2 * x, X, np.ones(30), [0, 1])
    np.testing.assert_allclose(X @ fit.beta, 2 * x, atol=1e-6)
