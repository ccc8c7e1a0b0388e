from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lassoape import ClusteredDataset, DgpSpec, simulate_dgp

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_dataset(seed: int, n: int = 120, p: int = 6, G: int = 30, beta=None,
                   intercept: bool = True) -> ClusteredDataset:
    """Logit draw with correlated covariates and random cluster labels."""
    rng = np.random.default_rng(seed)
    d = p - 1 if intercept else p
    Z = rng.normal(size=(n, d)) + 0.4 * rng.normal(size=(n, 1))
    X = np.column_stack([np.ones(n), Z]) if intercept else Z
    if beta is None:
        beta = np.zeros(p)
        beta[: min(p, 3)] = [0.3, 0.8, -0.6][: min(p, 3)]
    prob = 1.0 / (1.0 + np.exp(-(X @ beta)))
    y = (rng.uniform(size=n) < prob).astype(float)
    clusters = rng.integers(G, size=n)
    cols = (["intercept"] if intercept else []) + [f"x{j}" for j in range(2 if intercept else 1, p + 1)]
    return ClusteredDataset.from_arrays(X, y, clusters, cols[:p])


@pytest.fixture(scope="session")
def m1_small() -> ClusteredDataset:
    return simulate_dgp(DgpSpec("M1", beta2=0.5, G0=60, n=150, p=40, seed=11))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
