from __future__ import annotations

import pytest

from lassoape import ConfigError, EstimatorConfig, PenaltyConfig, apply_overrides, env_overrides
from lassoape.config import flatten


def test_dotted_overrides_coerce_types():
    cfg = apply_overrides(EstimatorConfig(), {"penalty.c": "1.3", "penalty.m_bar": "2",
                                              "penalty.penalize_intercept": "false",
                                              "solver.tol": 1e-8, "threads": "3"})
    assert cfg.penalty.c == 1.3 and cfg.penalty.m_bar == 2
    assert cfg.penalty.penalize_intercept is False
    assert cfg.solver.tol == 1e-8 and cfg.threads == 3
    assert EstimatorConfig().penalty.c == 1.1  # original untouched


def test_gamma_none_string():
    cfg = apply_overrides(EstimatorConfig(), {"penalty.gamma": "0.05"})
    assert cfg.penalty.gamma == 0.05


def test_unknown_keys():
    with pytest.raises(ConfigError):
        apply_overrides(EstimatorConfig(), {"penalty.nope": 1})
    with pytest.raises(ConfigError):
        apply_overrides(EstimatorConfig(), {"nope.c": 1})


def test_env_mapping():
    env = {"LASSOAPE_PENALTY__M_BAR": "3", "LASSOAPE_SOLVER__TOL": "1e-9", "OTHER": "x"}
    ov = env_overrides(env)
    assert ov == {"penalty.m_bar": "3", "solver.tol": "1e-9"}
    cfg = apply_overrides(EstimatorConfig(), ov)
    assert cfg.penalty.m_bar == 3 and cfg.solver.tol == 1e-9


@pytest.mark.parametrize("kwargs", [{"c": 1.0}, {"gamma": 0.0}, {"gamma": 1.5}, {"m_bar": -1},
                                    {"lambda_scale": -1.0}, {"weighted_factor": 0.0}])
def test_penalty_validation(kwargs):
    with pytest.raises(ConfigError):
        PenaltyConfig(**kwargs)


def test_flatten_round_trip():
    cfg = apply_overrides(EstimatorConfig(), {"penalty.c": 1.5, "variance.literal_mu_sign": True})
    flat = flatten(cfg)
    assert flat["penalty.c"] == 1.5 and flat["variance.literal_mu_sign"] is True
    assert apply_overrides(EstimatorConfig(), flat) == cfg
