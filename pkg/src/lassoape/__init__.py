"""Post-double-selection inference for average partial effects in lasso logit
models with clustered data.

The pipeline fits a loading-weighted lasso logit, a family of weighted nodewise
lassos and a score-projection lasso, forms the orthogonal-score estimate of each
target APE, and calibrates simultaneous intervals with a multiplier cluster
bootstrap.

Typical use::

    from lassoape import BootstrapConfig, ClusteredDataset, bootstrap_maxima, fit_apes

    ds = ClusteredDataset.from_arrays(X, y, clusters)
    results, bundle = fit_apes(ds, targets=[1, 2])
    outcome = bootstrap_maxima(results, BootstrapConfig(B=1000, seed=7))
"""

from __future__ import annotations

from .ape import (
    ApeResult,
    NuisanceBundle,
    TargetNuisance,
    estimate_ape,
    estimate_nuisance,
    fit_apes,
    orthogonal_score,
    plugin_ape,
    results_json,
)
from .bootstrap import (
    BootstrapOutcome,
    bootstrap_maxima,
    critical_value,
    multiplier_matrix,
    replicate_maxima,
    simultaneous_intervals,
    test_statistic,
)
from .config import (
    BootstrapConfig,
    EstimatorConfig,
    PenaltyConfig,
    SolverConfig,
    VarianceConfig,
    apply_overrides,
    env_overrides,
)
from .data import (
    Cluster,
    ClusteredDataset,
    CsvSchema,
    load_long_csv,
    load_sparse_triplets,
    validate,
    write_long_csv,
)
from .errors import (
    ConfigError,
    ConflictError,
    ConsistencyError,
    ConvergenceError,
    DataError,
    DomainError,
    LassoApeError,
    NumericalError,
    ParseError,
    SeparationError,
    ShapeError,
    SingularityError,
)
from .logistic import fit_restricted_logit, fit_restricted_wls, logistic, logistic_deriv
from .nodewise import nodewise_fit, precision_row, tau_sq_identity_check, theta_row
from .penalty import PenaltyKind, PenaltyLoadings, inv_norm_cdf, lambda_for, loadings_logit, loadings_weighted
from .simulation import (
    MODELS,
    CoverageReport,
    DebiasingReport,
    DgpSpec,
    oracle_true_ape,
    run_coverage,
    run_debiasing,
    simulate_dgp,
    target_set_A,
)
from .solvers import KKTReport, LassoProblem, SelectionFit, kkt_check, solve_lasso_logit, solve_weighted_lasso

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
