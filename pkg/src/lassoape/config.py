"""Dataclass configuration objects and their flat-key / env-var overrides.

Every config key has a dotted name (``penalty.c``, ``solver.tol``, ...).  The
same names are accepted from a JSON config file and from environment
variables prefixed with ``LASSOAPE_`` where dots become double underscores,
e.g. ``LASSOAPE_PENALTY__M_BAR=2``.
"""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass, field
from typing import Any, Mapping

from .errors import ConfigError

ENV_PREFIX = "LASSOAPE_"


@dataclass(frozen=True)
class PenaltyConfig:
    """Penalty level and loading-iteration settings.

    ``gamma=None`` selects the default rule 0.1/log G, clamped to
    [1/G, 1/log G].  An explicit ``gamma`` is used as given.
    ``lambda_scale`` multiplies every computed lambda (0 disables penalization).
    ``weighted_factor`` is the explicit multiplier on the penalty of the
    weighted (nodewise and zeta) lassos; 2 is the default convention, 1 matches
    an objective whose loadings already carry the factor 2 of the score.
    """

    c: float = 1.1
    gamma: float | None = None
    m_bar: int = 1
    penalize_intercept: bool = True
    lambda_scale: float = 1.0
    weighted_factor: float = 2.0

    def __post_init__(self):
        if not self.c > 1:
            raise ConfigError(f"penalty.c must exceed 1, got {self.c}")
        if self.gamma is not None and not 0 < self.gamma <= 1:
            raise ConfigError(f"penalty.gamma must lie in (0, 1], got {self.gamma}")
        if self.m_bar < 0:
            raise ConfigError("penalty.m_bar must be >= 0")
        if self.lambda_scale < 0:
            raise ConfigError("penalty.lambda_scale must be >= 0")
        if not self.weighted_factor > 0:
            raise ConfigError("penalty.weighted_factor must be > 0")

    def gamma_for(self, G: int) -> float:
        if self.gamma is not None:
            return float(self.gamma)
        logG = math.log(G)
        g = 0.1 / logG
        return min(max(g, 1.0 / G), 1.0 / logG)


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-7
    max_outer: int = 200
    max_sweeps: int = 100_000
    newton_tol: float = 1e-8
    grad_tol: float = 1e-9
    max_newton: int = 200
    separation_cap: float = 30.0
    weight_floor: float = 1e-5


@dataclass(frozen=True)
class VarianceConfig:
    # Variance scores use beta_tilde_k by default; True switches them to beta_tilde^k_k like the bootstrap scores.
    use_beta_tilde_k: bool = False
    # Use "+mu'X(Y - Lambda)" in the score (not orthogonal; see README).
    literal_mu_sign: bool = False


@dataclass(frozen=True)
class BootstrapConfig:
    B: int = 600
    level_a: float = 0.05
    studentize: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.B < 1:
            raise ConfigError(f"bootstrap.B must be >= 1, got {self.B}")
        if not 0 < self.level_a < 1:
            raise ConfigError(f"level must lie in (0, 1), got {self.level_a}")


@dataclass(frozen=True)
class EstimatorConfig:
    penalty: PenaltyConfig = field(default_factory=PenaltyConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    variance: VarianceConfig = field(default_factory=VarianceConfig)
    threads: int = 1


def _coerce(value: Any, current: Any) -> Any:
    if isinstance(value, str):
        if isinstance(current, bool):
            low = value.strip().lower()
            if low in {"1", "true", "yes", "on"}:
                return True
            if low in {"0", "false", "no", "off"}:
                return False
            raise ConfigError(f"cannot parse boolean from {value!r}")
        if isinstance(current, int):
            return int(value)
        if isinstance(current, float) or current is None:
            return None if value.lower() in {"none", "null", ""} else float(value)
    return value


def apply_overrides(cfg, overrides: Mapping[str, Any]):
    """Return a copy of a (nested) dataclass config with dotted-key overrides."""
    nested: dict[str, dict[str, Any]] = {}
    flat: dict[str, Any] = {}
    for key, value in overrides.items():
        head, _, rest = key.partition(".")
        if rest:
            nested.setdefault(head, {})[rest] = value
        else:
            flat[head] = value
    names = {f.name for f in dataclasses.fields(cfg)}
    changes: dict[str, Any] = {}
    for key, value in flat.items():
        if key not in names:
            raise ConfigError(f"unknown config key {key!r}")
        changes[key] = _coerce(value, getattr(cfg, key))
    for head, sub in nested.items():
        if head not in names:
            raise ConfigError(f"unknown config section {head!r}")
        changes[head] = apply_overrides(getattr(cfg, head), sub)
    return dataclasses.replace(cfg, **changes)


def env_overrides(environ: Mapping[str, str] | None = None) -> dict[str, str]:
    environ = os.environ if environ is None else environ
    out = {}
    for key, value in environ.items():
        if key.startswith(ENV_PREFIX):
            out[key[len(ENV_PREFIX):].lower().replace("__", ".")] = value
    return out


def flatten(cfg, prefix: str = "") -> dict[str, Any]:
    out: dict[str, Any] = {}
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        key = prefix + f.name
        if dataclasses.is_dataclass(value):
            out.update(flatten(value, key + "."))
        else:
            out[key] = value
    return out
