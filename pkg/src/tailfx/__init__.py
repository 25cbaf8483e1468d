"""Extrapolating treatment effects into the tail of a continuous treatment."""

__version__ = "0.1.0"

from .bootstrap import BootstrapResult, bootstrap_ci, bootstrap_many
from .errors import (
    BenchAbortError,
    BootstrapDegeneracyError,
    ConvergenceError,
    DomainError,
    InsufficientDataError,
    InsufficientExceedancesError,
    SingularDesignError,
    TailFxError,
)
from .estimator import (
    ExtremeEffectModel,
    FitConfig,
    ObservationSet,
    ThetaFeatures,
    fit,
    mu_hat,
    mu_hat_at,
    naive_ols_baseline,
    omega_hat,
    omega_hat_at,
    predict_theta,
)

__all__ = [
    "BenchAbortError",
    "BootstrapDegeneracyError",
    "BootstrapResult",
    "ConvergenceError",
    "DomainError",
    "ExtremeEffectModel",
    "FitConfig",
    "InsufficientDataError",
    "InsufficientExceedancesError",
    "ObservationSet",
    "SingularDesignError",
    "TailFxError",
    "ThetaFeatures",
    "bootstrap_ci",
    "bootstrap_many",
    "fit",
    "mu_hat",
    "mu_hat_at",
    "naive_ols_baseline",
    "omega_hat",
    "omega_hat_at",
    "predict_theta",
]
