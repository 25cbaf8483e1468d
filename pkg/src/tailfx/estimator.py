"""Two-step estimator of the dose-response tail.

Step one fits a covariate-dependent threshold by quantile regression, keeps the
observations whose treatment exceeds it and fits a generalized Pareto model to
the excesses. Step two regresses the outcome on the fitted tail parameters and
their interaction with the treatment, using the exceedances only. The fitted
model extrapolates the average dose-response ``mu_hat(t)``, the conditional
curve ``mu_hat_at(x, t)`` and the tail slopes ``omega_hat`` / ``omega_hat_at``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, InsufficientExceedancesError
from .numkit import GpdFit, QuantileFit, fit_gpd_mle, ols, quantile_regression

DEFAULT_LEVEL = 0.95


class ThetaFeatures(str, enum.Enum):
    """Which fitted tail parameters enter the outcome model."""

    TAU_ONLY = "tau"
    TAU_AND_SIGMA = "tau_sigma"


@dataclass(frozen=True)
class ObservationSet:
    """Confounders ``X`` (n x d), treatment ``T`` (n) and outcome ``Y`` (n)."""

    confounders: np.ndarray
    treatment: np.ndarray
    outcome: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.confounders, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        T = np.asarray(self.treatment, dtype=float).ravel()
        Y = np.asarray(self.outcome, dtype=float).ravel()
        if X.ndim != 2 or not (X.shape[0] == T.size == Y.size) or T.size < 1:
            raise DomainError("confounders, treatment and outcome must share a length n >= 1")
        if not (np.isfinite(X).all() and np.isfinite(T).all() and np.isfinite(Y).all()):
            raise DomainError("observations must be finite")
        object.__setattr__(self, "confounders", X)
        object.__setattr__(self, "treatment", T)
        object.__setattr__(self, "outcome", Y)

    @property
    def n(self) -> int:
        return self.treatment.size

    @property
    def d(self) -> int:
        return self.confounders.shape[1]

    def take(self, indices) -> "ObservationSet":
        idx = np.asarray(indices)
        return ObservationSet(self.confounders[idx], self.treatment[idx], self.outcome[idx])

    def with_outcome(self, outcome) -> "ObservationSet":
        return ObservationSet(self.confounders, self.treatment, outcome)


@dataclass(frozen=True)
class FitConfig:
    level: float = DEFAULT_LEVEL
    covariate_scale: bool = True
    theta_features: ThetaFeatures = ThetaFeatures.TAU_ONLY
    outcome_intercept: bool = False

    def __post_init__(self):
        if not 0.0 < float(self.level) < 1.0:
            raise DomainError(f"level must lie in (0, 1), got {self.level}")
        object.__setattr__(self, "theta_features", ThetaFeatures(self.theta_features))

    @classmethod
    def affine(cls, level: float = DEFAULT_LEVEL) -> "FitConfig":
        """Affine ``alpha`` and ``beta`` in the threshold.

        With a constant scale the features ``(tau, sigma)`` span ``[1, tau]``, so
        the outcome design is ``[1, tau, t, tau t]``: each of ``alpha`` and
        ``beta`` gets its own intercept.
        """
        return cls(level=level, covariate_scale=False, theta_features=ThetaFeatures.TAU_AND_SIGMA)


@dataclass(frozen=True)
class TailOutcomeModel:
    """``E[Y | T=t, theta] ~ alpha(theta) + beta(theta) t`` with linear alpha, beta.

    ``alpha_coefficients`` is prefixed by the intercept when the model has one.
    """

    alpha_coefficients: np.ndarray
    beta_coefficients: np.ndarray
    intercept: bool

    def alpha(self, features: np.ndarray) -> np.ndarray:
        F = np.atleast_2d(features)
        a = self.alpha_coefficients
        if self.intercept:
            return a[0] + F @ a[1:]
        return F @ a

    def beta(self, features: np.ndarray) -> np.ndarray:
        return np.atleast_2d(features) @ self.beta_coefficients


class Theta(NamedTuple):
    tau: float
    sigma: float
    shape: float


def _with_intercept(X: np.ndarray) -> np.ndarray:
    return np.column_stack([np.ones(X.shape[0]), X])


@dataclass(frozen=True)
class ExtremeEffectModel:
    threshold: QuantileFit
    tail_dist: GpdFit
    outcome: TailOutcomeModel
    exceedance_indices: np.ndarray
    config: FitConfig
    training_thetas: np.ndarray

    @property
    def n_confounders(self) -> int:
        return self.threshold.coefficients.size - 1

    def _check_x(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.n_confounders:
            raise DomainError(f"expected {self.n_confounders} confounders, got {x.size}")
        return x

    def features(self, X) -> np.ndarray:
        """Outcome-model features of each confounder row."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        tau = _with_intercept(X) @ self.threshold.coefficients
        if self.config.theta_features is ThetaFeatures.TAU_ONLY:
            return tau[:, None]
        return np.column_stack([tau, self.tail_dist.scale_at(X)])

    def predict_theta(self, x) -> Theta:
        x = self._check_x(x)
        tau = float(np.concatenate([[1.0], x]) @ self.threshold.coefficients)
        sigma = float(self.tail_dist.scale_at(x[None, :])[0])
        return Theta(tau, sigma, float(self.tail_dist.shape))

    def mu_hat(self, t: float) -> float:
        F = self.training_thetas
        return float(np.mean(self.outcome.alpha(F) + self.outcome.beta(F) * t))

    def mu_hat_at(self, x_star, t: float) -> float:
        F = self.features(self._check_x(x_star)[None, :])
        return float(self.outcome.alpha(F)[0] + self.outcome.beta(F)[0] * t)

    def omega_hat(self) -> float:
        return float(np.mean(self.outcome.beta(self.training_thetas)))

    def omega_hat_at(self, x_star) -> float:
        F = self.features(self._check_x(x_star)[None, :])
        return float(self.outcome.beta(F)[0])


def exceedance_mask(treatment, design, coefficients) -> np.ndarray:
    """Rows whose treatment lies strictly above the fitted threshold.

    The quantile fit interpolates ``p`` rows exactly; their residuals are zero
    up to rounding, so "strictly above" means above by more than a rounding
    bound on ``design @ coefficients``.
    """
    T = np.asarray(treatment, dtype=float)
    tau = design @ coefficients
    tol = 8 * design.shape[1] * np.finfo(float).eps * (np.abs(T) + np.abs(design) @ np.abs(coefficients))
    return T - tau > tol


def fit(data: ObservationSet, config: FitConfig | None = None) -> ExtremeEffectModel:
    """Fit the two-step extreme-treatment-effect model.

    Raises
    ------
    InsufficientExceedancesError
        When fewer exceedances than ``max(5, width + 1)`` remain above the
        fitted threshold, ``width`` being the outcome-design width.
    """
    config = config or FitConfig()
    X, T, Y = data.confounders, data.treatment, data.outcome
    design = _with_intercept(X)
    m = 1 if config.theta_features is ThetaFeatures.TAU_ONLY else 2
    width = 2 * m + int(config.outcome_intercept)
    required = max(5, width + 1)

    # expected |S| is n(1-q); bail out before solving when that cannot suffice
    if data.n * (1.0 - config.level) < required or data.n <= design.shape[1]:
        raise InsufficientExceedancesError(config.level, int(data.n * (1 - config.level)), required)

    threshold = quantile_regression(design, T, config.level)
    tau = design @ threshold.coefficients
    S = np.flatnonzero(exceedance_mask(T, design, threshold.coefficients))
    if S.size < required:
        raise InsufficientExceedancesError(config.level, int(S.size), required)

    tail = fit_gpd_mle(T[S] - tau[S], X[S], covariate_scale=config.covariate_scale)

    if config.theta_features is ThetaFeatures.TAU_ONLY:
        F = tau[:, None]
    else:
        F = np.column_stack([tau, tail.scale_at(X)])
    FS, TS = F[S], T[S]
    cols = [FS, FS * TS[:, None]]
    if config.outcome_intercept:
        cols.insert(0, np.ones((S.size, 1)))
    coef = ols(np.hstack(cols), Y[S]).coefficients
    k = m + int(config.outcome_intercept)
    outcome = TailOutcomeModel(coef[:k], coef[k:], config.outcome_intercept)
    return ExtremeEffectModel(threshold, tail, outcome, S, config, F)


def predict_theta(model: ExtremeEffectModel, x) -> Theta:
    return model.predict_theta(x)


def mu_hat(model: ExtremeEffectModel, t: float) -> float:
    """Average extrapolated dose-response over all training rows."""
    return model.mu_hat(t)


def mu_hat_at(model: ExtremeEffectModel, x_star, t: float) -> float:
    return model.mu_hat_at(x_star, t)


def omega_hat(model: ExtremeEffectModel) -> float:
    """Tail slope ``mean_i beta(theta_i)``, i.e. ``mu_hat(t + 1) - mu_hat(t)``."""
    return model.omega_hat()


def omega_hat_at(model: ExtremeEffectModel, x_star) -> float:
    return model.omega_hat_at(x_star)


def naive_ols_baseline(data: ObservationSet) -> float:
    """Treatment coefficient of the full-data regression ``Y ~ 1 + T + X``."""
    design = np.column_stack([np.ones(data.n), data.treatment, data.confounders])
    return float(ols(design, data.outcome).coefficients[1])
