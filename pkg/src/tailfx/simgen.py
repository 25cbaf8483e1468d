"""Seeded data generators for the simulation scenarios.

Each ``gen_*`` function returns a :class:`GeneratedSample` whose
``true_omega`` is the analytic tail slope of the scenario's average
dose-response.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special

from ._rng import SeedLike, as_generator
from .errors import DomainError
from .estimator import ObservationSet


class Scenario(str, enum.Enum):
    SIMPLE_51 = "simple_51"
    HIGHDIM_B1 = "highdim_b1"
    COPULA_B3 = "copula_b3"
    HIDDEN_B4 = "hidden_b4"
    EXTREMAL_B5 = "extremal_b5"


class Noise(str, enum.Enum):
    GAUSSIAN_SD10 = "gaussian"
    EXP_MEAN10 = "exponential"
    PARETO_1_1 = "pareto"


@dataclass(frozen=True)
class ScenarioSpec:
    """A scenario, its sample size and its variant-specific parameters."""

    variant: Scenario
    n: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "variant", Scenario(self.variant))
        if self.n < 1:
            raise DomainError("n must be at least 1")

    def generate(self, seed: SeedLike) -> "GeneratedSample":
        return GENERATORS[self.variant](self.n, seed=seed, **self.params)


@dataclass(frozen=True)
class GeneratedSample:
    data: ObservationSet
    true_omega: float
    true_mu: Callable[[float], float] | None = None
    hidden: np.ndarray | None = field(default=None, repr=False, compare=False)


def mu_kink(t, c: float, slope):
    """Piecewise-linear dose-response peaking at ``(c, 5)``."""
    t = np.asarray(t, dtype=float)
    out = 5.0 - np.asarray(slope, dtype=float) * np.abs(t - c)
    return float(out) if out.ndim == 0 else out


def student_t_noise(rng: np.random.Generator, n: int, nu: float) -> np.ndarray:
    """Student-t draws as ``Z / sqrt(chi2_nu / nu)``; ``nu=inf`` returns ``Z`` alone."""
    z = rng.standard_normal(n)
    if math.isinf(nu):
        return z
    if not nu > 0:
        raise DomainError("degrees of freedom must be positive")
    return z / np.sqrt(rng.chisquare(nu, n) / nu)


def pareto_noise(rng: np.random.Generator, n: int) -> np.ndarray:
    """Pareto with scale 1 and tail index 1: ``P(e > x) = 1/x`` for ``x >= 1``."""
    return 1.0 / (1.0 - rng.random(n))


def equicorrelated_normal(rng: np.random.Generator, n: int, d: int, rho: float = 0.1) -> np.ndarray:
    """Unit-variance Gaussian columns with pairwise correlation ``rho`` (one-factor form)."""
    common = rng.standard_normal((n, 1))
    own = rng.standard_normal((n, d))
    return math.sqrt(rho) * common + math.sqrt(1.0 - rho) * own


def positive_stable(rng: np.random.Generator, index: float, n: int) -> np.ndarray:
    """Positive stable variates with Laplace transform ``exp(-s**index)``, ``0 < index <= 1``.

    Chambers-Mallows-Stuck construction.
    """
    if index == 1.0:
        return np.ones(n)
    w = rng.uniform(0.0, np.pi, n)
    e = rng.standard_exponential(n)
    a = np.sin(index * w) / np.sin(w) ** (1.0 / index)
    b = (np.sin((1.0 - index) * w) / e) ** ((1.0 - index) / index)
    return a * b


def gumbel_copula_sample(dim: int, alpha: float, n: int, seed: SeedLike = None) -> np.ndarray:
    """Draw ``n`` rows from the ``dim``-variate Gumbel copula (Marshall-Olkin)."""
    if not alpha >= 1.0:
        raise DomainError(f"Gumbel parameter must be >= 1, got {alpha}")
    rng = as_generator(seed)
    v = positive_stable(rng, 1.0 / alpha, n)
    e = rng.standard_exponential((n, dim))
    return np.exp(-((e / v[:, None]) ** (1.0 / alpha)))


@dataclass(frozen=True)
class FourierFunction:
    """Smooth random function ``sum_k g_k / sqrt(K) * cos(w_k . x + phi_k)``."""

    gains: np.ndarray
    freqs: np.ndarray
    phases: np.ndarray

    @classmethod
    def random(cls, rng: np.random.Generator, dim: int, n_terms: int = 10) -> "FourierFunction":
        return cls(
            gains=rng.standard_normal(n_terms),
            freqs=rng.standard_normal((n_terms, dim)),
            phases=rng.uniform(0.0, 2.0 * np.pi, n_terms),
        )

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        K = self.gains.size
        return np.cos(X @ self.freqs.T + self.phases) @ self.gains / math.sqrt(K)


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------


def gen_simple_51(n: int, seed: SeedLike = None) -> GeneratedSample:
    """One binary confounder; slopes 1 (X=1) and 2 (X=0) above ``T = 1``."""
    rng = as_generator(seed)
    x = rng.binomial(1, 0.75, n).astype(float)
    t = x + rng.standard_normal(n)
    eps = rng.standard_normal(n)
    y = np.where(t <= 1.0, 2.0 - t, np.where(x == 1.0, t, 2.0 * t)) + eps
    return GeneratedSample(
        ObservationSet(x[:, None], t, y),
        true_omega=1.25,
        true_mu=lambda s: 1.25 * s if s > 1 else 2.0 - s,
    )


def gen_highdim_b1(
    n: int, d: int = 5, noise: Noise | str = Noise.EXP_MEAN10, seed: SeedLike = None
) -> GeneratedSample:
    """Equicorrelated Gaussian confounders and a kink at ``c = 1``; tail slope -1."""
    if d < 1:
        raise DomainError("d must be at least 1")
    noise = Noise(noise)
    rng = as_generator(seed)
    a = rng.normal(1.0, 1.0, d)
    b = rng.normal(-1.0, 1.0, d)
    X = equicorrelated_normal(rng, n, d, 0.1)
    if noise is Noise.GAUSSIAN_SD10:
        eps_t = rng.normal(0.0, 10.0, n)
    elif noise is Noise.EXP_MEAN10:
        eps_t = rng.exponential(10.0, n)
    else:
        eps_t = pareto_noise(rng, n)
    t = X @ a + eps_t
    y = mu_kink(t, 1.0, 1.0) + X @ b + rng.standard_normal(n)
    return GeneratedSample(ObservationSet(X, t, y), true_omega=-1.0)


def gen_copula_b3(
    n: int, alpha: float = 1.0, omega: float = 1.0, seed: SeedLike = None
) -> GeneratedSample:
    """Three Gaussian-margin confounders and an exponential treatment tied by a Gumbel copula."""
    rng = as_generator(seed)
    U = gumbel_copula_sample(4, alpha, n, seed=rng)
    X = special.ndtri(U[:, :3])
    t = -np.log1p(-U[:, 3])
    f = FourierFunction.random(rng, 3)
    fx = f(X)
    eps = rng.standard_normal(n)
    upper = np.where(X[:, 0] > 0, 0.5 * omega * t, 1.5 * omega * t)
    y = np.where(t <= 1.0, -10.0 * t + 15.0, upper) + fx + eps
    return GeneratedSample(ObservationSet(X, t, y), true_omega=0.5 * (0.5 * omega) + 0.5 * (1.5 * omega))


def gen_hidden_b4(
    n: int, delta: float = 0.0, omega: float = 5.0, seed: SeedLike = None
) -> GeneratedSample:
    """Binary observed confounder plus a hidden Gaussian one of strength ``delta``."""
    rng = as_generator(seed)
    x = rng.binomial(1, 0.75, n).astype(float)
    h = rng.normal(1.0, 1.0, n)
    t = delta * h + x + rng.standard_normal(n)
    eps = rng.standard_normal(n)
    upper = np.where(x == 1.0, 2.0 * omega / 3.0 * t, 6.0 * omega / 3.0 * t)
    y = delta * h + np.where(t <= 1.0, 3.0 - 2.0 * t, upper) + eps
    true_omega = 0.75 * (2.0 * omega / 3.0) + 0.25 * (6.0 * omega / 3.0)
    return GeneratedSample(ObservationSet(x[:, None], t, y), true_omega=true_omega, hidden=h)


def gen_extremal_b5(
    n: int, c: float = 1.0, nu: float = math.inf, seed: SeedLike = None
) -> GeneratedSample:
    """Kink at ``c`` with confounder-dependent slope ``|X|``; tail slope ``-E|X|``."""
    nu = float(nu)
    if not nu > 0:
        raise DomainError("nu must be positive or infinite")
    rng = as_generator(seed)
    x = rng.standard_normal(n)
    t = x + student_t_noise(rng, n, nu)
    y = mu_kink(t, c, np.abs(x)) + rng.standard_normal(n)
    return GeneratedSample(ObservationSet(x[:, None], t, y), true_omega=-math.sqrt(2.0 / math.pi))


GENERATORS = {
    Scenario.SIMPLE_51: gen_simple_51,
    Scenario.HIGHDIM_B1: gen_highdim_b1,
    Scenario.COPULA_B3: gen_copula_b3,
    Scenario.HIDDEN_B4: gen_hidden_b4,
    Scenario.EXTREMAL_B5: gen_extremal_b5,
}
