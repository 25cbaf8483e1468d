"""Percentile bootstrap for statistics of an :class:`ObservationSet`."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from ._rng import SeedLike, split_seed
from .errors import BootstrapDegeneracyError, DomainError, TailFxError
from .estimator import ObservationSet

DEFAULT_RESAMPLES = 500
MAX_FAILURE_FRACTION = 0.10
MIN_RESAMPLES = 100

Statistic = Callable[[ObservationSet], float]


@dataclass(frozen=True)
class BootstrapResult:
    point: float
    resampled: np.ndarray
    level: float
    lower: float
    upper: float
    n_failed: int = 0

    @property
    def n_resamples(self) -> int:
        return self.resampled.size + self.n_failed

    @property
    def half_width(self) -> float:
        return 0.5 * (self.upper - self.lower)

    def quantile(self, p: float) -> float:
        """Empirical ``p``-quantile of the resampled statistic (one-sided bounds)."""
        if not 0.0 <= p <= 1.0:
            raise DomainError(f"p must lie in [0, 1], got {p}")
        return float(np.quantile(self.resampled, p))

    def interval(self, level: float) -> tuple[float, float]:
        """Two-sided percentile interval at another ``level`` from the same draws."""
        _check_level(level)
        a = 0.5 * (1.0 - level)
        return self.quantile(a), self.quantile(1.0 - a)


def _check_level(level: float) -> None:
    if not 0.0 < level < 1.0:
        raise DomainError(f"level must lie in (0, 1), got {level}")


def resample_indices(n: int, seed: SeedLike) -> np.ndarray:
    """Row indices of one with-replacement resample of size ``n``."""
    return np.random.default_rng(seed).integers(0, n, size=n)


def bootstrap_many(
    data: ObservationSet,
    statistics: Mapping[str, Statistic] | Callable[[ObservationSet], Mapping[str, float]],
    B: int = DEFAULT_RESAMPLES,
    level: float = 0.95,
    seed: SeedLike = 0,
) -> dict[str, BootstrapResult]:
    """Bootstrap several statistics on shared resamples.

    ``statistics`` is either a mapping of name to scalar statistic or a single
    callable returning a mapping, which lets expensive work (such as a model
    fit) be shared across the statistics of one resample. A resample counts as
    failed when evaluating it raises a :class:`TailFxError` or yields a
    non-finite value; failures beyond 10% of ``B`` abort the run.
    """
    if B < MIN_RESAMPLES:
        raise DomainError(f"B must be at least {MIN_RESAMPLES}, got {B}")
    _check_level(level)
    if isinstance(statistics, Mapping):
        named = dict(statistics)

        def evaluate(sample):
            return {k: f(sample) for k, f in named.items()}

    else:
        evaluate = statistics

    # errors on the original data propagate unchanged
    point = {k: float(v) for k, v in evaluate(data).items()}
    draws = {k: [] for k in point}
    messages = []
    master = np.random.SeedSequence(seed) if not isinstance(seed, np.random.SeedSequence) else seed
    for b in range(B):
        sample = data.take(resample_indices(data.n, split_seed(master, b)))
        try:
            values = {k: float(v) for k, v in evaluate(sample).items()}
        except (TailFxError, np.linalg.LinAlgError) as exc:
            messages.append(f"resample {b}: {exc}")
            continue
        if not all(np.isfinite(v) for v in values.values()):
            messages.append(f"resample {b}: non-finite statistic")
            continue
        for k, v in values.items():
            draws[k].append(v)

    n_failed = len(messages)
    if n_failed > MAX_FAILURE_FRACTION * B:
        raise BootstrapDegeneracyError(n_failed, B, messages)
    a = 0.5 * (1.0 - level)
    out = {}
    for k, values in draws.items():
        arr = np.asarray(values)
        lo, hi = np.quantile(arr, [a, 1.0 - a])
        out[k] = BootstrapResult(point[k], arr, level, float(lo), float(hi), n_failed)
    return out


def bootstrap_ci(
    data: ObservationSet,
    statistic: Statistic,
    B: int = DEFAULT_RESAMPLES,
    level: float = 0.95,
    seed: SeedLike = 0,
) -> BootstrapResult:
    """Percentile bootstrap interval for a scalar ``statistic``.

    Each resample draws ``n`` whole rows with replacement. Interval endpoints
    are the ``(1 - level)/2`` and ``(1 + level)/2`` empirical quantiles of the
    successful evaluations (linear interpolation between order statistics).

    >>> import numpy as np
    >>> data = ObservationSet(np.zeros((5, 1)), np.arange(5.0), np.full(5, 2.0))
    >>> r = bootstrap_ci(data, lambda s: s.outcome.mean(), B=100, seed=1)
    >>> r.lower, r.upper
    (2.0, 2.0)
    """
    return bootstrap_many(data, {"value": statistic}, B=B, level=level, seed=seed)["value"]
