"""Exception types raised across the package."""

from __future__ import annotations


class TailFxError(Exception):
    """Base class for all package errors."""


class DomainError(TailFxError, ValueError):
    """An argument lies outside the domain of the operation."""


class SingularDesignError(TailFxError, ValueError):
    """The design matrix does not have full column rank."""


class InsufficientDataError(TailFxError, ValueError):
    """Too few observations to fit the requested model."""


class InsufficientExceedancesError(InsufficientDataError):
    """The exceedance set above the fitted threshold is too small."""

    def __init__(self, level: float, n_exceedances: int, required: int):
        self.level = level
        self.n_exceedances = n_exceedances
        self.required = required
        super().__init__(
            f"only {n_exceedances} exceedances above the q={level:g} threshold; "
            f"at least {required} are required"
        )


class ConvergenceError(TailFxError, RuntimeError):
    """An iterative solver stopped before meeting its tolerance."""

    def __init__(self, message: str, last_iterate=None, diagnostics: dict | None = None):
        self.last_iterate = last_iterate
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class BootstrapDegeneracyError(TailFxError, RuntimeError):
    """Too many bootstrap resamples failed to produce a statistic."""

    def __init__(self, n_failed: int, n_resamples: int, messages: list[str]):
        self.n_failed = n_failed
        self.n_resamples = n_resamples
        self.messages = messages
        sample = "; ".join(sorted(set(messages))[:3])
        super().__init__(
            f"{n_failed} of {n_resamples} bootstrap resamples failed (limit 10%): {sample}"
        )


class BenchAbortError(TailFxError, RuntimeError):
    """A benchmark cell exceeded its replication-failure budget."""

    def __init__(self, message: str, failures: list[str]):
        self.failures = failures
        super().__init__(message)
