"""Replication harness for the simulation tables.

A *cell* is one scenario configuration replicated ``reps`` times. Each
replication draws a fresh sample, fits the estimator and records ``omega_hat``
(plus a bootstrap interval when requested). Cells summarise the replications as
``mean +/- spread95`` where ``spread95`` is the 95% quantile of the absolute
deviations from the mean.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from ._rng import split_seed
from .bootstrap import bootstrap_ci
from .errors import BenchAbortError, DomainError, TailFxError
from .estimator import FitConfig, fit, naive_ols_baseline
from .simgen import Noise, Scenario, ScenarioSpec

MAX_FAILURE_FRACTION = 0.20
PRINTED_REPS = 100
TABLE_IDS = ("T1", "T4", "T5", "T6", "S51")
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class BenchCell:
    table: str
    params: dict
    scenario: ScenarioSpec
    reps: int
    q: float
    estimates: np.ndarray = field(repr=False)
    failures: int
    mean: float
    spread95: float
    mean_ci_lower: float | None = None
    mean_ci_upper: float | None = None
    mean_ci_halfwidth: float | None = None
    naive_ols_mean: float | None = None
    failure_messages: tuple = field(default=(), repr=False)

    def row(self) -> dict:
        """Flat record for CSV/JSON emission."""
        return {
            "table": self.table,
            **{k: _plain(v) for k, v in self.params.items()},
            "n": self.scenario.n,
            "q": self.q,
            "reps": self.reps,
            "mean": self.mean,
            "spread95": self.spread95,
            "ci_lower": self.mean_ci_lower,
            "ci_upper": self.mean_ci_upper,
            "ci_halfwidth": self.mean_ci_halfwidth,
            "naive_ols_mean": self.naive_ols_mean,
            "failures": self.failures,
        }


def _plain(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return v.value if hasattr(v, "value") else v


def spread95(estimates) -> float:
    """95% quantile of ``|estimate - mean|``."""
    e = np.asarray(estimates, dtype=float)
    if e.min() == e.max():
        # the floating-point mean of equal values can be off by an ulp
        return 0.0
    return float(np.quantile(np.abs(e - e.mean()), 0.95))


def run_cell(
    scenario: ScenarioSpec,
    reps: int,
    q: float,
    bootstrap_B: int | None = None,
    master_seed=0,
    *,
    config: FitConfig | None = None,
    naive_ols: bool = False,
    table: str = "",
    params: dict | None = None,
) -> BenchCell:
    """Replicate one scenario configuration.

    Replication ``r`` draws its sample from ``split_seed(split_seed(master, r), 0)``
    and its bootstrap from ``split_seed(split_seed(master, r), 1)``, so results
    do not depend on execution order.

    Raises
    ------
    BenchAbortError
        More than 20% of the replications failed.
    """
    if reps < 2:
        raise DomainError(f"reps must be at least 2, got {reps}")
    config = config or FitConfig.affine(q)
    if config.level != q:
        raise DomainError("config level and q disagree")

    estimates, lowers, uppers, naive, messages = [], [], [], [], []
    for r in range(reps):
        rep_seed = split_seed(master_seed, r)
        try:
            sample = scenario.generate(split_seed(rep_seed, 0))
            estimate = fit(sample.data, config).omega_hat()
            if bootstrap_B:
                ci = bootstrap_ci(
                    sample.data,
                    lambda s: fit(s, config).omega_hat(),
                    B=bootstrap_B,
                    seed=split_seed(rep_seed, 1),
                )
            if naive_ols:
                naive.append(naive_ols_baseline(sample.data))
        except (TailFxError, np.linalg.LinAlgError) as exc:
            messages.append(f"rep {r}: {type(exc).__name__}: {exc}")
            continue
        estimates.append(estimate)
        if bootstrap_B:
            lowers.append(ci.lower)
            uppers.append(ci.upper)

    if len(messages) > MAX_FAILURE_FRACTION * reps:
        raise BenchAbortError(
            f"{len(messages)} of {reps} replications failed for {scenario}", messages
        )
    est = np.asarray(estimates)
    ci = {}
    if bootstrap_B:
        lo, hi = float(np.mean(lowers)), float(np.mean(uppers))
        half = float(np.mean(0.5 * (np.asarray(uppers) - np.asarray(lowers))))
        ci = dict(mean_ci_lower=lo, mean_ci_upper=hi, mean_ci_halfwidth=half)
    return BenchCell(
        table=table,
        params=dict(params or {}),
        scenario=scenario,
        reps=reps,
        q=q,
        estimates=est,
        failures=len(messages),
        mean=float(est.mean()),
        spread95=spread95(est),
        naive_ols_mean=float(np.mean(naive)) if naive_ols else None,
        failure_messages=tuple(messages),
        **ci,
    )


@dataclass(frozen=True)
class CellPlan:
    params: dict
    scenario: ScenarioSpec
    q: float
    bootstrap_B: int | None = None
    naive_ols: bool = False
    slow: bool = False


def table_plan(table_id: str, bootstrap_B: int | None = None) -> list[CellPlan]:
    """Grid of one table, in printed order.

    ``bootstrap_B`` overrides the per-table default (500 resamples for S51 and
    T4, none elsewhere); pass ``0`` to skip bootstrapping.
    """
    if table_id not in TABLE_IDS:
        raise DomainError(f"unknown table {table_id!r}; expected one of {', '.join(TABLE_IDS)}")

    def boot(default):
        return default if bootstrap_B is None else (bootstrap_B or None)

    plan = []
    if table_id == "S51":
        plan.append(CellPlan({}, ScenarioSpec(Scenario.SIMPLE_51, 500), 0.9, boot(500)))
    elif table_id == "T1":
        for d in (5, 25, 50, 200):
            for noise in (Noise.GAUSSIAN_SD10, Noise.EXP_MEAN10, Noise.PARETO_1_1):
                spec = ScenarioSpec(Scenario.HIGHDIM_B1, 5000, {"d": d, "noise": noise})
                plan.append(CellPlan({"d": d, "noise": noise}, spec, 0.95, boot(None), slow=d >= 200))
    elif table_id == "T4":
        for alpha in (1.0, 1.5, 2.0):
            for n in (1000, 5000, 10000):
                for omega in (0.0, 1.0, 10.0):
                    spec = ScenarioSpec(Scenario.COPULA_B3, n, {"alpha": alpha, "omega": omega})
                    q = 0.9 if n == 1000 else 0.95
                    plan.append(CellPlan({"alpha": alpha, "n": n, "omega": omega}, spec, q, boot(500)))
    elif table_id == "T5":
        for delta in (0.0, 1.0, 5.0, 10.0, 50.0):
            for n in (1000, 5000, 10000):
                for omega in (0.0, 5.0, 10.0):
                    spec = ScenarioSpec(Scenario.HIDDEN_B4, n, {"delta": delta, "omega": omega})
                    plan.append(CellPlan({"delta": delta, "n": n, "omega": omega}, spec, 0.9, boot(None)))
    else:
        for nu in (math.inf, 5.0, 2.0):
            for c in (1.0, 2.0, 5.0, 10.0):
                spec = ScenarioSpec(Scenario.EXTREMAL_B5, 5000, {"c": c, "nu": nu})
                plan.append(CellPlan({"nu": nu, "c": c}, spec, 0.95, boot(None), naive_ols=True))
    return plan


def scaled_reps(scale: float, printed: int = PRINTED_REPS) -> int:
    if not 0.0 < scale <= 1.0:
        raise DomainError(f"scale must lie in (0, 1], got {scale}")
    return max(2, math.ceil(scale * printed - 1e-9))


def run_table(
    table_id: str,
    scale: float = 1.0,
    master_seed=0,
    *,
    skip_slow: bool = False,
    bootstrap_B: int | None = None,
    cells: Iterable[int] | None = None,
) -> list[BenchCell]:
    """Run every cell of a table with ``ceil(scale * 100)`` replications each.

    Cell ``i`` uses master seed ``split_seed(master_seed, i)``. ``skip_slow``
    drops cells marked slow (the ``d = 200`` row of T1); ``cells`` restricts the
    run to the given plan indices.
    """
    reps = scaled_reps(scale)
    plan = table_plan(table_id, bootstrap_B)
    wanted = set(range(len(plan))) if cells is None else set(cells)
    out = []
    for i, cell in enumerate(plan):
        if i not in wanted or (skip_slow and cell.slow):
            continue
        out.append(
            run_cell(
                cell.scenario,
                reps,
                cell.q,
                cell.bootstrap_B,
                split_seed(master_seed, i),
                naive_ols=cell.naive_ols,
                table=table_id,
                params=cell.params,
            )
        )
    return out


def find_cell(cells: Iterable[BenchCell], **params) -> BenchCell:
    """The first cell (or plan entry) whose parameters include ``params``."""
    for cell in cells:
        if all(_plain(cell.params.get(k)) == _plain(v) for k, v in params.items()):
            return cell
    raise KeyError(params)


def _csv_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def table_to_csv(cells: list[BenchCell]) -> str:
    rows = [c.row() for c in cells]
    fields = list(dict.fromkeys(k for r in rows for k in r))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for r in rows:
        writer.writerow([_csv_value(r.get(k)) for k in fields])
    return buf.getvalue()


def table_to_json(cells: list[BenchCell], table_id: str, scale: float, master_seed) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "table": table_id,
        "scale": scale,
        "master_seed": master_seed,
        "cells": [c.row() for c in cells],
    }
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


__all__ = [
    "BenchCell",
    "CellPlan",
    "TABLE_IDS",
    "find_cell",
    "run_cell",
    "run_table",
    "scaled_reps",
    "spread95",
    "table_plan",
    "table_to_csv",
    "table_to_json",
]
