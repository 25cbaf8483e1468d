"""Command-line interface: ``tailfx {fit,effect,simulate,bench}``.

Exit codes: 0 success, 2 usage or input parse error, 3 estimation error,
4 benchmark aborted for excessive failures.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, bench
from ._rng import split_seed
from .bootstrap import DEFAULT_RESAMPLES, bootstrap_many
from .errors import BenchAbortError, TailFxError
from .estimator import FitConfig, ObservationSet, ThetaFeatures, fit
from .simgen import GENERATORS, Noise, Scenario

EXIT_OK, EXIT_USAGE, EXIT_ESTIMATION, EXIT_ABORT = 0, 2, 3, 4
SCHEMA_VERSION = 1


class InputError(Exception):
    """Malformed user input, reported with exit code 2."""


# ---------------------------------------------------------------------------
# Input / output helpers
# ---------------------------------------------------------------------------


def read_csv_dataset(path, confounders: list[str] | None = None) -> tuple[ObservationSet, list[str]]:
    """Read a CSV with columns ``y``, ``t`` and confounders (all others, in order)."""
    try:
        handle = open(path, newline="")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if not header:
            raise InputError(f"{path}: line 1: missing header row")
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            raise InputError(f"{path}: line 1: duplicate column names")
        for required in ("y", "t"):
            if required not in header:
                raise InputError(f"{path}: line 1: missing required column '{required}'")
        if confounders is None:
            confounders = [h for h in header if h not in ("y", "t")]
        unknown = [c for c in confounders if c not in header]
        if unknown:
            raise InputError(f"{path}: line 1: unknown confounder column(s) {', '.join(unknown)}")
        if not confounders:
            raise InputError(f"{path}: line 1: at least one confounder column is required")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise InputError(f"{path}: line {lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                values = [float(c) for c in row]
            except ValueError:
                raise InputError(f"{path}: line {lineno}: non-numeric cell") from None
            if not all(math.isfinite(v) for v in values):
                raise InputError(f"{path}: line {lineno}: non-finite cell")
            rows.append(values)
    if not rows:
        raise InputError(f"{path}: no data rows")
    table = np.asarray(rows)
    col = {h: i for i, h in enumerate(header)}
    X = table[:, [col[c] for c in confounders]]
    data = ObservationSet(X, table[:, col["t"]], table[:, col["y"]])
    return data, confounders


def write_csv_dataset(path, data: ObservationSet) -> None:
    names = [f"x{j + 1}" for j in range(data.d)]
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["y", "t", *names])
        for y, t, x in zip(data.outcome, data.treatment, data.confounders):
            writer.writerow([repr(float(y)), repr(float(t)), *(repr(float(v)) for v in x)])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def dump_json(doc: dict, output) -> None:
    text = json.dumps({"schema_version": SCHEMA_VERSION, **_jsonable(doc)}, indent=2, sort_keys=True, allow_nan=False)
    if output is None or str(output) == "-":
        sys.stdout.write(text + "\n")
    else:
        Path(output).write_text(text + "\n")


# ---------------------------------------------------------------------------
# Argument types
# ---------------------------------------------------------------------------


def _open_unit(name):
    def parse(text):
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number, got {text!r}") from None
        if not 0.0 < v < 1.0:
            raise argparse.ArgumentTypeError(f"{name} must lie in (0, 1), got {text}")
        return v

    return parse


def _scale(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"scale must be a number, got {text!r}") from None
    if not 0.0 < v <= 1.0:
        raise argparse.ArgumentTypeError(f"scale must lie in (0, 1], got {text}")
    return v


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonneg_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text}")
    return v


def _float_list(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values or not all(math.isfinite(v) for v in values):
        raise argparse.ArgumentTypeError(f"expected finite comma-separated numbers, got {text!r}")
    return values


def _real(text):
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None


def _config_from_args(args) -> FitConfig:
    return FitConfig(
        level=args.q,
        covariate_scale=args.scale_model == "covariate",
        theta_features=ThetaFeatures(args.theta_features),
        outcome_intercept=args.outcome_intercept,
    )


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="CSV with columns y, t and confounders")
    p.add_argument("--confounders", type=lambda s: [c.strip() for c in s.split(",") if c.strip()],
                   help="comma-separated confounder columns (default: all except y and t)")
    p.add_argument("--q", type=_open_unit("q"), default=0.95, help="threshold quantile level (default 0.95)")
    p.add_argument("--theta-features", choices=[f.value for f in ThetaFeatures], default="tau_sigma",
                   help="tail parameters used as outcome-model features (default tau_sigma)")
    p.add_argument("--scale-model", choices=["constant", "covariate"], default="constant",
                   help="GPD scale: constant or log-linear in the confounders (default constant)")
    p.add_argument("--outcome-intercept", action="store_true", help="add a standalone outcome intercept")
    p.add_argument("--output", help="output JSON path (default stdout)")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_fit(args) -> int:
    data, names = read_csv_dataset(args.input, args.confounders)
    model = fit(data, _config_from_args(args))
    doc = {
        "command": "fit",
        "q": args.q,
        "confounders": names,
        "config": {
            "theta_features": model.config.theta_features.value,
            "covariate_scale": model.config.covariate_scale,
            "outcome_intercept": model.config.outcome_intercept,
        },
        "n": data.n,
        "n_exceedances": int(model.exceedance_indices.size),
        "threshold_coefficients": model.threshold.coefficients,
        "scale_link_coefficients": model.tail_dist.scale_link_coefficients,
        "shape": model.tail_dist.shape,
        "alpha_coefficients": model.outcome.alpha_coefficients,
        "beta_coefficients": model.outcome.beta_coefficients,
        "omega_hat": model.omega_hat(),
    }
    dump_json(doc, args.output)
    return EXIT_OK


def _interval(result):
    return {"estimate": result.point, "lower": result.lower, "upper": result.upper, "n_failed": result.n_failed}


def cmd_effect(args) -> int:
    data, names = read_csv_dataset(args.input, args.confounders)
    x_star = args.x_star
    if x_star is not None and len(x_star) != len(names):
        raise InputError(f"--x-star has {len(x_star)} values but there are {len(names)} confounders")
    config = _config_from_args(args)
    ts = args.t
    pairs = list(itertools.combinations(range(len(ts)), 2))

    def statistics(sample):
        model = fit(sample, config)
        out = {"omega_hat": model.omega_hat()}
        mu = [model.mu_hat(t) for t in ts]
        for i, t in enumerate(ts):
            out[f"mu_hat[{i}]"] = mu[i]
        for i, j in pairs:
            out[f"diff[{i},{j}]"] = mu[j] - mu[i]
        if x_star is not None:
            out["omega_hat_at"] = model.omega_hat_at(x_star)
            mu_x = [model.mu_hat_at(x_star, t) for t in ts]
            for i in range(len(ts)):
                out[f"mu_hat_at[{i}]"] = mu_x[i]
            for i, j in pairs:
                out[f"diff_at[{i},{j}]"] = mu_x[j] - mu_x[i]
        return out

    if args.B:
        results = bootstrap_many(data, statistics, B=args.B, level=args.level, seed=split_seed(args.seed, 0))

        def report(key):
            return _interval(results[key])

    else:
        point = statistics(data)

        def report(key):
            return {"estimate": point[key]}

    doc = {
        "command": "effect",
        "q": args.q,
        "confounders": names,
        "bootstrap": {"B": args.B, "level": args.level, "seed": args.seed} if args.B else None,
        "omega_hat": report("omega_hat"),
        "mu_hat": [{"t": t, **report(f"mu_hat[{i}]")} for i, t in enumerate(ts)],
        "differences": [{"t1": ts[i], "t2": ts[j], **report(f"diff[{i},{j}]")} for i, j in pairs],
    }
    if x_star is not None:
        doc["x_star"] = x_star
        doc["omega_hat_at"] = report("omega_hat_at")
        doc["mu_hat_at"] = [{"t": t, **report(f"mu_hat_at[{i}]")} for i, t in enumerate(ts)]
        doc["differences_at"] = [
            {"t1": ts[i], "t2": ts[j], **report(f"diff_at[{i},{j}]")} for i, j in pairs
        ]
    dump_json(doc, args.output)
    return EXIT_OK


SCENARIO_PARAMS = {
    Scenario.SIMPLE_51: (),
    Scenario.HIGHDIM_B1: ("d", "noise"),
    Scenario.COPULA_B3: ("alpha", "omega"),
    Scenario.HIDDEN_B4: ("delta", "omega"),
    Scenario.EXTREMAL_B5: ("c", "nu"),
}


def cmd_simulate(args) -> int:
    try:
        scenario = Scenario(args.scenario)
    except ValueError:
        valid = ", ".join(s.value for s in Scenario)
        raise InputError(f"unknown scenario {args.scenario!r}; valid scenarios: {valid}") from None
    params = {k: getattr(args, k) for k in SCENARIO_PARAMS[scenario] if getattr(args, k) is not None}
    sample = GENERATORS[scenario](args.n, seed=split_seed(args.seed, 0), **params)
    out = Path(args.output)
    write_csv_dataset(out, sample.data)
    sidecar = out.with_suffix(".json")
    if "noise" in params:
        params["noise"] = Noise(params["noise"]).value
    if "nu" in params and math.isinf(params["nu"]):
        params["nu"] = "inf"
    dump_json(
        {
            "command": "simulate",
            "scenario": scenario.value,
            "n": args.n,
            "params": params,
            "seed": args.seed,
            "true_omega": sample.true_omega,
            "csv": out.name,
        },
        sidecar,
    )
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.table not in bench.TABLE_IDS:
        raise InputError(f"unknown table {args.table!r}; valid tables: {', '.join(bench.TABLE_IDS)}")
    cells = bench.run_table(
        args.table, args.scale, args.seed, skip_slow=args.skip_slow, bootstrap_B=args.B
    )
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / f"{args.table}.csv").write_text(bench.table_to_csv(cells))
    (outdir / f"{args.table}.json").write_text(bench.table_to_json(cells, args.table, args.scale, args.seed))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _nu(text):
    if text.strip().lower() in ("inf", "infinity"):
        return math.inf
    v = _real(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"nu must be positive, got {text}")
    return v


def _alpha(text):
    v = _real(text)
    if not v >= 1.0:
        raise argparse.ArgumentTypeError(f"alpha must be at least 1, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tailfx", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit the model and write a JSON summary")
    _add_model_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("effect", help="extrapolated dose-response and tail slope with bootstrap intervals")
    _add_model_flags(p)
    p.add_argument("--t", type=_float_list, required=True, help="comma-separated treatment values")
    p.add_argument("--x-star", type=_float_list, help="comma-separated confounder vector")
    p.add_argument("--B", type=_nonneg_int, default=DEFAULT_RESAMPLES,
                   help=f"bootstrap resamples, 0 to skip intervals (default {DEFAULT_RESAMPLES})")
    p.add_argument("--level", type=_open_unit("level"), default=0.95, help="interval level (default 0.95)")
    p.add_argument("--seed", type=_nonneg_int, default=0, help="master seed (default 0)")
    p.set_defaults(func=cmd_effect)

    p = sub.add_parser("simulate", help="generate a simulation dataset")
    p.add_argument("--scenario", required=True, help="one of: " + ", ".join(s.value for s in Scenario))
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--d", type=_positive_int)
    p.add_argument("--noise", choices=[x.value for x in Noise])
    p.add_argument("--alpha", type=_alpha)
    p.add_argument("--omega", type=_real)
    p.add_argument("--delta", type=_real)
    p.add_argument("--c", type=_real)
    p.add_argument("--nu", type=_nu)
    p.add_argument("--output", required=True, help="CSV path; the sidecar JSON goes next to it")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="run a simulation table")
    p.add_argument("--table", required=True, help="one of: " + ", ".join(bench.TABLE_IDS))
    p.add_argument("--scale", type=_scale, default=1.0, help="fraction of the printed 100 replications")
    p.add_argument("--seed", type=_nonneg_int, default=0, help="master seed (default 0)")
    p.add_argument("--B", type=_nonneg_int, default=None,
                   help="bootstrap resamples per replication (default: per table; 0 to skip)")
    p.add_argument("--skip-slow", action="store_true", help="skip cells marked slow (T1, d=200)")
    p.add_argument("--output", required=True, help="output directory")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"tailfx: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BenchAbortError as exc:
        print(f"tailfx: benchmark aborted: {exc}", file=sys.stderr)
        for line in exc.failures[:20]:
            print(f"  {line}", file=sys.stderr)
        return EXIT_ABORT
    except TailFxError as exc:
        print(f"tailfx: estimation failed: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION


if __name__ == "__main__":
    sys.exit(main())
