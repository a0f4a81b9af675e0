"""Command-line interface: seeded simulation, fitting, forecasting and
factor-count estimation over CSV files.

Every command honors --seed, so identical seed and flags produce
byte-identical outputs, and writes a manifest.json recording the resolved
configuration next to its outputs.  A TOML file passed via --config may
set the same keys as the flags; explicit flags win.  Exit codes: 0
success, 2 usage or input errors, 1 runtime failures.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import __version__
from .bench import (
    SimConfig,
    result_row,
    results_summary,
    run_benchmark,
    write_results_csv,
)
from .factors import (
    center_columns,
    estimate_num_factors,
    no_factor_decomposition,
    pca_decompose,
)
from .forecast import (
    FORECAST_METHODS,
    RollingConfig,
    forecast_summary,
    ingest_csv,
    rolling_forecast,
    write_forecast_csv,
)
from .gibbs import PriorConfig, run_chain, threshold_select
from .linalg import RngStream

__all__ = ["main", "RunManifest"]


class UsageError(Exception):
    """Bad flags, bad config keys or unreadable inputs; exits with 2."""


@dataclass(frozen=True)
class RunManifest:
    """Reproducibility record written next to every command's outputs."""

    command: str
    config: dict
    seed: int
    output_paths: tuple
    tool_version: str = __version__

    def as_dict(self):
        return {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "output_paths": list(self.output_paths),
            "tool_version": self.tool_version,
        }


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(out_dir, command, config, seed, outputs):
    manifest = RunManifest(
        command=command,
        config=config,
        seed=int(seed),
        output_paths=tuple(outputs),
    )
    _write_json(os.path.join(out_dir, "manifest.json"), manifest.as_dict())


def _ensure_out_dir(path):
    os.makedirs(path, exist_ok=True)
    return path


def _resolve(args, defaults):
    """Merge defaults, --config file values and explicit flags (flags win)."""
    merged = dict(defaults)
    given = vars(args)
    config_path = given.pop("config", None)
    if config_path is not None:
        try:
            with open(config_path, "rb") as fh:
                from_file = tomllib.load(fh)
        except FileNotFoundError:
            raise UsageError(f"config file not found: {config_path}") from None
        except tomllib.TOMLDecodeError as exc:
            raise UsageError(f"config file {config_path}: {exc}") from None
        unknown = set(from_file) - set(defaults)
        if unknown:
            raise UsageError(
                f"config file {config_path} sets unknown keys: {sorted(unknown)}"
            )
        merged.update(from_file)
    merged.update(given)
    return merged


def _open_panel(opts):
    path = opts["data"]
    if not os.path.exists(path):
        raise UsageError(f"data file not found: {path}")
    try:
        return ingest_csv(
            path,
            response_columns=[opts["response"]],
            date_column=opts["date_column"],
            impute=opts["impute"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _suppress_defaults(parser):
    for action in parser._actions:
        if action.dest != "help":
            action.default = argparse.SUPPRESS


# ---------------------------------------------------------------- simulate

SIMULATE_DEFAULTS = {
    "n": 200,
    "p": 500,
    "s": 5,
    "k": 3,
    "alpha": "0.8,1.0,1.2",
    "beta_value": 0.3,
    "sigma": 0.5,
    "scenario": "factor-adjusted",
    "method": "fa-bayes",
    "khat": 3,
    "replicates": 100,
    "iters": 20,
    "burn_in": 10,
    "s0": 1.0,
    "cv_folds": 10,
    "grid_size": 50,
    "out": ".",
    "seed": 0,
    "threads": 0,
    "config": None,
}


def _simulate_config(opts):
    scenario = opts["scenario"].replace("-", "_")
    method = opts["method"].replace("-", "_")
    khat = int(opts["khat"])
    # k-hat decides the variant: 0 runs the generic twin of the method
    base = "bayes" if method.endswith("bayes") else "lasso"
    method = ("generic_" if khat == 0 else "fa_") + base
    kwargs = dict(
        n=int(opts["n"]),
        p=int(opts["p"]),
        s=int(opts["s"]),
        k=int(opts["k"]),
        sigma_star=float(opts["sigma"]),
        scenario=scenario,
        replicates=int(opts["replicates"]),
        khat_used=khat,
        method=method,
        iters=int(opts["iters"]),
        burn_in=int(opts["burn_in"]),
        s0=float(opts["s0"]),
        cv_folds=int(opts["cv_folds"]),
        grid_size=int(opts["grid_size"]),
        beta_star_values=(float(opts["beta_value"]),) * int(opts["s"]),
    )
    if scenario == "sub_model":
        kwargs["alpha_star"] = None
    elif scenario == "no_correlation":
        kwargs["k"] = 0
        kwargs["alpha_star"] = ()
    else:
        kwargs["alpha_star"] = tuple(
            float(v) for v in str(opts["alpha"]).split(",") if v != ""
        )
    return SimConfig(**kwargs)


def cmd_simulate(opts):
    try:
        cfg = _simulate_config(opts)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None
    threads = int(opts["threads"]) or (os.cpu_count() or 1)
    report = run_benchmark(cfg, RngStream(int(opts["seed"])), threads=threads)
    out = _ensure_out_dir(opts["out"])
    rows = [result_row(cfg, report)]
    csv_path = os.path.join(out, "results.csv")
    json_path = os.path.join(out, "results.json")
    write_results_csv(csv_path, rows)
    _write_json(json_path, results_summary(rows))
    _write_manifest(
        out, "simulate", _manifest_config(opts), opts["seed"],
        ["results.csv", "results.json"],
    )
    return 0


def _manifest_config(opts):
    return {key: opts[key] for key in sorted(opts) if key not in ("config",)}


# --------------------------------------------------------------------- fit

FIT_DEFAULTS = {
    "data": None,
    "response": None,
    "date_column": None,
    "impute": None,
    "khat": None,
    "k_max": None,
    "s0": 1.0,
    "iters": 20,
    "burn_in": 10,
    "out": ".",
    "seed": 0,
    "threads": 0,
    "config": None,
}


def cmd_fit(opts):
    if not opts["data"] or not opts["response"]:
        raise UsageError("fit needs --data and --response")
    if opts["khat"] is not None and opts["k_max"] is not None:
        raise UsageError("pass either --khat or --k-max, not both")
    panel = _open_panel(opts)
    y = panel.response(opts["response"])
    data = center_columns(panel.X_raw)
    if opts["k_max"] is not None:
        khat = estimate_num_factors(data, int(opts["k_max"]))
    else:
        khat = int(opts["khat"]) if opts["khat"] is not None else 0
    dec = pca_decompose(data, khat) if khat else no_factor_decomposition(data)
    chain = run_chain(
        dec,
        y - y.mean(),
        prior=PriorConfig(s0=float(opts["s0"])),
        iters=int(opts["iters"]),
        burn_in=int(opts["burn_in"]),
        rng=RngStream(int(opts["seed"])),
    )
    selected = threshold_select(
        chain.posterior_mean_beta, chain.posterior_mean_sigma2, panel.T
    )
    sizes = [state.support.size for state in chain.samples]
    summary = {
        "khat_used": khat,
        "posterior_mean_alpha": chain.posterior_mean_alpha.tolist(),
        "posterior_mean_beta": chain.posterior_mean_beta.tolist(),
        "posterior_mean_sigma2": chain.posterior_mean_sigma2,
        "modal_model": [int(j) for j in chain.modal_model],
        "selected": [int(j) for j in selected],
        "selected_names": [panel.covariate_names[int(j)] for j in selected],
        "diagnostics": {
            "iters": chain.total_iters,
            "burn_in": chain.burn_in,
            "retained": len(chain.samples),
            "avg_model_size": float(np.mean(sizes)),
        },
    }
    out = _ensure_out_dir(opts["out"])
    _write_json(os.path.join(out, "posterior.json"), summary)
    config = _manifest_config(opts)
    config["khat"] = khat
    _write_manifest(out, "fit", config, opts["seed"], ["posterior.json"])
    return 0


# ---------------------------------------------------------------- forecast

FORECAST_DEFAULTS = {
    "data": None,
    "response": None,
    "date_column": None,
    "impute": None,
    "window": 100,
    "method": "fa-bayes",
    "khat": None,
    "k_max": 10,
    "s0": 10.0,
    "components": 8,
    "iters": 20,
    "burn_in": 10,
    "cv_folds": 10,
    "grid_size": 50,
    "out": ".",
    "seed": 0,
    "threads": 0,
    "config": None,
}


def cmd_forecast(opts):
    if not opts["data"] or not opts["response"]:
        raise UsageError("forecast needs --data and --response")
    method = opts["method"].replace("-", "_")
    if method not in FORECAST_METHODS:
        raise UsageError(f"unknown method {opts['method']!r}")
    panel = _open_panel(opts)
    if opts["khat"] is not None:
        k_policy = ("fixed", int(opts["khat"]))
    else:
        k_policy = ("estimate", int(opts["k_max"]))
    try:
        cfg = RollingConfig(
            method=method,
            window=int(opts["window"]),
            k_policy=k_policy,
            s0=float(opts["s0"]),
            pcr_components=int(opts["components"]),
            iters=int(opts["iters"]),
            burn_in=int(opts["burn_in"]),
            cv_folds=int(opts["cv_folds"]),
            grid_size=int(opts["grid_size"]),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    result = rolling_forecast(
        panel, cfg, RngStream(int(opts["seed"])), series=opts["response"]
    )
    out = _ensure_out_dir(opts["out"])
    write_forecast_csv(os.path.join(out, "forecast.csv"), result)
    _write_json(os.path.join(out, "forecast.json"), forecast_summary(result))
    _write_manifest(
        out, "forecast", _manifest_config(opts), opts["seed"],
        ["forecast.csv", "forecast.json"],
    )
    return 0


# -------------------------------------------------------------- estimate-k

ESTIMATE_K_DEFAULTS = {
    "data": None,
    "date_column": None,
    "k_max": 10,
    "out": ".",
    "seed": 0,
    "threads": 0,
    "config": None,
}


def cmd_estimate_k(opts):
    if not opts["data"]:
        raise UsageError("estimate-k needs --data")
    path = opts["data"]
    if not os.path.exists(path):
        raise UsageError(f"data file not found: {path}")
    try:
        with open(path, newline="") as fh:
            import csv as _csv

            reader = _csv.reader(fh)
            header = [name.strip() for name in next(reader)]
            rows = list(reader)
    except (OSError, StopIteration) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    keep = [j for j, name in enumerate(header) if name != opts["date_column"]]
    try:
        X = np.array([[float(r[j]) for j in keep] for r in rows])
    except (ValueError, IndexError) as exc:
        raise UsageError(f"{path}: non-numeric or ragged covariate data: {exc}") from None
    data = center_columns(X)
    k_max = int(opts["k_max"])
    try:
        khat = estimate_num_factors(data, k_max)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    values = np.linalg.eigvalsh(data.X @ data.X.T / X.shape[0])[::-1]
    top = values[: k_max + 1]
    summary = {
        "khat": khat,
        "k_max": k_max,
        "eigenvalues": top.tolist(),
        "ratios": (top[:-1] / top[1:]).tolist(),
    }
    out = _ensure_out_dir(opts["out"])
    _write_json(os.path.join(out, "eigenvalues.json"), summary)
    _write_manifest(
        out, "estimate-k", _manifest_config(opts), opts["seed"], ["eigenvalues.json"]
    )
    return 0


# ------------------------------------------------------------------ parser

def _add_common(sub):
    sub.add_argument("--seed", type=int, help="RNG seed (default 0)")
    sub.add_argument("--threads", type=int, help="worker cap (default: all cores)")
    sub.add_argument("--out", help="output directory (default .)")
    sub.add_argument("--config", help="TOML file setting the same keys; flags win")


def _add_panel_flags(sub):
    sub.add_argument("--data", help="input CSV with a header row")
    sub.add_argument("--response", help="response column name")
    sub.add_argument("--date-column", dest="date_column", help="label column to keep")
    sub.add_argument(
        "--impute",
        choices=["column-mean"],
        help="fill missing covariate cells with column means",
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fasreg",
        description="Factor-adjusted sparse regression toolkit",
    )
    parser.add_argument("--version", action="version", version=f"fasreg {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    sim = commands.add_parser("simulate", help="synthetic benchmark tables")
    for flag, kind in [
        ("--n", int), ("--p", int), ("--s", int), ("--k", int),
        ("--sigma", float), ("--beta-value", float), ("--khat", int),
        ("--replicates", int), ("--iters", int), ("--burn-in", int),
        ("--s0", float), ("--cv-folds", int), ("--grid-size", int),
    ]:
        sim.add_argument(flag, type=kind)
    sim.add_argument("--alpha", help="comma-separated factor coefficients")
    sim.add_argument(
        "--scenario", choices=["factor-adjusted", "no-correlation", "sub-model"]
    )
    sim.add_argument(
        "--method",
        choices=["fa-bayes", "generic-bayes", "fa-lasso", "generic-lasso"],
        help="generic/fa prefix follows --khat (0 means generic)",
    )
    _add_common(sim)

    fit = commands.add_parser("fit", help="posterior for one response column")
    _add_panel_flags(fit)
    fit.add_argument("--khat", type=int, help="factor count (0 = no adjustment)")
    fit.add_argument("--k-max", dest="k_max", type=int, help="estimate k up to this")
    fit.add_argument("--s0", type=float)
    fit.add_argument("--iters", type=int)
    fit.add_argument("--burn-in", dest="burn_in", type=int)
    _add_common(fit)

    fc = commands.add_parser("forecast", help="rolling one-step-ahead forecasts")
    _add_panel_flags(fc)
    fc.add_argument("--window", type=int)
    fc.add_argument(
        "--method",
        choices=[m.replace("_", "-") for m in FORECAST_METHODS],
    )
    fc.add_argument("--khat", type=int, help="fixed factor count per window")
    fc.add_argument("--k-max", dest="k_max", type=int, help="re-estimate k per window")
    fc.add_argument("--s0", type=float)
    fc.add_argument("--components", type=int, help="pcr component count")
    fc.add_argument("--iters", type=int)
    fc.add_argument("--burn-in", dest="burn_in", type=int)
    fc.add_argument("--cv-folds", dest="cv_folds", type=int)
    fc.add_argument("--grid-size", dest="grid_size", type=int)
    _add_common(fc)

    est = commands.add_parser("estimate-k", help="eigenvalue-ratio factor count")
    est.add_argument("--data", help="covariate CSV with a header row")
    est.add_argument("--date-column", dest="date_column", help="label column to skip")
    est.add_argument("--k-max", dest="k_max", type=int)
    _add_common(est)

    for sub in (sim, fit, fc, est):
        _suppress_defaults(sub)
    return parser


DEFAULTS = {
    "simulate": SIMULATE_DEFAULTS,
    "fit": FIT_DEFAULTS,
    "forecast": FORECAST_DEFAULTS,
    "estimate-k": ESTIMATE_K_DEFAULTS,
}

HANDLERS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "forecast": cmd_forecast,
    "estimate-k": cmd_estimate_k,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command
    del args.command
    try:
        opts = _resolve(args, DEFAULTS[command])
        return HANDLERS[command](opts)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime/numeric failures
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
