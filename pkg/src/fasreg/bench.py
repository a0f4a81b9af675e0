"""Synthetic benchmarks: data generation, evaluation measures, replicate harness.

The generator draws a factor panel X = F B' + U with standard normal
factors and idiosyncratic noise, uniform loadings on [-1, 1], and a sparse
linear response Y = F alpha + U beta + sigma eps supported on the first s
covariates.  Three scenarios cover correlated designs (factor_adjusted),
independent designs (no_correlation, where X = U), and the case where the
response depends on X only through X beta (sub_model, alpha = B' beta).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .baselines import default_lambda_grid, lasso_cv
from .factors import center_columns, no_factor_decomposition, pca_decompose
from .gibbs import PriorConfig, run_chain

SCENARIOS = ("factor_adjusted", "no_correlation", "sub_model")
METHODS = ("fa_bayes", "generic_bayes", "fa_lasso", "generic_lasso")

RESULT_COLUMNS = (
    "scenario",
    "method",
    "khat",
    "n",
    "p",
    "s",
    "beta_l2_error",
    "model_selection_rate",
    "sure_screening_rate",
    "avg_model_size",
    "sigma2_rel_error",
)

__all__ = [
    "SCENARIOS",
    "METHODS",
    "RESULT_COLUMNS",
    "SimConfig",
    "SimTruth",
    "SyntheticDataset",
    "EvalReport",
    "generate_dataset",
    "evaluate_chain",
    "evaluate_point_fit",
    "aggregate_reports",
    "run_replicate",
    "run_benchmark",
    "basic_config",
    "result_row",
    "write_results_csv",
    "results_summary",
]


@dataclass(frozen=True)
class SimConfig:
    """Benchmark configuration.  Defaults reproduce the basic case
    (n, p, s, k) = (200, 500, 5, 3) with alpha = (0.8, 1.0, 1.2),
    beta = 0.3 on the first five covariates and noise sd 0.5.
    """

    n: int = 200
    p: int = 500
    s: int = 5
    k: int = 3
    alpha_star: tuple = (0.8, 1.0, 1.2)
    beta_star_values: tuple = (0.3, 0.3, 0.3, 0.3, 0.3)
    sigma_star: float = 0.5
    scenario: str = "factor_adjusted"
    replicates: int = 100
    khat_used: int = 3
    method: str = "fa_bayes"
    # sampler/baseline knobs (defaults match the benchmark protocol)
    iters: int = 20
    burn_in: int = 10
    s0: float = 1.0
    cv_folds: int = 10
    grid_size: int = 50

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not (0 <= self.s <= self.p):
            raise ValueError("need 0 <= s <= p")
        if not (0 <= self.k <= self.n):
            raise ValueError("need 0 <= k <= n")
        if self.scenario == "no_correlation" and self.k != 0:
            raise ValueError("no_correlation scenario generates X = U; set k = 0")
        if self.scenario == "sub_model" and self.alpha_star is not None:
            raise ValueError("sub_model derives alpha from the loadings; pass alpha_star=None")
        if self.scenario == "factor_adjusted":
            if self.alpha_star is None or len(self.alpha_star) != self.k:
                raise ValueError("alpha_star must have length k")
        if len(self.beta_star_values) != self.s:
            raise ValueError("beta_star_values must have length s")
        if not (self.sigma_star > 0):
            raise ValueError("sigma_star must be positive")
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if self.khat_used < 0:
            raise ValueError("khat_used must be non-negative")
        if self.method.startswith("generic") and self.khat_used != 0:
            raise ValueError("generic methods run without factor adjustment; set khat_used = 0")
        if self.method.startswith("fa_") and self.khat_used == 0:
            raise ValueError("factor-adjusted methods need khat_used >= 1")
        if not (0 < self.s0 < self.p):
            raise ValueError("s0 must lie in (0, p)")
        if not (0 <= self.burn_in < self.iters):
            raise ValueError("need 0 <= burn_in < iters")


def basic_config(**overrides):
    """SimConfig for the basic benchmark case, with keyword overrides."""
    return replace(SimConfig(), **overrides) if overrides else SimConfig()


@dataclass(frozen=True)
class SimTruth:
    """Ground truth carried alongside a synthetic dataset."""

    support: np.ndarray
    beta: np.ndarray
    alpha: np.ndarray
    sigma: float

    @property
    def sigma2(self):
        return self.sigma**2


@dataclass(frozen=True)
class SyntheticDataset:
    F: np.ndarray
    U: np.ndarray
    B: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    truth: SimTruth


def generate_dataset(cfg, rng):
    """Draw one synthetic dataset.

    Parameters
    ----------
    cfg : SimConfig
    rng : RngStream

    Returns
    -------
    SyntheticDataset
        With X = F B' + U and Y = F alpha + U beta + sigma eps.  The
        loadings are redrawn on every call.
    """
    n, p, s, k = cfg.n, cfg.p, cfg.s, cfg.k
    if cfg.scenario == "no_correlation":
        F = np.zeros((n, 0))
        B = np.zeros((p, 0))
        U = rng.standard_normal((n, p))
        X = U
    else:
        F = rng.standard_normal((n, k))
        B = rng.uniform(-1.0, 1.0, (p, k))
        U = rng.standard_normal((n, p))
        X = F @ B.T + U

    beta = np.zeros(p)
    beta[:s] = cfg.beta_star_values
    if cfg.scenario == "sub_model":
        alpha = B.T @ beta
    elif cfg.scenario == "no_correlation":
        alpha = np.zeros(0)
    else:
        alpha = np.asarray(cfg.alpha_star, dtype=float)

    eps = rng.standard_normal(n)
    Y = F @ alpha + U @ beta + cfg.sigma_star * eps
    truth = SimTruth(
        support=np.arange(s), beta=beta, alpha=alpha, sigma=cfg.sigma_star
    )
    return SyntheticDataset(F=F, U=U, B=B, X=X, Y=Y, truth=truth)


@dataclass(frozen=True)
class EvalReport:
    """The five benchmark measures, per fit or averaged over replicates."""

    beta_l2_error: float
    model_selection_rate: float
    sure_screening_rate: float
    avg_model_size: float
    sigma2_rel_error: float

    def __post_init__(self):
        for name in ("model_selection_rate", "sure_screening_rate"):
            rate = getattr(self, name)
            if not (-1e-12 <= rate <= 1.0 + 1e-12):
                raise ValueError(f"{name} must lie in [0, 1], got {rate}")
        if self.sure_screening_rate < self.model_selection_rate - 1e-12:
            raise ValueError("screening rate cannot be below exact-selection rate")
        if self.avg_model_size < 0:
            raise ValueError("avg_model_size must be non-negative")

    def as_dict(self):
        return {
            "beta_l2_error": self.beta_l2_error,
            "model_selection_rate": self.model_selection_rate,
            "sure_screening_rate": self.sure_screening_rate,
            "avg_model_size": self.avg_model_size,
            "sigma2_rel_error": self.sigma2_rel_error,
        }


def evaluate_chain(chain, truth):
    """Score a posterior chain against simulation truth.

    Selection counts a retained sample when its model equals the true
    support exactly; screening counts it when the model contains the true
    support.

    Parameters
    ----------
    chain : ChainResult
    truth : SimTruth

    Returns
    -------
    EvalReport
    """
    if not chain.samples:
        raise ValueError("chain has no retained samples")
    true_set = frozenset(int(j) for j in truth.support)
    n_exact = 0
    n_super = 0
    total_size = 0
    for state in chain.samples:
        model = frozenset(int(j) for j in state.support)
        total_size += len(model)
        if model == true_set:
            n_exact += 1
        if true_set <= model:
            n_super += 1
    m = len(chain.samples)
    return EvalReport(
        beta_l2_error=float(np.linalg.norm(chain.posterior_mean_beta - truth.beta)),
        model_selection_rate=n_exact / m,
        sure_screening_rate=n_super / m,
        avg_model_size=total_size / m,
        sigma2_rel_error=abs(chain.posterior_mean_sigma2 - truth.sigma2) / truth.sigma2,
    )


def evaluate_point_fit(beta_hat, selected, sigma2_hat, truth):
    """Score a single point estimate (lasso-style fit) against truth."""
    sel = frozenset(int(j) for j in selected)
    true_set = frozenset(int(j) for j in truth.support)
    return EvalReport(
        beta_l2_error=float(np.linalg.norm(np.asarray(beta_hat) - truth.beta)),
        model_selection_rate=1.0 if sel == true_set else 0.0,
        sure_screening_rate=1.0 if true_set <= sel else 0.0,
        avg_model_size=float(len(sel)),
        sigma2_rel_error=abs(sigma2_hat - truth.sigma2) / truth.sigma2,
    )


def aggregate_reports(reports):
    """Average reports field-wise.

    Uses exactly-rounded summation, so the result does not depend on the
    order the replicates arrive in.
    """
    if not reports:
        raise ValueError("nothing to aggregate")
    m = len(reports)
    return EvalReport(
        **{
            name: math.fsum(getattr(r, name) for r in reports) / m
            for name in (
                "beta_l2_error",
                "model_selection_rate",
                "sure_screening_rate",
                "avg_model_size",
                "sigma2_rel_error",
            )
        }
    )


def run_replicate(cfg, rng):
    """Generate one dataset, fit the configured method, and score it.

    The stream drives generation first and the fit second, so two methods
    run with the same seed see identical data.  Factor-adjusted methods
    decompose the covariates into khat_used estimated factors; generic
    methods treat the centered covariates as purely idiosyncratic.  For
    the penalized fits the noise variance is estimated by the residual
    mean square with k + |selected| model degrees of freedom.

    Parameters
    ----------
    cfg : SimConfig
    rng : RngStream
        Stream dedicated to this replicate.

    Returns
    -------
    EvalReport
    """
    data = generate_dataset(cfg, rng)
    if cfg.khat_used:
        dec = pca_decompose(center_columns(data.X), cfg.khat_used)
    else:
        dec = no_factor_decomposition(data.X)
    if cfg.method.endswith("bayes"):
        chain = run_chain(
            dec,
            data.Y,
            prior=PriorConfig(s0=cfg.s0),
            iters=cfg.iters,
            burn_in=cfg.burn_in,
            rng=rng,
        )
        return evaluate_chain(chain, data.truth)
    grid = default_lambda_grid(dec, data.Y, size=cfg.grid_size)
    fit = lasso_cv(dec, data.Y, lambda_grid=grid, folds=cfg.cv_folds, rng=rng)
    resid = data.Y - dec.idio @ fit.beta_hat
    if dec.k:
        resid = resid - dec.factors @ fit.alpha_hat
    dof = dec.k + fit.selected.size
    sigma2_hat = float(resid @ resid) / max(cfg.n - dof, 1)
    return evaluate_point_fit(fit.beta_hat, fit.selected, sigma2_hat, data.truth)


def run_benchmark(cfg, rng, threads=1):
    """Average the evaluation measures over seed-indexed replicates.

    Replicate i draws from ``rng.substream(i)``, so the datasets are fixed
    by the master seed alone: methods can be compared on identical data,
    replicates can run in any order (or concurrently), and the
    exactly-rounded average is order-independent.  With threads > 1 the
    replicates run on a process pool; the result is identical either way.

    Parameters
    ----------
    cfg : SimConfig
    rng : RngStream
        Master stream; only substreams of it are consumed.
    threads : int
        Worker-process cap for the replicate loop.

    Returns
    -------
    EvalReport

    Raises
    ------
    RuntimeError
        If a replicate fails, naming its index (the cause is chained).
    """
    subs = [rng.substream(i) for i in range(cfg.replicates)]
    reports = []
    if threads > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(run_replicate, cfg, sub) for sub in subs]
            for i, fut in enumerate(futures):
                try:
                    reports.append(fut.result())
                except Exception as exc:
                    raise RuntimeError(f"replicate {i} failed: {exc}") from exc
    else:
        for i, sub in enumerate(subs):
            try:
                reports.append(run_replicate(cfg, sub))
            except Exception as exc:
                raise RuntimeError(f"replicate {i} failed: {exc}") from exc
    return aggregate_reports(reports)


def result_row(cfg, report):
    """Flatten one (config, aggregate report) pair into a RESULT_COLUMNS row."""
    stats = report.as_dict()
    head = (cfg.scenario, cfg.method, cfg.khat_used, cfg.n, cfg.p, cfg.s)
    return head + tuple(stats[name] for name in RESULT_COLUMNS[6:])


def write_results_csv(path, rows):
    """Write result rows to path under the standard header."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        writer.writerows(rows)


def results_summary(rows):
    """JSON-ready summary document: one record per result row."""
    return {"results": [dict(zip(RESULT_COLUMNS, row)) for row in rows]}
