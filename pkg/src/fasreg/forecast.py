"""Rolling-window one-step-ahead forecasting over lagged covariate panels.

For each target period t the regression is fitted on the pairs
(y_i, x_{i-1}) for i = t-window, ..., t-1 and the prediction applies the
fit to x_{t-1}.  Covariates are centered within the window; the window
mean of y acts as an implicit intercept and is added back to every
prediction.  Performance is summarized by the out-of-sample R^2 against
the rolling-mean baseline.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .baselines import default_lambda_grid, lasso_cv, pcr_fit, pcr_predict
from .factors import (
    center_columns,
    estimate_num_factors,
    no_factor_decomposition,
    pca_decompose,
)
from .gibbs import PriorConfig, run_chain
from .linalg import check_matrix

FORECAST_METHODS = ("fa_bayes", "generic_bayes", "fa_lasso", "generic_lasso", "pcr")

__all__ = [
    "FORECAST_METHODS",
    "PanelData",
    "RollingConfig",
    "ForecastResult",
    "ingest_csv",
    "rolling_forecast",
    "out_of_sample_r2",
    "write_forecast_csv",
    "forecast_summary",
]


@dataclass(frozen=True)
class PanelData:
    """Covariate panel with one or more aligned response series.

    Attributes
    ----------
    X_raw : numpy.ndarray
        T x p covariate rows in time order.
    y : numpy.ndarray
        T x r response columns, one per series.
    series_names : tuple
        The r response labels.
    covariate_names : tuple
        The p covariate labels.
    dates : tuple or None
        Optional row labels, length T.
    """

    X_raw: np.ndarray
    y: np.ndarray
    series_names: tuple
    covariate_names: tuple
    dates: tuple | None = None

    def __post_init__(self):
        X = check_matrix(self.X_raw, "covariate panel")
        if self.y.ndim != 2 or self.y.shape[0] != X.shape[0]:
            raise ValueError("responses must be T x r, aligned with the panel")
        if not np.all(np.isfinite(self.y)):
            raise ValueError("responses contain missing values")
        if len(self.series_names) != self.y.shape[1]:
            raise ValueError("series_names must label every response column")
        if len(self.covariate_names) != X.shape[1]:
            raise ValueError("covariate_names must label every covariate column")
        if self.dates is not None and len(self.dates) != X.shape[0]:
            raise ValueError("dates must label every row")

    @property
    def T(self):
        return self.X_raw.shape[0]

    def response(self, series=0):
        """One response column, by position or by name."""
        if isinstance(series, str):
            if series not in self.series_names:
                raise KeyError(f"unknown response series {series!r}")
            series = self.series_names.index(series)
        return self.y[:, series]


def _parse_cell(text):
    try:
        value = float(text)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def ingest_csv(path, response_columns, date_column=None, impute=None):
    """Load a forecasting panel from a headered CSV file.

    Parameters
    ----------
    path : str
    response_columns : sequence of str
        Header names treated as response series.  Every other column
        (except date_column) becomes a covariate.
    date_column : str, optional
        Column kept as row labels instead of data.
    impute : {None, "column-mean"}
        With "column-mean", a missing or unparseable covariate cell is
        replaced by the mean of that column's valid entries.  Otherwise
        any such cell rejects the file, naming the row.  Missing response
        cells always reject: the forecast target cannot be made up.

    Returns
    -------
    PanelData
    """
    if impute not in (None, "column-mean"):
        raise ValueError(f"unknown imputation policy {impute!r}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected a header row") from None
        header = [name.strip() for name in header]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ValueError(
                    f"{path}: line {lineno} has {len(row)} fields, "
                    f"header has {len(header)}"
                )
            rows.append(row)
    if len(set(header)) != len(header):
        raise ValueError(f"{path}: duplicate column names in header")
    responses = list(response_columns)
    if not responses:
        raise ValueError("need at least one response column")
    for name in responses:
        if name not in header:
            raise ValueError(f"response column {name!r} not in header {header}")
    if date_column is not None and date_column not in header:
        raise ValueError(f"date column {date_column!r} not in header {header}")
    covariates = [
        name for name in header if name not in responses and name != date_column
    ]
    if not covariates:
        raise ValueError("no covariate columns left after responses and dates")

    col = {name: header.index(name) for name in header}
    dates = tuple(r[col[date_column]] for r in rows) if date_column else None
    y = np.empty((len(rows), len(responses)))
    for j, name in enumerate(responses):
        for i, r in enumerate(rows):
            value = _parse_cell(r[col[name]])
            if value is None:
                raise ValueError(
                    f"{path}: row {i + 1} has a missing value in response "
                    f"column {name!r}"
                )
            y[i, j] = value
    X = np.empty((len(rows), len(covariates)))
    missing = []
    for j, name in enumerate(covariates):
        for i, r in enumerate(rows):
            value = _parse_cell(r[col[name]])
            if value is None:
                missing.append((i, j, name))
                X[i, j] = np.nan
            else:
                X[i, j] = value
    if missing:
        if impute is None:
            i, _, name = missing[0]
            raise ValueError(
                f"{path}: row {i + 1} has a missing value in covariate "
                f"column {name!r}; rerun with column-mean imputation or fix "
                "the data"
            )
        for _, j, name in missing:
            valid = X[:, j][np.isfinite(X[:, j])]
            if valid.size == 0:
                raise ValueError(f"{path}: column {name!r} has no valid entries")
            X[:, j][~np.isfinite(X[:, j])] = valid.mean()
    return PanelData(
        X_raw=X,
        y=y,
        series_names=tuple(responses),
        covariate_names=tuple(covariates),
        dates=dates,
    )


@dataclass(frozen=True)
class RollingConfig:
    """Rolling regression settings.

    Attributes
    ----------
    method : str
        One of FORECAST_METHODS.
    window : int
        Fit sample size n per target period.
    k_policy : tuple
        ("fixed", k) reuses k factors every window; ("estimate", k_max)
        re-estimates the factor count by the eigenvalue-ratio rule each
        window.  Ignored by the generic and pcr methods.
    s0 : float
        Prior expected model size for the Bayesian methods.
    pcr_components : int
        Principal components used by the pcr method.
    iters, burn_in : int
        Gibbs protocol for the Bayesian methods.
    cv_folds, grid_size : int
        Cross-validation protocol for the lasso methods.
    """

    method: str
    window: int = 100
    k_policy: tuple = ("estimate", 10)
    s0: float = 10.0
    pcr_components: int = 8
    iters: int = 20
    burn_in: int = 10
    cv_folds: int = 10
    grid_size: int = 50

    def __post_init__(self):
        if self.method not in FORECAST_METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.window < 2:
            raise ValueError("window must be at least 2")
        mode, value = self.k_policy
        if mode not in ("fixed", "estimate"):
            raise ValueError(f"unknown k policy {mode!r}")
        if self.method.startswith("fa_") and int(value) < 1:
            raise ValueError("factor-adjusted methods need k (or k_max) >= 1")
        if not (self.s0 > 0):
            raise ValueError("s0 must be positive")
        if self.pcr_components < 1:
            raise ValueError("pcr_components must be at least 1")
        if not (0 <= self.burn_in < self.iters):
            raise ValueError("need 0 <= burn_in < iters")
        if self.cv_folds < 2:
            raise ValueError("need at least 2 folds")
        if self.grid_size < 1:
            raise ValueError("grid_size must be positive")


@dataclass(frozen=True)
class ForecastResult:
    """Aligned one-step-ahead forecasts for t = window+2 .. T.

    predictions, actuals and rolling_means all have length
    T - window - 1; r2 is the out-of-sample R^2 against the rolling-mean
    baseline, and avg_model_size averages the per-window model size
    (retained-sample mean |model| for Bayesian fits, |selected| for the
    lasso fits, the component count for pcr).
    """

    method: str
    window: int
    predictions: np.ndarray
    actuals: np.ndarray
    rolling_means: np.ndarray
    r2: float
    avg_model_size: float

    def __post_init__(self):
        m = self.predictions.size
        if self.actuals.size != m or self.rolling_means.size != m:
            raise ValueError("predictions, actuals and rolling_means must align")


def _r2(predictions, actuals, rolling_means):
    sse_pred = float(np.sum((predictions - actuals) ** 2))
    sse_base = float(np.sum((rolling_means - actuals) ** 2))
    if sse_base <= 0.0:
        raise ValueError(
            "rolling-mean baseline has zero error; out-of-sample R^2 is "
            "undefined for a degenerate series"
        )
    return 1.0 - sse_pred / sse_base


def out_of_sample_r2(result):
    """R^2 = 1 - SSE(predictions) / SSE(rolling-mean baseline)."""
    return _r2(result.predictions, result.actuals, result.rolling_means)


def _project_new(dec, x_centered):
    """Factor score and idiosyncratic part of one new centered row."""
    if dec.k == 0:
        return np.zeros(0), x_centered
    B = dec.loadings
    f_new = np.linalg.solve(B.T @ B, B.T @ x_centered)
    return f_new, x_centered - B @ f_new


def rolling_forecast(panel, cfg, rng=None, series=0):
    """Run the rolling one-step-ahead forecast over a panel.

    For each target period t = window+2, ..., T (1-based), the model is
    fitted on (y_i, x_{i-1}) for i = t-window, ..., t-1 with covariates
    centered within the window, and predicts y_t from x_{t-1}.  The
    rolling-mean baseline for t averages the same window of responses.

    Parameters
    ----------
    panel : PanelData
    cfg : RollingConfig
    rng : RngStream
        Master stream; target period t uses its own substream, so windows
        are independent and may be computed in any order.  Unused by pcr.
    series : int or str
        Which response series to forecast.

    Returns
    -------
    ForecastResult
    """
    y = panel.response(series)
    X = panel.X_raw
    T = y.size
    w = int(cfg.window)
    if w + 2 > T:
        raise ValueError(f"window {w} needs at least {w + 2} rows, panel has {T}")
    if cfg.method != "pcr" and rng is None:
        raise ValueError("rolling_forecast needs an RngStream for this method")
    slots = T - w - 1
    predictions = np.empty(slots)
    rolling_means = np.empty(slots)
    sizes = np.empty(slots)
    actuals = y[w + 1 :].copy()

    for j in range(slots):
        x_train = X[j : j + w]
        y_train = y[j + 1 : j + w + 1]
        x_new = X[j + w]
        y_bar = float(y_train.mean())
        rolling_means[j] = y_bar
        if cfg.method == "pcr":
            fit = pcr_fit(x_train, y_train, cfg.pcr_components)
            predictions[j] = pcr_predict(fit, x_new)
            sizes[j] = float(cfg.pcr_components)
            continue
        sub = rng.substream(j)
        data = center_columns(x_train)
        if cfg.method.startswith("fa_"):
            mode, value = cfg.k_policy
            k = int(value) if mode == "fixed" else estimate_num_factors(data, value)
            dec = pca_decompose(data, k)
        else:
            dec = no_factor_decomposition(data)
        y_c = y_train - y_bar
        f_new, u_new = _project_new(dec, x_new - data.column_means)
        if cfg.method.endswith("bayes"):
            chain = run_chain(
                dec,
                y_c,
                prior=PriorConfig(s0=cfg.s0),
                iters=cfg.iters,
                burn_in=cfg.burn_in,
                rng=sub,
            )
            predictions[j] = (
                y_bar
                + f_new @ chain.posterior_mean_alpha
                + u_new @ chain.posterior_mean_beta
            )
            sizes[j] = float(
                np.mean([state.support.size for state in chain.samples])
            )
        else:
            grid = default_lambda_grid(dec, y_c, size=cfg.grid_size)
            fit = lasso_cv(dec, y_c, lambda_grid=grid, folds=cfg.cv_folds, rng=sub)
            predictions[j] = y_bar + f_new @ fit.alpha_hat + u_new @ fit.beta_hat
            sizes[j] = float(fit.selected.size)

    return ForecastResult(
        method=cfg.method,
        window=w,
        predictions=predictions,
        actuals=actuals,
        rolling_means=rolling_means,
        r2=_r2(predictions, actuals, rolling_means),
        avg_model_size=float(sizes.mean()),
    )


def write_forecast_csv(path, result):
    """Write (t, actual, prediction, rolling_mean) rows, t = window+2 .. T."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("t", "actual", "prediction", "rolling_mean"))
        start = result.window + 2
        for j in range(result.predictions.size):
            writer.writerow(
                (
                    start + j,
                    result.actuals[j],
                    result.predictions[j],
                    result.rolling_means[j],
                )
            )


def forecast_summary(result):
    """JSON-ready summary of one rolling forecast."""
    return {
        "method": result.method,
        "window": result.window,
        "r2": result.r2,
        "avg_model_size": result.avg_model_size,
    }
