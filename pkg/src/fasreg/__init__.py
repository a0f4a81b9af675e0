"""Factor-adjusted sparse regression.

Estimates a latent factor structure in a high-dimensional covariate panel,
then regresses a response on the estimated factors and the de-correlated
idiosyncratic covariates with a spike-and-slab prior (Gibbs sampling),
alongside lasso and principal-component-regression baselines, simulation
benchmarks, and rolling out-of-sample forecasting.
"""

__version__ = "0.1.0"

from .baselines import (
    ConvergenceError,
    LassoFit,
    PcrFit,
    default_lambda_grid,
    lasso_cv,
    lasso_fit,
    pcr_fit,
    pcr_predict,
)
from .bench import (
    EvalReport,
    SimConfig,
    aggregate_reports,
    basic_config,
    evaluate_chain,
    evaluate_point_fit,
    generate_dataset,
    run_benchmark,
    run_replicate,
)
from .factors import (
    DataMatrix,
    FactorDecomposition,
    RecoveryDiagnostics,
    center_columns,
    estimate_num_factors,
    no_factor_decomposition,
    pca_decompose,
    recovery_diagnostics,
)
from .forecast import (
    ForecastResult,
    PanelData,
    RollingConfig,
    ingest_csv,
    out_of_sample_r2,
    rolling_forecast,
)
from .gibbs import (
    ChainResult,
    GibbsState,
    PriorConfig,
    rescale_design,
    run_chain,
    threshold_select,
)
from .linalg import (
    RngStream,
    SymEigResult,
    sample_gaussian_vec,
    sample_inverse_gamma,
    solve_spd,
    sym_eig,
)

__all__ = [
    "__version__",
    "ChainResult",
    "ConvergenceError",
    "DataMatrix",
    "EvalReport",
    "FactorDecomposition",
    "ForecastResult",
    "GibbsState",
    "LassoFit",
    "PanelData",
    "PcrFit",
    "PriorConfig",
    "RecoveryDiagnostics",
    "RngStream",
    "RollingConfig",
    "SimConfig",
    "SymEigResult",
    "aggregate_reports",
    "basic_config",
    "center_columns",
    "default_lambda_grid",
    "estimate_num_factors",
    "evaluate_chain",
    "evaluate_point_fit",
    "generate_dataset",
    "ingest_csv",
    "lasso_cv",
    "lasso_fit",
    "no_factor_decomposition",
    "out_of_sample_r2",
    "pca_decompose",
    "pcr_fit",
    "pcr_predict",
    "recovery_diagnostics",
    "rescale_design",
    "rolling_forecast",
    "run_benchmark",
    "run_chain",
    "run_replicate",
    "sample_gaussian_vec",
    "sample_inverse_gamma",
    "solve_spd",
    "sym_eig",
    "threshold_select",
]
