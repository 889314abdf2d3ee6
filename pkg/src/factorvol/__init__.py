"""Large-panel factor volatility modelling and VaR forecasting.

The package estimates a conditional covariance model for wide return
panels: a low-rank factor component extracted from the sample covariance
eigenstructure, per-factor GARCH dynamics fitted by quasi-likelihood, and
a sparsity-thresholded idiosyncratic block. On top of the one-step
covariance forecasts it builds portfolio VaR, benchmark comparisons,
rolling backtests, and Monte Carlo experiments.
"""
from .backtest import (
    BacktestReport,
    HitSeries,
    dq_test,
    evaluate_var_series,
    hit_series,
    lr_cc,
    lr_ind,
    lr_uc,
)
from .bench import (
    BenchModel,
    bekk_predict,
    ccc_predict,
    fit_bekk_diag_vt,
    fit_ccc,
    fit_port_garch,
    fit_univariate_garch,
    hist_vol,
    port_garch_predict,
    static_poet,
)
from .errors import DataError, FactorVolError, NumericalError, UsageError
from .fgarch import FitConfig, GarchParams, VolPath, forecast_h, h_init, qmle_fit, recurse_h
from .forecast import QuantileRule, VarForecast, VolForecast, pgarch_forecast, quantile_value, var_forecast
from .panel import (
    Portfolio,
    ReturnPanel,
    demean,
    load_groups,
    load_panel,
    portfolio_returns,
    save_panel,
    with_groups,
)
from .rolling import RollingConfig, RollingResult, n_forecasts, rolling_var_forecast
from .shrink import ThresholdSpec, apply_threshold, psd_repair, threshold_level
from .simul import (
    AVAILABLE_MODELS,
    DgpSpec,
    DgpTruth,
    MetricRow,
    MetricTable,
    banded_idio_cov,
    default_theta0,
    generate,
    run_replications,
)
from .spectral import (
    FactorDecomposition,
    eigh_desc,
    estimate_rank,
    extract_factors,
    poet_decompose,
    poet_fit,
    sample_cov,
)

__version__ = "0.1.0"

__all__ = [
    "AVAILABLE_MODELS",
    "BacktestReport",
    "BenchModel",
    "DataError",
    "DgpSpec",
    "DgpTruth",
    "FactorDecomposition",
    "FactorVolError",
    "FitConfig",
    "GarchParams",
    "HitSeries",
    "MetricRow",
    "MetricTable",
    "NumericalError",
    "Portfolio",
    "QuantileRule",
    "ReturnPanel",
    "RollingConfig",
    "RollingResult",
    "ThresholdSpec",
    "UsageError",
    "VarForecast",
    "VolForecast",
    "VolPath",
    "apply_threshold",
    "banded_idio_cov",
    "bekk_predict",
    "ccc_predict",
    "default_theta0",
    "demean",
    "dq_test",
    "eigh_desc",
    "estimate_rank",
    "evaluate_var_series",
    "extract_factors",
    "fit_bekk_diag_vt",
    "fit_ccc",
    "fit_port_garch",
    "fit_univariate_garch",
    "forecast_h",
    "generate",
    "h_init",
    "hist_vol",
    "hit_series",
    "load_groups",
    "load_panel",
    "lr_cc",
    "lr_ind",
    "lr_uc",
    "n_forecasts",
    "pgarch_forecast",
    "poet_decompose",
    "poet_fit",
    "port_garch_predict",
    "portfolio_returns",
    "psd_repair",
    "qmle_fit",
    "quantile_value",
    "recurse_h",
    "rolling_var_forecast",
    "run_replications",
    "sample_cov",
    "save_panel",
    "static_poet",
    "threshold_level",
    "var_forecast",
    "with_groups",
]
