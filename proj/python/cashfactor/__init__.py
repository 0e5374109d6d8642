"""Python access to the cash-productivity factor backtester."""

from ._cashfactor import (
    CashfactorError,
    ConfigError,
    DataError,
    NumericalError,
    cumulative_returns,
    describe_defaults,
    fit_ols,
    optimize_lookback,
    percentile,
    run,
    select_and_weight,
    sharpe_ratio,
    winsorize,
)

__all__ = [
    "CashfactorError",
    "ConfigError",
    "DataError",
    "NumericalError",
    "cumulative_returns",
    "describe_defaults",
    "fit_ols",
    "optimize_lookback",
    "percentile",
    "run",
    "select_and_weight",
    "sharpe_ratio",
    "winsorize",
]
