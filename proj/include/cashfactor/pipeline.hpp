#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cashfactor/backtester.hpp"
#include "cashfactor/calendar.hpp"
#include "cashfactor/cash_signal.hpp"
#include "cashfactor/config.hpp"
#include "cashfactor/diagnostics.hpp"
#include "cashfactor/factors.hpp"
#include "cashfactor/fundamentals.hpp"
#include "cashfactor/lookback_opt.hpp"
#include "cashfactor/performance.hpp"
#include "cashfactor/prices.hpp"

namespace cashfactor {

/// Everything the ingest stage produces from the raw input files.
struct IngestResult {
    TradingCalendar calendar;
    std::vector<MonthlyEquityRow> equity;
    std::vector<FactorMonth> factors;
    std::map<Date, double> risk_free;
    std::vector<NamedSeries> benchmarks;
    UniverseResult universe;
    std::vector<FirmMonthRow> panel;
    Diagnostics diagnostics;
    nlohmann::json report;
};

/// Reads and validates the inputs, builds the monthly equity rows, the factor
/// months and the point-in-time regression panel.
IngestResult run_ingest(const RunConfig& config);

/// Backtest over an inclusive range of realization month ends. `end` defaults
/// to the last month end on the calendar.
BacktestResult backtest_period(const IngestResult& data, const SignalSeries& signals, const RunConfig& config,
                               int lookback, Date start, std::optional<Date> end);

/// Monthly Sharpe of portfolio returns over risk-free for one backtest.
double training_sharpe(const BacktestResult& result, const std::map<Date, double>& risk_free);

/// Runs optimize_lookback with a training-period backtest as the objective.
OptimizationResult optimize_on_training(const IngestResult& data, const SignalSeries& signals,
                                        const RunConfig& config);

/// Histogram over `bins` equal-width bins spanning [min, max] of `values`; the
/// last bin is closed on the right.
struct Histogram {
    std::vector<double> edges;  // bins + 1 entries
    std::vector<std::size_t> counts;
};
Histogram histogram(std::span<const double> values, int bins);

/// Command entry points. Each recomputes the stages it depends on from the raw
/// inputs and writes its files into config.output_dir.
void cmd_ingest(const RunConfig& config);
void cmd_signal(const RunConfig& config);
void cmd_optimize(const RunConfig& config);
void cmd_backtest(const RunConfig& config);
/// Rebuilds the plot files from backtest_returns.csv and benchmarks_monthly.csv
/// in `results_dir`. Throws DataError when they are missing.
void cmd_report(const std::filesystem::path& results_dir, int hist_bins = 20);

}  // namespace cashfactor
