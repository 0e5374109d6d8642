#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cashfactor/calendar.hpp"
#include "cashfactor/cash_signal.hpp"
#include "cashfactor/date.hpp"
#include "cashfactor/diagnostics.hpp"
#include "cashfactor/prices.hpp"

namespace cashfactor {

struct Holding {
    std::string security_id;
    double weight = 0.0;
};

struct PortfolioSnapshot {
    Date month_end;
    std::vector<Holding> holdings;  // sorted by security_id
    int lookback = 0;
};

/// Winsorized signals indexed by security and calendar month.
class SignalIndex {
public:
    explicit SignalIndex(std::span<const SignalRow> rows, bool allow_negative_base = false);

    /// Signal of `security_id` in the month with `month_ordinal`, if present
    /// and eligible for selection.
    std::optional<double> at(const std::string& security_id, int month_ordinal) const;
    const std::map<std::string, std::map<int, double>>& by_security() const noexcept { return by_security_; }

private:
    std::map<std::string, std::map<int, double>> by_security_;
};

/// Mean winsorized signal over the L calendar months ending at `t`, for every
/// security with at least ceil(min_coverage * L) of those months present.
std::map<std::string, double> lookback_average(const SignalIndex& signals, int lookback, Date t,
                                               double min_coverage = 1.0);

/// Keeps securities with a strictly positive average signal and weights them
/// in proportion to it. Empty when nothing is positive.
std::vector<Holding> select_and_weight(const std::map<std::string, double>& average_signals);

struct PortfolioReturn {
    double value = 0.0;
    /// Held securities without a next-month return; their weight earns 0.
    std::vector<std::string> missing;
};

PortfolioReturn portfolio_return(std::span<const Holding> holdings,
                                 const std::map<std::string, double>& next_month_returns);

/// exp(sum log(1 + r)) - 1 at every step. Throws DataError if any r <= -1.
std::vector<double> cumulative_returns(std::span<const double> monthly);

enum class EmptyMonthPolicy { Zero, RiskFree };

struct BacktestConfig {
    int lookback = 6;
    /// Inclusive range of realization month ends.
    Date start;
    Date end;
    EmptyMonthPolicy empty_month = EmptyMonthPolicy::Zero;
    double min_lookback_coverage = 1.0;
};

struct BacktestMonth {
    Date formation;    // month end t, when weights are set
    Date realization;  // month end t+1, when the return is earned
    double portfolio_return = 0.0;
    double cumulative_return = 0.0;
    std::size_t n_holdings = 0;
    std::size_t missing_returns = 0;
};

struct BacktestResult {
    std::vector<BacktestMonth> months;
    std::vector<PortfolioSnapshot> snapshots;
    BacktestConfig config;
    std::size_t missing_return_events = 0;

    std::vector<double> returns() const;
};

/// Monthly security returns keyed by security and month end.
using ReturnPanel = std::map<std::string, std::map<Date, double>>;
ReturnPanel return_panel(std::span<const MonthlyEquityRow> equity);

/// For every calendar month end t+1 in [start, end] whose previous calendar
/// month t is on the calendar: form the snapshot from signals up to t and earn
/// the next-month returns. Throws DataError when the period falls outside the
/// calendar or contains no realizable month.
BacktestResult run_backtest(const SignalIndex& signals, const ReturnPanel& returns,
                            const std::map<Date, double>& risk_free, const TradingCalendar& calendar,
                            const BacktestConfig& config, Diagnostics* diag = nullptr);

}  // namespace cashfactor
