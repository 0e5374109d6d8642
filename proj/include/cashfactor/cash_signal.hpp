#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cashfactor/calendar.hpp"
#include "cashfactor/date.hpp"
#include "cashfactor/diagnostics.hpp"
#include "cashfactor/fundamentals.hpp"
#include "cashfactor/ols.hpp"

namespace cashfactor {

struct SignalConfig {
    /// 0 = expanding window; otherwise the number of trailing months pooled.
    int rolling_months = 0;
    std::size_t min_obs = 60;
    double winsor_low = 1.0;
    double winsor_high = 99.0;
    bool allow_negative_acv_base = false;
    /// Refit every n-th calendar month end; intermediate months reuse the last fit.
    int refit_every_months = 1;
};

/// A cash-value regression fitted on panel rows dated on or before `as_of`.
struct CashValueFit {
    Date as_of;
    RegressionFit fit;
    /// Regressors with zero variance in the estimation window; their
    /// coefficients are treated as zero.
    std::vector<std::string> dropped;
};

/// Pooled OLS of excess_return on the eleven cash regressors plus an intercept
/// over rows with month_end <= as_of (and inside the rolling window when one
/// is configured). Throws NoFitError when fewer than config.min_obs rows
/// qualify; SingularFitError propagates from the solver.
CashValueFit fit_cash_regression(std::span<const FirmMonthRow> panel, Date as_of, const SignalConfig& config);

/// The two panel quantities that multiply the lagged-cash and leverage
/// coefficients in the marginal value of cash.
struct MarginalCashInputs {
    double lagged_cash_ratio = 0.0;
    double leverage = 0.0;
};
MarginalCashInputs marginal_cash_inputs(const FirmMonthRow& row);

/// alpha + gamma_lag_cash * lagged_cash_ratio + gamma_leverage * leverage.
/// Coefficients absent from the fit count as zero; the intercept is required.
double marginal_cash_value(const RegressionFit& fit, const MarginalCashInputs& inputs);
double marginal_cash_value(const RegressionFit& fit, const FirmMonthRow& row);

inline double average_cash_value(double marginal, double cash_holdings) { return marginal * cash_holdings; }

struct AcvPoint {
    Date month_end;
    double value = 0.0;
};

struct CashReturn {
    Date month_end;
    double value = 0.0;
    bool negative_base = false;
};

/// Smallest |ACV_{t-1}| accepted as a percentage-change base, given the
/// firm's ACV history known at t: max(1e-12, 1e-9 * median |ACV|).
double acv_epsilon(std::span<const double> history);

/// Month-over-month percentage change of one firm's average cash value.
/// Requires the two months to be consecutive calendar months and
/// |ACV_{t-1}| >= acv_epsilon(history through t); other months are absent.
/// A negative base is computed with its sign and flagged.
std::vector<CashReturn> cash_return(std::span<const AcvPoint> series);

/// Percentile with linear interpolation between order statistics:
/// h = (n - 1) p / 100, value = x[floor h] + frac(h) (x[floor h + 1] - x[floor h]).
double percentile(std::span<const double> values, double p);

struct WinsorBounds {
    double low = 0.0;
    double high = 0.0;
};

WinsorBounds winsor_bounds(std::span<const double> values, double p_low, double p_high);

/// Clamps values to the [p_low, p_high] percentile bounds. Throws DataError on
/// empty input or percentiles outside 0 <= p_low < p_high <= 100.
std::vector<double> winsorize(std::span<const double> values, double p_low, double p_high);

enum SignalFlag : std::uint32_t {
    kFlagNone = 0,
    kFlagNegativeBase = 1u << 0,
};

struct SignalRow {
    std::string firm_id;
    std::string security_id;
    Date month_end;
    double marginal_cash_value = 0.0;
    double avg_cash_value = 0.0;
    double b_raw = 0.0;
    double b_winsorized = 0.0;
    std::uint32_t flags = kFlagNone;
    Date fit_as_of;

    bool eligible(bool allow_negative_base) const { return allow_negative_base || !(flags & kFlagNegativeBase); }
};

struct FitSummary {
    Date as_of;
    std::size_t n_obs = 0;
    double r_squared = 0.0;
    std::vector<std::string> dropped;
};

struct SignalSeries {
    /// Sorted by (month_end, firm_id, security_id).
    std::vector<SignalRow> rows;
    std::vector<FitSummary> fits;
};

/// Walks the calendar month by month: refits on schedule (keeping the latest
/// successful fit), values cash for every panel row of the month, turns the
/// per-(firm, security) ACV series into cash returns and winsorizes each
/// month's cross-section. Output at month t depends only on panel rows dated
/// on or before t.
SignalSeries compute_signal_series(std::span<const FirmMonthRow> panel, const TradingCalendar& calendar,
                                   const SignalConfig& config, Diagnostics* diag = nullptr);

}  // namespace cashfactor
