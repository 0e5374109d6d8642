#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cashfactor/calendar.hpp"
#include "cashfactor/date.hpp"
#include "cashfactor/diagnostics.hpp"

namespace cashfactor {

/// One row of the daily security file (CRSP daily stock layout).
struct DailyPriceBar {
    std::string security_id;
    Date date;
    std::optional<double> raw_price;
    std::optional<double> cfacpr;
    std::optional<double> cfacshr;
    std::optional<double> shares_outstanding;
    std::optional<double> daily_return;
};

/// A daily bar after corporate-action adjustment.
struct AdjustedBar {
    std::string security_id;
    Date date;
    double adj_price = 0.0;
    double adj_shares = 0.0;
    double market_cap = 0.0;
};

struct DatedReturn {
    Date date;
    double value = 0.0;
};

enum class ReturnSource { None, Compounded, PriceChange };

/// One security at one month end.
struct MonthlyEquityRow {
    std::string security_id;
    Date month_end;
    double adj_price = 0.0;
    double market_cap = 0.0;
    std::optional<double> monthly_return;
    ReturnSource return_source = ReturnSource::None;
};

/// Keeps the last occurrence of every (security_id, date) pair and returns
/// bars sorted by (security_id, date). Each dropped duplicate is recorded.
std::vector<DailyPriceBar> deduplicate_bars(std::span<const DailyPriceBar> bars,
                                            Diagnostics* diag = nullptr);

/// adj_price = raw_price / cfacpr, adj_shares = shares * cfacshr,
/// market_cap = adj_price * adj_shares. Bars with a missing or nonpositive
/// price, missing or nonpositive factors, or a missing or negative share count
/// are rejected and recorded.
/// Input order is preserved.
std::vector<AdjustedBar> adjust_prices(std::span<const DailyPriceBar> bars,
                                       Diagnostics* diag = nullptr);

struct CompoundedMonth {
    Date month_end;
    double value = 0.0;
    std::size_t observations = 0;
};

/// Compounds one security's daily returns into calendar months using the
/// window (previous month end, month end]. Returns at or below -1 are rejected
/// and recorded. Months without observations are absent from the result.
std::vector<CompoundedMonth> compound_monthly_returns(std::span<const DatedReturn> daily_returns,
                                                      const TradingCalendar& calendar,
                                                      Diagnostics* diag = nullptr);

/// Samples adjusted prices at month ends for one or more securities. A row is
/// produced only when a price exists on the exact month-end day. The monthly
/// return comes from `compounded` (keyed by security) when an entry exists for
/// that month, otherwise from the change in adj_price since the previous
/// calendar month's row.
std::vector<MonthlyEquityRow> sample_month_end(
    std::span<const AdjustedBar> adjusted, const TradingCalendar& calendar,
    const std::map<std::string, std::vector<CompoundedMonth>>& compounded = {});

/// Full daily-to-monthly path: de-duplicate, adjust, compound the daily returns
/// of months where every bar carries a valid return, then sample month ends.
/// Output is sorted by (security_id, month_end).
std::vector<MonthlyEquityRow> build_monthly_equity(std::span<const DailyPriceBar> bars,
                                                   const TradingCalendar& calendar,
                                                   Diagnostics* diag = nullptr);

/// Reads `permno,date,prc,ret,shrout,cfacpr,cfacshr`. Negative prices are
/// replaced by their absolute value and counted under "negative_price".
std::vector<DailyPriceBar> read_prices_csv(const std::filesystem::path& path,
                                           Diagnostics* diag = nullptr);

}  // namespace cashfactor
