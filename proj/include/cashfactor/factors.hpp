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

/// Daily factor-file row; all values are decimal fractions.
struct FactorDay {
    Date date;
    double mktrf = 0.0;
    double smb = 0.0;
    double hml = 0.0;
    std::optional<double> umd;
    double rf = 0.0;
};

struct FactorMonth {
    Date month_end;
    double mktrf = 0.0;
    double smb = 0.0;
    double hml = 0.0;
    std::optional<double> umd;
    double rf = 0.0;
};

/// Compounds every factor column within the calendar's month windows (the
/// same (previous month end, month end] rule used for stock returns). A month
/// gets a momentum value only when every day in it has one.
std::vector<FactorMonth> monthly_factors(std::span<const FactorDay> days, const TradingCalendar& calendar,
                                         Diagnostics* diag = nullptr);

std::map<Date, double> risk_free_by_month(std::span<const FactorMonth> months);

/// Reads `date,mktrf,smb,hml,umd,rf`; `umd` may be blank.
std::vector<FactorDay> read_factors_csv(const std::filesystem::path& path);

/// A named monthly return series keyed by month end.
struct NamedSeries {
    std::string name;
    std::map<Date, double> values;
};

/// Reads a daily benchmark file `date,<name>[,<name>...]` and compounds each
/// column to months.
std::vector<NamedSeries> read_benchmarks_csv(const std::filesystem::path& path, const TradingCalendar& calendar,
                                             Diagnostics* diag = nullptr);

}  // namespace cashfactor
