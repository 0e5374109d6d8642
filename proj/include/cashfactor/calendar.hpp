#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "cashfactor/date.hpp"

namespace cashfactor {

/// Ordered trading days plus the last trading day of every calendar month
/// that has at least one trading day. Months without trading days are simply
/// absent from month_ends(); lookups that need "the previous month" use
/// previous_month_end(), which refuses to bridge such a gap.
class TradingCalendar {
public:
    const std::vector<Date>& days() const noexcept { return days_; }
    const std::vector<Date>& month_ends() const noexcept { return month_ends_; }

    bool is_trading_day(Date d) const;
    bool is_month_end(Date d) const;

    /// First trading day strictly after `d`.
    std::optional<Date> next_trading_day_after(Date d) const;
    /// First month end on or after `d`.
    std::optional<Date> month_end_on_or_after(Date d) const;
    /// Month end of the calendar month immediately before `month_end`'s month,
    /// if that month has trading days.
    std::optional<Date> previous_month_end(Date month_end) const;
    std::optional<Date> next_month_end(Date month_end) const;
    /// Month end of the calendar month with the given ordinal, if present.
    std::optional<Date> month_end_for_ordinal(int month_ordinal) const;

    /// Index of `month_end` in month_ends(), if it is one.
    std::optional<std::size_t> month_end_index(Date month_end) const;

private:
    friend TradingCalendar build_trading_calendar(std::span<const Date> days);
    std::vector<Date> days_;
    std::vector<Date> month_ends_;
};

/// Builds the calendar from sorted, de-duplicated trading days.
/// Throws CalendarError when the input is empty, unsorted or has duplicates.
TradingCalendar build_trading_calendar(std::span<const Date> days);

/// Reads a single-column `date` CSV of trading days. The file need not be
/// sorted; duplicates are an error.
TradingCalendar read_calendar_csv(const std::filesystem::path& path);

}  // namespace cashfactor
