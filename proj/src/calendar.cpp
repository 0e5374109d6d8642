#include "cashfactor/calendar.hpp"

#include <algorithm>

#include "cashfactor/csv.hpp"
#include "cashfactor/error.hpp"

namespace cashfactor {

TradingCalendar build_trading_calendar(std::span<const Date> days) {
    if (days.empty()) {
        throw CalendarError("cannot build trading calendar from an empty date list");
    }
    for (std::size_t i = 1; i < days.size(); ++i) {
        if (!(days[i - 1] < days[i])) {
            throw CalendarError("trading days must be strictly increasing; offending pair " +
                                days[i - 1].iso() + ", " + days[i].iso());
        }
    }
    TradingCalendar cal;
    cal.days_.assign(days.begin(), days.end());
    for (std::size_t i = 0; i < days.size(); ++i) {
        const bool last_of_month =
            i + 1 == days.size() || days[i + 1].month_ordinal() != days[i].month_ordinal();
        if (last_of_month) cal.month_ends_.push_back(days[i]);
    }
    return cal;
}

bool TradingCalendar::is_trading_day(Date d) const {
    return std::binary_search(days_.begin(), days_.end(), d);
}

bool TradingCalendar::is_month_end(Date d) const {
    return std::binary_search(month_ends_.begin(), month_ends_.end(), d);
}

std::optional<Date> TradingCalendar::next_trading_day_after(Date d) const {
    auto it = std::upper_bound(days_.begin(), days_.end(), d);
    if (it == days_.end()) return std::nullopt;
    return *it;
}

std::optional<Date> TradingCalendar::month_end_on_or_after(Date d) const {
    auto it = std::lower_bound(month_ends_.begin(), month_ends_.end(), d);
    if (it == month_ends_.end()) return std::nullopt;
    return *it;
}

std::optional<std::size_t> TradingCalendar::month_end_index(Date month_end) const {
    auto it = std::lower_bound(month_ends_.begin(), month_ends_.end(), month_end);
    if (it == month_ends_.end() || *it != month_end) return std::nullopt;
    return static_cast<std::size_t>(it - month_ends_.begin());
}

std::optional<Date> TradingCalendar::previous_month_end(Date month_end) const {
    return month_end_for_ordinal(month_end.month_ordinal() - 1);
}

std::optional<Date> TradingCalendar::next_month_end(Date month_end) const {
    return month_end_for_ordinal(month_end.month_ordinal() + 1);
}

std::optional<Date> TradingCalendar::month_end_for_ordinal(int month_ordinal) const {
    auto it = std::lower_bound(month_ends_.begin(), month_ends_.end(), month_ordinal,
                               [](const Date& d, int ord) { return d.month_ordinal() < ord; });
    if (it == month_ends_.end() || it->month_ordinal() != month_ordinal) return std::nullopt;
    return *it;
}

TradingCalendar read_calendar_csv(const std::filesystem::path& path) {
    const auto table = CsvTable::read(path, {"date"});
    std::vector<Date> days;
    days.reserve(table.rows().size());
    for (const auto& row : table.rows()) days.push_back(row.required_date("date"));
    std::sort(days.begin(), days.end());
    return build_trading_calendar(days);
}

}  // namespace cashfactor
