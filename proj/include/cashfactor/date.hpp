#pragma once

#include <chrono>
#include <compare>
#include <functional>
#include <string>
#include <string_view>

namespace cashfactor {

/// Calendar date with day resolution. Thin value wrapper over sys_days.
class Date {
public:
    constexpr Date() = default;
    constexpr explicit Date(std::chrono::sys_days day) : day_(day) {}
    Date(int year, unsigned month, unsigned day);

    /// Parses strict ISO-8601 `YYYY-MM-DD`. Throws std::invalid_argument.
    static Date parse(std::string_view text);

    std::string iso() const;

    int year() const;
    unsigned month() const;
    unsigned day() const;

    /// Months since year 0; consecutive calendar months differ by exactly 1.
    int month_ordinal() const;

    /// Monday = 1 ... Sunday = 7.
    unsigned iso_weekday() const;

    constexpr std::chrono::sys_days sys_days() const { return day_; }
    Date plus_days(int n) const { return Date{day_ + std::chrono::days{n}}; }

    friend constexpr auto operator<=>(const Date&, const Date&) = default;

private:
    std::chrono::sys_days day_{};
};

}  // namespace cashfactor

template <>
struct std::hash<cashfactor::Date> {
    std::size_t operator()(const cashfactor::Date& d) const noexcept {
        return std::hash<long long>{}(d.sys_days().time_since_epoch().count());
    }
};
