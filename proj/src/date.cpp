#include "cashfactor/date.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

namespace cashfactor {

namespace {

int parse_field(std::string_view text, std::size_t pos, std::size_t len) {
    int value = 0;
    const char* first = text.data() + pos;
    const char* last = first + len;
    for (const char* p = first; p != last; ++p) {
        if (*p < '0' || *p > '9') {
            throw std::invalid_argument("invalid date '" + std::string(text) + "'");
        }
    }
    std::from_chars(first, last, value);
    return value;
}

}  // namespace

Date::Date(int year, unsigned month, unsigned day) {
    const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                          std::chrono::day{day}};
    if (!ymd.ok()) {
        throw std::invalid_argument("invalid calendar date " + std::to_string(year) + "-" +
                                    std::to_string(month) + "-" + std::to_string(day));
    }
    day_ = std::chrono::sys_days{ymd};
}

Date Date::parse(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw std::invalid_argument("invalid date '" + std::string(text) + "', expected YYYY-MM-DD");
    }
    return Date{parse_field(text, 0, 4), static_cast<unsigned>(parse_field(text, 5, 2)),
                static_cast<unsigned>(parse_field(text, 8, 2))};
}

std::string Date::iso() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year(), month(), day());
    return buf;
}

int Date::year() const { return static_cast<int>(std::chrono::year_month_day{day_}.year()); }

unsigned Date::month() const {
    return static_cast<unsigned>(std::chrono::year_month_day{day_}.month());
}

unsigned Date::day() const { return static_cast<unsigned>(std::chrono::year_month_day{day_}.day()); }

int Date::month_ordinal() const {
    const std::chrono::year_month_day ymd{day_};
    return static_cast<int>(ymd.year()) * 12 + static_cast<int>(static_cast<unsigned>(ymd.month())) - 1;
}

unsigned Date::iso_weekday() const { return std::chrono::weekday{day_}.iso_encoding(); }

}  // namespace cashfactor
