#include "cashfactor/factors.hpp"

#include <algorithm>

#include "cashfactor/csv.hpp"
#include "cashfactor/error.hpp"
#include "cashfactor/prices.hpp"

namespace cashfactor {

namespace {

std::map<Date, double> compound_column(const std::vector<DatedReturn>& daily, const TradingCalendar& calendar,
                                       Diagnostics* diag, std::map<int, std::size_t>* days_per_month = nullptr) {
    std::map<Date, double> out;
    for (const auto& m : compound_monthly_returns(daily, calendar, diag)) {
        if (days_per_month && (*days_per_month)[m.month_end.month_ordinal()] != m.observations) continue;
        out.emplace(m.month_end, m.value);
    }
    return out;
}

}  // namespace

std::vector<FactorMonth> monthly_factors(std::span<const FactorDay> days, const TradingCalendar& calendar,
                                         Diagnostics* diag) {
    std::vector<DatedReturn> mkt, smb, hml, umd, rf;
    std::map<int, std::size_t> days_per_month;
    for (const auto& d : days) {
        mkt.push_back({d.date, d.mktrf});
        smb.push_back({d.date, d.smb});
        hml.push_back({d.date, d.hml});
        rf.push_back({d.date, d.rf});
        if (d.umd) umd.push_back({d.date, *d.umd});
        if (auto me = calendar.month_end_on_or_after(d.date)) ++days_per_month[me->month_ordinal()];
    }
    const auto mkt_m = compound_column(mkt, calendar, diag);
    const auto smb_m = compound_column(smb, calendar, diag);
    const auto hml_m = compound_column(hml, calendar, diag);
    const auto rf_m = compound_column(rf, calendar, diag);
    const auto umd_m = compound_column(umd, calendar, diag, &days_per_month);

    std::vector<FactorMonth> out;
    for (const auto& [month_end, value] : mkt_m) {
        if (!smb_m.contains(month_end) || !hml_m.contains(month_end) || !rf_m.contains(month_end)) continue;
        FactorMonth fm;
        fm.month_end = month_end;
        fm.mktrf = value;
        fm.smb = smb_m.at(month_end);
        fm.hml = hml_m.at(month_end);
        fm.rf = rf_m.at(month_end);
        if (auto it = umd_m.find(month_end); it != umd_m.end()) fm.umd = it->second;
        out.push_back(fm);
    }
    return out;
}

std::map<Date, double> risk_free_by_month(std::span<const FactorMonth> months) {
    std::map<Date, double> out;
    for (const auto& m : months) out.emplace(m.month_end, m.rf);
    return out;
}

std::vector<FactorDay> read_factors_csv(const std::filesystem::path& path) {
    const auto table = CsvTable::read(path, {"date", "mktrf", "smb", "hml", "umd", "rf"});
    std::vector<FactorDay> out;
    out.reserve(table.rows().size());
    for (const auto& row : table.rows()) {
        FactorDay d;
        d.date = row.required_date("date");
        d.mktrf = row.required_number("mktrf");
        d.smb = row.required_number("smb");
        d.hml = row.required_number("hml");
        d.umd = row.number("umd");
        d.rf = row.required_number("rf");
        out.push_back(d);
    }
    std::stable_sort(out.begin(), out.end(), [](const FactorDay& a, const FactorDay& b) { return a.date < b.date; });
    for (std::size_t i = 1; i < out.size(); ++i) {
        if (out[i].date == out[i - 1].date) {
            throw DataError(path.string() + ": duplicate factor date " + out[i].date.iso());
        }
    }
    return out;
}

std::vector<NamedSeries> read_benchmarks_csv(const std::filesystem::path& path, const TradingCalendar& calendar,
                                             Diagnostics* diag) {
    const auto table = CsvTable::read(path, {"date"});
    std::vector<NamedSeries> out;
    for (const auto& column : table.header()) {
        if (column == "date") continue;
        std::vector<DatedReturn> daily;
        for (const auto& row : table.rows()) {
            if (auto v = row.number(column)) daily.push_back({row.required_date("date"), *v});
        }
        std::sort(daily.begin(), daily.end(), [](const DatedReturn& a, const DatedReturn& b) { return a.date < b.date; });
        out.push_back(NamedSeries{column, compound_column(daily, calendar, diag)});
    }
    if (out.empty()) throw SchemaError(path.string(), 1, "date", "benchmark file has no series columns");
    return out;
}

}  // namespace cashfactor
