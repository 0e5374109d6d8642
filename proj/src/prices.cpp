#include "cashfactor/prices.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "cashfactor/csv.hpp"
#include "cashfactor/error.hpp"

namespace cashfactor {

namespace {

std::string bar_key(const DailyPriceBar& bar) { return bar.security_id + "@" + bar.date.iso(); }

}  // namespace

std::vector<DailyPriceBar> deduplicate_bars(std::span<const DailyPriceBar> bars, Diagnostics* diag) {
    std::vector<std::size_t> order(bars.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (bars[a].security_id != bars[b].security_id) return bars[a].security_id < bars[b].security_id;
        return bars[a].date < bars[b].date;
    });

    std::vector<DailyPriceBar> out;
    out.reserve(bars.size());
    std::size_t duplicates = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto& bar = bars[order[i]];
        if (!out.empty() && out.back().security_id == bar.security_id && out.back().date == bar.date) {
            note(diag, "duplicate_bar", bar_key(bar) + " appears more than once; keeping the last row");
            out.back() = bar;
            ++duplicates;
        } else {
            out.push_back(bar);
        }
    }
    if (duplicates > 0) {
        logger().warn("{} duplicate (security, date) price rows replaced by their last occurrence",
                      duplicates);
    }
    return out;
}

std::vector<AdjustedBar> adjust_prices(std::span<const DailyPriceBar> bars, Diagnostics* diag) {
    std::vector<AdjustedBar> out;
    out.reserve(bars.size());
    for (const auto& bar : bars) {
        if (!bar.raw_price) {
            if (diag) diag->count("missing_price");
            continue;
        }
        if (*bar.raw_price <= 0.0 || !std::isfinite(*bar.raw_price)) {
            note(diag, "nonpositive_price", bar_key(bar));
            continue;
        }
        if (!bar.cfacpr || !(*bar.cfacpr > 0.0) || !bar.cfacshr || !(*bar.cfacshr > 0.0)) {
            note(diag, "bad_adjustment_factor", bar_key(bar) + " has a missing or nonpositive cfacpr/cfacshr");
            continue;
        }
        if (!bar.shares_outstanding || *bar.shares_outstanding < 0.0) {
            note(diag, "bad_shares_outstanding", bar_key(bar));
            continue;
        }
        AdjustedBar adj;
        adj.security_id = bar.security_id;
        adj.date = bar.date;
        adj.adj_price = *bar.raw_price / *bar.cfacpr;
        adj.adj_shares = *bar.shares_outstanding * *bar.cfacshr;
        adj.market_cap = adj.adj_price * adj.adj_shares;
        out.push_back(std::move(adj));
    }
    return out;
}

std::vector<CompoundedMonth> compound_monthly_returns(std::span<const DatedReturn> daily_returns,
                                                      const TradingCalendar& calendar,
                                                      Diagnostics* diag) {
    std::vector<CompoundedMonth> out;
    for (const auto& r : daily_returns) {
        if (!(r.value > -1.0) || !std::isfinite(r.value)) {
            note(diag, "invalid_daily_return", r.date.iso() + " return " + format_number(r.value));
            continue;
        }
        const auto month_end = calendar.month_end_on_or_after(r.date);
        if (!month_end) {
            note(diag, "return_after_calendar", r.date.iso());
            continue;
        }
        auto it = std::lower_bound(out.begin(), out.end(), *month_end,
                                   [](const CompoundedMonth& m, Date d) { return m.month_end < d; });
        if (it == out.end() || it->month_end != *month_end) {
            it = out.insert(it, CompoundedMonth{*month_end, 1.0, 0});
        }
        it->value *= 1.0 + r.value;
        ++it->observations;
    }
    for (auto& m : out) m.value -= 1.0;
    return out;
}

std::vector<MonthlyEquityRow> sample_month_end(
    std::span<const AdjustedBar> adjusted, const TradingCalendar& calendar,
    const std::map<std::string, std::vector<CompoundedMonth>>& compounded) {
    std::vector<const AdjustedBar*> at_month_end;
    for (const auto& bar : adjusted) {
        if (calendar.is_month_end(bar.date)) at_month_end.push_back(&bar);
    }
    std::stable_sort(at_month_end.begin(), at_month_end.end(), [](const AdjustedBar* a, const AdjustedBar* b) {
        if (a->security_id != b->security_id) return a->security_id < b->security_id;
        return a->date < b->date;
    });

    std::vector<MonthlyEquityRow> out;
    out.reserve(at_month_end.size());
    for (const AdjustedBar* bar : at_month_end) {
        if (!out.empty() && out.back().security_id == bar->security_id && out.back().month_end == bar->date) {
            out.pop_back();  // duplicate input: last one wins
        }
        MonthlyEquityRow row;
        row.security_id = bar->security_id;
        row.month_end = bar->date;
        row.adj_price = bar->adj_price;
        row.market_cap = bar->market_cap;

        std::optional<double> from_daily;
        if (auto it = compounded.find(bar->security_id); it != compounded.end()) {
            auto m = std::lower_bound(it->second.begin(), it->second.end(), bar->date,
                                      [](const CompoundedMonth& c, Date d) { return c.month_end < d; });
            if (m != it->second.end() && m->month_end == bar->date) from_daily = m->value;
        }
        if (from_daily) {
            row.monthly_return = from_daily;
            row.return_source = ReturnSource::Compounded;
        } else if (!out.empty() && out.back().security_id == row.security_id &&
                   out.back().month_end.month_ordinal() + 1 == row.month_end.month_ordinal()) {
            row.monthly_return = row.adj_price / out.back().adj_price - 1.0;
            row.return_source = ReturnSource::PriceChange;
        }
        out.push_back(std::move(row));
    }
    return out;
}

std::vector<MonthlyEquityRow> build_monthly_equity(std::span<const DailyPriceBar> bars,
                                                   const TradingCalendar& calendar, Diagnostics* diag) {
    const auto unique = deduplicate_bars(bars, diag);
    const auto adjusted = adjust_prices(unique, diag);

    // Per security: compound daily returns, then keep only months in which
    // every bar carried a usable return. Partial months fall back to the
    // month-end price change.
    std::map<std::string, std::vector<CompoundedMonth>> compounded;
    std::size_t begin = 0;
    while (begin < unique.size()) {
        std::size_t end = begin;
        while (end < unique.size() && unique[end].security_id == unique[begin].security_id) ++end;

        std::vector<DatedReturn> returns;
        std::unordered_map<int, std::size_t> bars_per_month;
        for (std::size_t i = begin; i < end; ++i) {
            const auto& bar = unique[i];
            if (auto me = calendar.month_end_on_or_after(bar.date)) ++bars_per_month[me->month_ordinal()];
            if (bar.daily_return) returns.push_back({bar.date, *bar.daily_return});
        }
        auto months = compound_monthly_returns(returns, calendar, diag);
        std::erase_if(months, [&](const CompoundedMonth& m) {
            return m.observations != bars_per_month[m.month_end.month_ordinal()];
        });
        if (!months.empty()) compounded.emplace(unique[begin].security_id, std::move(months));
        begin = end;
    }
    return sample_month_end(adjusted, calendar, compounded);
}

std::vector<DailyPriceBar> read_prices_csv(const std::filesystem::path& path, Diagnostics* diag) {
    const auto table = CsvTable::read(path, {"permno", "date", "prc", "ret", "shrout", "cfacpr", "cfacshr"});
    std::vector<DailyPriceBar> bars;
    bars.reserve(table.rows().size());
    std::size_t negative = 0;
    for (const auto& row : table.rows()) {
        DailyPriceBar bar;
        bar.security_id = std::string(row.text("permno"));
        if (bar.security_id.empty()) {
            throw SchemaError(table.source(), row.line(), "permno", "security identifier missing");
        }
        bar.date = row.required_date("date");
        bar.raw_price = row.number("prc");
        if (bar.raw_price && *bar.raw_price < 0.0) {
            bar.raw_price = -*bar.raw_price;
            ++negative;
        }
        bar.daily_return = row.number("ret");
        bar.shares_outstanding = row.number("shrout");
        bar.cfacpr = row.number("cfacpr");
        bar.cfacshr = row.number("cfacshr");
        bars.push_back(std::move(bar));
    }
    if (negative > 0) {
        if (diag) diag->count("negative_price", negative);
        logger().info("{}: {} negative prices (bid/ask midpoints) taken as absolute values", path.string(),
                      negative);
    }
    return bars;
}

}  // namespace cashfactor
