#include "cashfactor/fundamentals.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>
#include <unordered_map>

#include "cashfactor/csv.hpp"
#include "cashfactor/error.hpp"

namespace cashfactor {

const std::array<const char*, kRegressorCount> kRegressorNames = {
    "d_cash",          "d_earnings",      "d_noncash_assets", "d_rnd",
    "d_interest",      "d_dividends",     "lag_cash",         "leverage",
    "d_debt_plus_cap", "cash_x_size",     "cash_x_leverage",
};

namespace {

std::string filing_key(const QuarterlyFiling& f) { return f.firm_id + "@" + f.report_date.iso(); }

bool filing_is_valid(const QuarterlyFiling& f, Diagnostics* diag) {
    if (f.total_assets && *f.total_assets < 0.0) {
        note(diag, "invalid_filing", filing_key(f) + " has negative total assets");
        return false;
    }
    if (f.cash_holdings && *f.cash_holdings < 0.0) {
        note(diag, "invalid_filing", filing_key(f) + " has negative cash holdings");
        return false;
    }
    if (f.cash_holdings && f.total_assets && *f.cash_holdings > *f.total_assets) {
        note(diag, "invalid_filing", filing_key(f) + " reports cash above total assets");
        return false;
    }
    return true;
}

std::optional<FilingValues> impute(const QuarterlyFiling& f) {
    if (!f.total_assets || !f.cash_holdings || !f.earnings) return std::nullopt;
    FilingValues v;
    v.total_assets = *f.total_assets;
    v.cash_holdings = *f.cash_holdings;
    v.earnings = *f.earnings;
    v.total_debt = f.total_debt.value_or(0.0);
    v.rnd_expense = f.rnd_expense.value_or(0.0);
    v.interest_expense = f.interest_expense.value_or(0.0);
    v.dividends_paid = f.dividends_paid.value_or(0.0);
    return v;
}

bool same_filing(const EffectiveFiling& a, const EffectiveFiling& b) {
    return a.filing.firm_id == b.filing.firm_id && a.filing.report_date == b.filing.report_date &&
           a.effective_month_end == b.effective_month_end;
}

}  // namespace

std::vector<EffectiveFiling> apply_pit_lag(std::span<const QuarterlyFiling> filings,
                                           const TradingCalendar& calendar, Diagnostics* diag) {
    std::vector<EffectiveFiling> out;
    out.reserve(filings.size());
    for (const auto& f : filings) {
        if (!filing_is_valid(f, diag)) continue;
        const auto effective = calendar.next_trading_day_after(f.report_date);
        if (!effective) {
            note(diag, "filing_after_calendar", filing_key(f) + " has no trading day after its report date");
            continue;
        }
        // A trading day always has a month end on or after it.
        const Date month_end = *calendar.month_end_on_or_after(*effective);
        out.push_back(EffectiveFiling{f, *effective, month_end});
    }
    std::stable_sort(out.begin(), out.end(), [](const EffectiveFiling& a, const EffectiveFiling& b) {
        return std::tie(a.filing.firm_id, a.effective_month_end, a.filing.report_date) <
               std::tie(b.filing.firm_id, b.effective_month_end, b.filing.report_date);
    });
    return out;
}

std::vector<MonthlyFundamentals> forward_fill_monthly(std::span<const EffectiveFiling> filings,
                                                      const TradingCalendar& calendar,
                                                      int max_staleness_months) {
    std::vector<EffectiveFiling> sorted(filings.begin(), filings.end());
    std::stable_sort(sorted.begin(), sorted.end(), [](const EffectiveFiling& a, const EffectiveFiling& b) {
        return std::tie(a.filing.firm_id, a.effective_month_end, a.filing.report_date) <
               std::tie(b.filing.firm_id, b.effective_month_end, b.filing.report_date);
    });

    const auto& month_ends = calendar.month_ends();
    std::vector<MonthlyFundamentals> out;
    std::size_t begin = 0;
    while (begin < sorted.size()) {
        std::size_t end = begin;
        while (end < sorted.size() && sorted[end].filing.firm_id == sorted[begin].filing.firm_id) ++end;

        // Latest filing per effective month.
        std::vector<const EffectiveFiling*> visible;
        for (std::size_t i = begin; i < end; ++i) {
            if (!visible.empty() && visible.back()->effective_month_end == sorted[i].effective_month_end) {
                visible.back() = &sorted[i];
            } else {
                visible.push_back(&sorted[i]);
            }
        }

        std::size_t next = 0;
        const EffectiveFiling* current = nullptr;
        const EffectiveFiling* previous = nullptr;
        auto it = std::lower_bound(month_ends.begin(), month_ends.end(), visible.front()->effective_month_end);
        for (; it != month_ends.end(); ++it) {
            while (next < visible.size() && visible[next]->effective_month_end <= *it) {
                previous = current;
                current = visible[next++];
            }
            const int staleness = it->month_ordinal() - current->effective_month_end.month_ordinal();
            if (staleness > max_staleness_months) {
                if (next == visible.size()) break;
                continue;
            }
            MonthlyFundamentals row;
            row.firm_id = current->filing.firm_id;
            row.month_end = *it;
            row.current = *current;
            if (previous) row.previous = *previous;
            row.staleness_months = staleness;
            out.push_back(std::move(row));
        }
        begin = end;
    }
    return out;
}

std::vector<EffectiveFiling> filings_of(std::span<const MonthlyFundamentals> rows) {
    std::vector<EffectiveFiling> out;
    for (const auto& row : rows) {
        if (out.empty() || !same_filing(out.back(), row.current)) out.push_back(row.current);
    }
    return out;
}

UniverseResult filter_universe(std::span<const LinkRow> links, std::span<const QuarterlyFiling> filings,
                               std::span<const MonthlyEquityRow> prices, const UniverseConfig& config) {
    UniverseResult result;
    auto& ex = result.exclusions;
    ex["financial_sic"] = 0;
    ex["not_handpicked"] = 0;
    ex["no_filings"] = 0;
    ex["no_prices"] = 0;
    ex["insufficient_coverage"] = 0;

    std::set<std::string> firms_with_filings;
    for (const auto& f : filings) firms_with_filings.insert(f.firm_id);
    std::map<std::string, std::pair<Date, Date>> price_span;
    for (const auto& p : prices) {
        auto [it, inserted] = price_span.try_emplace(p.security_id, p.month_end, p.month_end);
        if (!inserted) {
            it->second.first = std::min(it->second.first, p.month_end);
            it->second.second = std::max(it->second.second, p.month_end);
        }
    }
    const std::set<std::string> picked(config.ids.begin(), config.ids.end());

    std::vector<LinkRow> sorted(links.begin(), links.end());
    std::sort(sorted.begin(), sorted.end(), [](const LinkRow& a, const LinkRow& b) {
        return std::tie(a.firm_id, a.security_id, a.link_start) < std::tie(b.firm_id, b.security_id, b.link_start);
    });
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        const auto& a = sorted[i - 1];
        const auto& b = sorted[i];
        if (a.firm_id == b.firm_id && a.security_id == b.security_id && (!a.link_end || b.link_start <= *a.link_end)) {
            throw DataError("overlapping link ranges for firm " + a.firm_id + " / security " + a.security_id);
        }
    }

    std::set<std::pair<std::string, std::string>> admitted_pairs;
    std::set<std::pair<std::string, std::string>> seen_pairs;
    for (const auto& link : sorted) {
        if (link.sic_code < 0 || link.sic_code > 9999) {
            throw DataError("SIC code out of range for firm " + link.firm_id + ": " + std::to_string(link.sic_code));
        }
        const auto pair = std::make_pair(link.firm_id, link.security_id);
        const bool first_time = seen_pairs.insert(pair).second;
        auto reject = [&](const char* reason) {
            if (first_time) ++ex[reason];
        };
        if (link.sic_code >= config.exclude_sic_from && link.sic_code <= config.exclude_sic_to) {
            reject("financial_sic");
            continue;
        }
        if (config.mode == UniverseMode::Handpicked && !picked.contains(link.security_id) &&
            !picked.contains(link.firm_id)) {
            reject("not_handpicked");
            continue;
        }
        if (!firms_with_filings.contains(link.firm_id)) {
            reject("no_filings");
            continue;
        }
        auto span = price_span.find(link.security_id);
        if (span == price_span.end()) {
            reject("no_prices");
            continue;
        }
        if ((config.coverage_start && span->second.first > *config.coverage_start) ||
            (config.coverage_end && span->second.second < *config.coverage_end)) {
            reject("insufficient_coverage");
            continue;
        }
        admitted_pairs.insert(pair);
        result.members.push_back(link);
    }

    if (result.members.empty()) {
        std::string detail;
        for (const auto& [reason, n] : ex) detail += " " + reason + "=" + std::to_string(n);
        throw UniverseError("universe is empty after filtering " + std::to_string(seen_pairs.size()) +
                            " linked pairs; exclusions:" + detail);
    }
    logger().info("universe: {} of {} linked pairs admitted", admitted_pairs.size(), seen_pairs.size());
    return result;
}

double leverage_ratio(double total_debt, double market_cap) { return total_debt / (total_debt + market_cap); }

std::optional<double> debt_plus_cap_change(double debt, double market_cap, double lagged_debt,
                                           double lagged_market_cap) {
    const double base = lagged_debt + lagged_market_cap;
    if (!(base > 0.0)) return std::nullopt;
    return ((debt + market_cap) - base) / base;
}

std::optional<std::pair<double, std::array<double, kRegressorCount>>> compute_regressors(
    const FilingValues& cur, const FilingValues& prev, double market_cap, double lagged_market_cap) {
    if (!(lagged_market_cap > 0.0) || !(market_cap > 0.0)) return std::nullopt;
    if (!(cur.total_debt + market_cap > 0.0)) return std::nullopt;

    const double d_cash = cur.cash_holdings - prev.cash_holdings;
    const double leverage = leverage_ratio(cur.total_debt, market_cap);
    const auto debt_change = debt_plus_cap_change(cur.total_debt, market_cap, prev.total_debt, lagged_market_cap);
    if (!debt_change) return std::nullopt;

    std::array<double, kRegressorCount> x{};
    x[kDeltaCash] = d_cash / lagged_market_cap;
    x[kDeltaEarnings] = (cur.earnings - prev.earnings) / lagged_market_cap;
    x[kDeltaNoncashAssets] =
        ((cur.total_assets - cur.cash_holdings) - (prev.total_assets - prev.cash_holdings)) / lagged_market_cap;
    x[kDeltaRnd] = (cur.rnd_expense - prev.rnd_expense) / lagged_market_cap;
    x[kDeltaInterest] = (cur.interest_expense - prev.interest_expense) / lagged_market_cap;
    x[kDeltaDividends] = (cur.dividends_paid - prev.dividends_paid) / lagged_market_cap;
    x[kLaggedCash] = prev.cash_holdings / lagged_market_cap;
    x[kLeverage] = leverage;
    x[kDeltaDebtPlusCap] = *debt_change;
    x[kCashSizeInteraction] = lagged_market_cap * d_cash / (market_cap * market_cap);
    x[kCashLeverageInteraction] = leverage * d_cash / market_cap;

    for (double v : x) {
        if (!std::isfinite(v)) return std::nullopt;
    }
    return std::make_pair(leverage, x);
}

std::vector<FirmMonthRow> build_panel(std::span<const MonthlyFundamentals> fundamentals,
                                      std::span<const MonthlyEquityRow> equity,
                                      const std::map<Date, double>& risk_free, std::span<const LinkRow> members,
                                      const TradingCalendar& calendar, Diagnostics* diag) {
    std::map<std::pair<std::string, Date>, const MonthlyEquityRow*> equity_at;
    for (const auto& row : equity) equity_at[{row.security_id, row.month_end}] = &row;
    std::unordered_map<std::string, std::vector<const MonthlyFundamentals*>> fundamentals_of;
    for (const auto& row : fundamentals) fundamentals_of[row.firm_id].push_back(&row);

    std::vector<FirmMonthRow> out;
    for (const auto& link : members) {
        auto firm = fundamentals_of.find(link.firm_id);
        if (firm == fundamentals_of.end()) continue;
        for (const MonthlyFundamentals* fm : firm->second) {
            const Date t = fm->month_end;
            if (!link.active_on(t)) continue;
            const std::string where = link.firm_id + "/" + link.security_id + "@" + t.iso();

            auto eq = equity_at.find({link.security_id, t});
            if (eq == equity_at.end()) {
                note(diag, "panel_missing_price", where);
                continue;
            }
            if (!eq->second->monthly_return) {
                note(diag, "panel_missing_return", where);
                continue;
            }
            const auto prev_month = calendar.previous_month_end(t);
            auto lag = prev_month ? equity_at.find({link.security_id, *prev_month}) : equity_at.end();
            if (lag == equity_at.end()) {
                note(diag, "panel_missing_lagged_market_cap", where);
                continue;
            }
            if (!(lag->second->market_cap > 0.0)) {
                note(diag, "panel_nonpositive_lagged_market_cap", where);
                continue;
            }
            auto rf = risk_free.find(t);
            if (rf == risk_free.end()) {
                note(diag, "panel_missing_risk_free", where);
                continue;
            }
            if (!fm->previous) {
                note(diag, "panel_no_previous_filing", where);
                continue;
            }
            const auto current = impute(fm->current.filing);
            const auto previous = impute(fm->previous->filing);
            if (!current || !previous) {
                note(diag, "panel_missing_critical_field", where);
                continue;
            }
            const auto regressors = compute_regressors(*current, *previous, eq->second->market_cap,
                                                       lag->second->market_cap);
            if (!regressors) {
                note(diag, "panel_degenerate_regressor", where);
                continue;
            }

            FirmMonthRow row;
            row.firm_id = link.firm_id;
            row.security_id = link.security_id;
            row.month_end = t;
            row.monthly_return = *eq->second->monthly_return;
            row.risk_free = rf->second;
            row.excess_return = row.monthly_return - row.risk_free;
            row.market_cap = eq->second->market_cap;
            row.lagged_market_cap = lag->second->market_cap;
            row.fundamentals = *current;
            row.lagged_fundamentals = *previous;
            row.filing_report_date = fm->current.filing.report_date;
            row.leverage = regressors->first;
            row.x = regressors->second;
            out.push_back(std::move(row));
        }
    }
    std::sort(out.begin(), out.end(), [](const FirmMonthRow& a, const FirmMonthRow& b) {
        return std::tie(a.firm_id, a.security_id, a.month_end) < std::tie(b.firm_id, b.security_id, b.month_end);
    });
    return out;
}

std::vector<QuarterlyFiling> read_fundamentals_csv(const std::filesystem::path& path, Diagnostics* diag) {
    const auto table =
        CsvTable::read(path, {"gvkey", "rdq", "atq", "cheq", "dlttq", "ibq", "xrdq", "xintq", "dvq"});
    std::vector<QuarterlyFiling> out;
    out.reserve(table.rows().size());
    for (const auto& row : table.rows()) {
        QuarterlyFiling f;
        f.firm_id = std::string(row.text("gvkey"));
        if (f.firm_id.empty()) throw SchemaError(table.source(), row.line(), "gvkey", "firm identifier missing");
        const auto rdq = row.date("rdq");
        if (!rdq) {
            note(diag, "missing_report_date", table.source() + ":" + std::to_string(row.line()));
            continue;
        }
        f.report_date = *rdq;
        f.total_assets = row.number("atq");
        f.cash_holdings = row.number("cheq");
        f.total_debt = row.number("dlttq");
        f.earnings = row.number("ibq");
        f.rnd_expense = row.number("xrdq");
        f.interest_expense = row.number("xintq");
        f.dividends_paid = row.number("dvq");
        out.push_back(std::move(f));
    }
    return out;
}

std::vector<LinkRow> read_link_csv(const std::filesystem::path& path) {
    const auto table = CsvTable::read(path, {"gvkey", "permno", "sic", "linkdt", "linkenddt"});
    std::vector<LinkRow> out;
    out.reserve(table.rows().size());
    for (const auto& row : table.rows()) {
        LinkRow link;
        link.firm_id = std::string(row.text("gvkey"));
        link.security_id = std::string(row.text("permno"));
        if (link.firm_id.empty()) throw SchemaError(table.source(), row.line(), "gvkey", "firm identifier missing");
        if (link.security_id.empty()) {
            throw SchemaError(table.source(), row.line(), "permno", "security identifier missing");
        }
        const double sic = row.required_number("sic");
        if (sic != std::floor(sic) || sic < 0 || sic > 9999) {
            throw SchemaError(table.source(), row.line(), "sic", "expected an integer in [0, 9999]");
        }
        link.sic_code = static_cast<int>(sic);
        link.link_start = row.required_date("linkdt");
        if (row.text("linkenddt") != "E") link.link_end = row.date("linkenddt");  // CRSP open-ended marker
        out.push_back(std::move(link));
    }
    return out;
}

}  // namespace cashfactor
