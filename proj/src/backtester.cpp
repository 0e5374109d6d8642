#include "cashfactor/backtester.hpp"

#include <algorithm>
#include <cmath>

#include "cashfactor/error.hpp"

namespace cashfactor {

SignalIndex::SignalIndex(std::span<const SignalRow> rows, bool allow_negative_base) {
    for (const auto& row : rows) {
        if (!row.eligible(allow_negative_base)) continue;
        by_security_[row.security_id][row.month_end.month_ordinal()] = row.b_winsorized;
    }
}

std::optional<double> SignalIndex::at(const std::string& security_id, int month_ordinal) const {
    auto sec = by_security_.find(security_id);
    if (sec == by_security_.end()) return std::nullopt;
    auto it = sec->second.find(month_ordinal);
    if (it == sec->second.end()) return std::nullopt;
    return it->second;
}

std::map<std::string, double> lookback_average(const SignalIndex& signals, int lookback, Date t,
                                               double min_coverage) {
    if (lookback < 1) throw ConfigError("lookback must be at least one month");
    const int last = t.month_ordinal();
    const int first = last - lookback + 1;
    const auto required = static_cast<int>(std::ceil(min_coverage * lookback - 1e-12));

    std::map<std::string, double> out;
    for (const auto& [security, months] : signals.by_security()) {
        double sum = 0.0;
        int present = 0;
        for (auto it = months.lower_bound(first); it != months.end() && it->first <= last; ++it) {
            sum += it->second;
            ++present;
        }
        if (present == 0 || present < required) continue;
        out.emplace(security, sum / present);
    }
    return out;
}

std::vector<Holding> select_and_weight(const std::map<std::string, double>& average_signals) {
    double total = 0.0;
    for (const auto& [id, s] : average_signals) {
        if (s > 0.0) total += s;
    }
    std::vector<Holding> out;
    if (!(total > 0.0)) return out;
    for (const auto& [id, s] : average_signals) {
        if (s > 0.0) out.push_back({id, s / total});
    }
    return out;
}

PortfolioReturn portfolio_return(std::span<const Holding> holdings,
                                 const std::map<std::string, double>& next_month_returns) {
    PortfolioReturn out;
    for (const auto& h : holdings) {
        auto it = next_month_returns.find(h.security_id);
        if (it == next_month_returns.end()) {
            out.missing.push_back(h.security_id);
            continue;
        }
        out.value += h.weight * it->second;
    }
    return out;
}

std::vector<double> cumulative_returns(std::span<const double> monthly) {
    std::vector<double> out;
    out.reserve(monthly.size());
    double log_sum = 0.0;
    for (double r : monthly) {
        if (!(r > -1.0)) throw DataError("cumulative return undefined for a monthly return <= -1");
        log_sum += std::log1p(r);
        out.push_back(std::expm1(log_sum));
    }
    return out;
}

std::vector<double> BacktestResult::returns() const {
    std::vector<double> out;
    out.reserve(months.size());
    for (const auto& m : months) out.push_back(m.portfolio_return);
    return out;
}

ReturnPanel return_panel(std::span<const MonthlyEquityRow> equity) {
    ReturnPanel out;
    for (const auto& row : equity) {
        if (row.monthly_return) out[row.security_id][row.month_end] = *row.monthly_return;
    }
    return out;
}

BacktestResult run_backtest(const SignalIndex& signals, const ReturnPanel& returns,
                            const std::map<Date, double>& risk_free, const TradingCalendar& calendar,
                            const BacktestConfig& config, Diagnostics* diag) {
    if (config.lookback < 1) throw ConfigError("lookback must be at least one month");
    if (config.end < config.start) throw ConfigError("backtest period ends before it starts");
    const auto& month_ends = calendar.month_ends();
    if (config.start.month_ordinal() < month_ends.front().month_ordinal() ||
        config.end.month_ordinal() > month_ends.back().month_ordinal()) {
        throw DataError("backtest period " + config.start.iso() + " .. " + config.end.iso() +
                        " lies outside the data calendar " + month_ends.front().iso() + " .. " +
                        month_ends.back().iso());
    }

    BacktestResult result;
    result.config = config;
    for (const Date realization : month_ends) {
        if (realization < config.start || realization > config.end) continue;
        const auto formation = calendar.previous_month_end(realization);
        if (!formation) continue;

        PortfolioSnapshot snap;
        snap.month_end = *formation;
        snap.lookback = config.lookback;
        snap.holdings = select_and_weight(lookback_average(signals, config.lookback, *formation,
                                                           config.min_lookback_coverage));

        std::map<std::string, double> next;
        for (const auto& h : snap.holdings) {
            auto sec = returns.find(h.security_id);
            if (sec == returns.end()) continue;
            if (auto r = sec->second.find(realization); r != sec->second.end()) next.emplace(h.security_id, r->second);
        }

        BacktestMonth month;
        month.formation = *formation;
        month.realization = realization;
        month.n_holdings = snap.holdings.size();
        if (snap.holdings.empty()) {
            if (config.empty_month == EmptyMonthPolicy::RiskFree) {
                auto rf = risk_free.find(realization);
                if (rf == risk_free.end()) {
                    throw DataError("no risk-free rate for empty month " + realization.iso());
                }
                month.portfolio_return = rf->second;
            }
        } else {
            const auto pr = portfolio_return(snap.holdings, next);
            month.portfolio_return = pr.value;
            month.missing_returns = pr.missing.size();
            for (const auto& id : pr.missing) {
                note(diag, "missing_next_month_return", id + " held at " + formation->iso());
            }
            result.missing_return_events += pr.missing.size();
        }
        result.months.push_back(month);
        result.snapshots.push_back(std::move(snap));
    }
    if (result.months.empty()) {
        throw DataError("backtest period " + config.start.iso() + " .. " + config.end.iso() +
                        " contains no month with a preceding formation month");
    }
    if (result.missing_return_events > 0) {
        logger().warn("{} held positions had no next-month return and earned 0", result.missing_return_events);
    }
    const auto cum = cumulative_returns(result.returns());
    for (std::size_t i = 0; i < cum.size(); ++i) result.months[i].cumulative_return = cum[i];
    return result;
}

}  // namespace cashfactor
