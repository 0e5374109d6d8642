#include "cashfactor/cash_signal.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "cashfactor/error.hpp"

namespace cashfactor {

namespace {

std::optional<CashReturn> cash_return_at(std::span<const AcvPoint> series, std::size_t t) {
    if (t == 0) return std::nullopt;
    const AcvPoint& cur = series[t];
    const AcvPoint& prev = series[t - 1];
    if (prev.month_end.month_ordinal() + 1 != cur.month_end.month_ordinal()) return std::nullopt;

    std::vector<double> history;
    history.reserve(t + 1);
    for (std::size_t i = 0; i <= t; ++i) history.push_back(series[i].value);
    if (!(std::abs(prev.value) >= acv_epsilon(history))) return std::nullopt;

    CashReturn r;
    r.month_end = cur.month_end;
    r.value = (cur.value - prev.value) / prev.value;
    r.negative_base = prev.value < 0.0;
    return r;
}

void check_percentiles(double p_low, double p_high) {
    if (!(p_low >= 0.0 && p_low < p_high && p_high <= 100.0)) {
        throw DataError("winsorization percentiles must satisfy 0 <= low < high <= 100");
    }
}

}  // namespace

CashValueFit fit_cash_regression(std::span<const FirmMonthRow> panel, Date as_of, const SignalConfig& config) {
    const int last = as_of.month_ordinal();
    std::vector<const FirmMonthRow*> rows;
    for (const auto& row : panel) {
        if (row.month_end > as_of) continue;
        if (config.rolling_months > 0 && row.month_end.month_ordinal() <= last - config.rolling_months) continue;
        rows.push_back(&row);
    }
    if (rows.size() < config.min_obs) {
        throw NoFitError("cash regression as of " + as_of.iso() + " has " + std::to_string(rows.size()) +
                         " observations; needs " + std::to_string(config.min_obs));
    }

    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd x(n, static_cast<Eigen::Index>(kRegressorCount));
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < kRegressorCount; ++j) x(i, static_cast<Eigen::Index>(j)) = rows[i]->x[j];
        y[i] = rows[i]->excess_return;
    }

    CashValueFit result;
    result.as_of = as_of;
    std::vector<std::string> kept_names;
    std::vector<Eigen::Index> kept;
    for (std::size_t j = 0; j < kRegressorCount; ++j) {
        const auto col = x.col(static_cast<Eigen::Index>(j));
        const double spread = col.maxCoeff() - col.minCoeff();
        if (spread <= 1e-12 * col.cwiseAbs().maxCoeff()) {
            result.dropped.emplace_back(kRegressorNames[j]);
            continue;
        }
        kept.push_back(static_cast<Eigen::Index>(j));
        kept_names.emplace_back(kRegressorNames[j]);
    }
    if (n < static_cast<Eigen::Index>(kept.size()) + 2) {
        throw NoFitError("cash regression as of " + as_of.iso() + " has fewer observations than parameters");
    }
    Eigen::MatrixXd regressors(n, static_cast<Eigen::Index>(kept.size()));
    for (std::size_t j = 0; j < kept.size(); ++j) regressors.col(static_cast<Eigen::Index>(j)) = x.col(kept[j]);

    if (!result.dropped.empty()) {
        logger().debug("cash regression as of {}: dropped {} zero-variance regressors", as_of.iso(),
                       result.dropped.size());
    }
    result.fit = fit_ols(DesignMatrix::with_intercept(std::move(kept_names), regressors, std::move(y)));
    return result;
}

MarginalCashInputs marginal_cash_inputs(const FirmMonthRow& row) {
    return {row.x[kLaggedCash], row.leverage};
}

double marginal_cash_value(const RegressionFit& fit, const MarginalCashInputs& inputs) {
    const auto alpha = fit.coefficient(kIntercept);
    if (!alpha) throw DataError("cash-value fit has no intercept");
    const double g_cash = fit.coefficient(kRegressorNames[kLaggedCash]).value_or(0.0);
    const double g_lev = fit.coefficient(kRegressorNames[kLeverage]).value_or(0.0);
    return *alpha + g_cash * inputs.lagged_cash_ratio + g_lev * inputs.leverage;
}

double marginal_cash_value(const RegressionFit& fit, const FirmMonthRow& row) {
    return marginal_cash_value(fit, marginal_cash_inputs(row));
}

double acv_epsilon(std::span<const double> history) {
    constexpr double kFloor = 1e-12;
    if (history.empty()) return kFloor;
    std::vector<double> mags;
    mags.reserve(history.size());
    for (double v : history) mags.push_back(std::abs(v));
    const std::size_t mid = mags.size() / 2;
    std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(mid), mags.end());
    double median = mags[mid];
    if (mags.size() % 2 == 0) {
        const double lower = *std::max_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(mid));
        median = 0.5 * (median + lower);
    }
    return std::max(kFloor, 1e-9 * median);
}

std::vector<CashReturn> cash_return(std::span<const AcvPoint> series) {
    std::vector<CashReturn> out;
    for (std::size_t t = 1; t < series.size(); ++t) {
        if (auto r = cash_return_at(series, t)) out.push_back(*r);
    }
    return out;
}

double percentile(std::span<const double> values, double p) {
    if (values.empty()) throw DataError("percentile of an empty series");
    if (!(p >= 0.0 && p <= 100.0)) throw DataError("percentile must lie in [0, 100]");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double h = static_cast<double>(sorted.size() - 1) * p / 100.0;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

WinsorBounds winsor_bounds(std::span<const double> values, double p_low, double p_high) {
    check_percentiles(p_low, p_high);
    return {percentile(values, p_low), percentile(values, p_high)};
}

std::vector<double> winsorize(std::span<const double> values, double p_low, double p_high) {
    if (values.empty()) throw DataError("cannot winsorize an empty series");
    const auto bounds = winsor_bounds(values, p_low, p_high);
    std::vector<double> out(values.begin(), values.end());
    for (double& v : out) v = std::clamp(v, bounds.low, bounds.high);
    return out;
}

SignalSeries compute_signal_series(std::span<const FirmMonthRow> panel, const TradingCalendar& calendar,
                                   const SignalConfig& config, Diagnostics* diag) {
    check_percentiles(config.winsor_low, config.winsor_high);
    if (config.refit_every_months < 1) throw ConfigError("refit interval must be at least one month");

    std::map<Date, std::vector<const FirmMonthRow*>> by_month;
    for (const auto& row : panel) by_month[row.month_end].push_back(&row);

    SignalSeries out;
    std::optional<CashValueFit> fit;
    std::vector<std::string> last_dropped;
    std::map<std::pair<std::string, std::string>, std::vector<AcvPoint>> acv;

    const auto& month_ends = calendar.month_ends();
    for (std::size_t m = 0; m < month_ends.size(); ++m) {
        const Date t = month_ends[m];
        auto month_rows = by_month.find(t);
        if (month_rows == by_month.end() && !fit) continue;

        if (m % static_cast<std::size_t>(config.refit_every_months) == 0) {
            try {
                fit = fit_cash_regression(panel, t, config);
                out.fits.push_back({t, static_cast<std::size_t>(fit->fit.n_obs), fit->fit.r_squared, fit->dropped});
                if (fit->dropped != last_dropped) {
                    if (!fit->dropped.empty()) {
                        std::string names;
                        for (const auto& d : fit->dropped) names += (names.empty() ? "" : ", ") + d;
                        logger().warn("cash regression as of {} drops zero-variance regressors: {}", t.iso(), names);
                    }
                    last_dropped = fit->dropped;
                }
            } catch (const NoFitError& e) {
                note(diag, "no_fit", e.what());
            } catch (const SingularFitError& e) {
                note(diag, "singular_fit", e.what());
                logger().warn("{}", e.what());
            }
        }
        if (!fit || month_rows == by_month.end()) continue;

        std::vector<SignalRow> month_signals;
        for (const FirmMonthRow* row : month_rows->second) {
            const double mcv = marginal_cash_value(fit->fit, *row);
            const double value = average_cash_value(mcv, row->fundamentals.cash_holdings);
            auto& series = acv[{row->firm_id, row->security_id}];
            series.push_back({t, value});
            const auto b = cash_return_at(series, series.size() - 1);
            if (!b) continue;

            SignalRow s;
            s.firm_id = row->firm_id;
            s.security_id = row->security_id;
            s.month_end = t;
            s.marginal_cash_value = mcv;
            s.avg_cash_value = value;
            s.b_raw = b->value;
            s.flags = b->negative_base ? kFlagNegativeBase : kFlagNone;
            s.fit_as_of = fit->as_of;
            if (b->negative_base) note(diag, "negative_acv_base", row->firm_id + "@" + t.iso());
            month_signals.push_back(std::move(s));
        }
        if (month_signals.empty()) continue;

        std::vector<double> cross_section;
        for (const auto& s : month_signals) {
            if (s.eligible(config.allow_negative_acv_base)) cross_section.push_back(s.b_raw);
        }
        if (cross_section.empty()) {
            for (const auto& s : month_signals) cross_section.push_back(s.b_raw);
        }
        const auto bounds = winsor_bounds(cross_section, config.winsor_low, config.winsor_high);
        for (auto& s : month_signals) s.b_winsorized = std::clamp(s.b_raw, bounds.low, bounds.high);

        std::sort(month_signals.begin(), month_signals.end(), [](const SignalRow& a, const SignalRow& b) {
            return std::tie(a.firm_id, a.security_id) < std::tie(b.firm_id, b.security_id);
        });
        for (auto& s : month_signals) out.rows.push_back(std::move(s));
    }
    return out;
}

}  // namespace cashfactor
