#include "cashfactor/performance.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "cashfactor/backtester.hpp"
#include "cashfactor/csv.hpp"
#include "cashfactor/error.hpp"
#include "cashfactor/lookback_opt.hpp"

namespace cashfactor {

MetricRow summarize(std::span<const double> returns, std::span<const double> risk_free, bool annualize) {
    if (returns.size() != risk_free.size()) throw DataError("returns and risk-free series differ in length");
    if (returns.size() < 12) {
        throw DataError("performance summary needs at least 12 monthly observations, have " +
                        std::to_string(returns.size()));
    }
    std::vector<double> excess(returns.size());
    for (std::size_t i = 0; i < returns.size(); ++i) excess[i] = returns[i] - risk_free[i];

    const auto n = static_cast<double>(excess.size());
    MetricRow row;
    row.observations = excess.size();
    row.mean = std::accumulate(excess.begin(), excess.end(), 0.0) / n;
    double ss = 0.0;
    for (double e : excess) ss += (e - row.mean) * (e - row.mean);
    row.volatility = std::sqrt(ss / (n - 1.0));
    row.sharpe = sharpe_ratio(excess);
    if (annualize) {
        const double root = std::sqrt(kMonthsPerYear);
        row.mean *= kMonthsPerYear;
        row.volatility *= root;
        row.sharpe *= root;
    }
    return row;
}

FactorAlphaFit factor_alpha(const std::map<Date, double>& excess_returns, std::span<const FactorMonth> factors,
                            bool include_momentum) {
    std::map<Date, const FactorMonth*> by_month;
    for (const auto& f : factors) by_month[f.month_end] = &f;

    std::vector<std::string> missing;
    for (const auto& [month, r] : excess_returns) {
        auto it = by_month.find(month);
        if (it == by_month.end() || (include_momentum && !it->second->umd)) missing.push_back(month.iso());
    }
    if (!missing.empty()) {
        std::string listed;
        for (const auto& m : missing) listed += (listed.empty() ? "" : ", ") + m;
        throw DataError("factor data missing for months: " + listed);
    }
    if (excess_returns.size() < 24) {
        throw DataError("factor regression needs at least 24 aligned months, have " +
                        std::to_string(excess_returns.size()));
    }

    std::vector<std::string> names{kMarketFactor, kSizeFactor, kValueFactor};
    if (include_momentum) names.emplace_back(kMomentumFactor);
    const auto n = static_cast<Eigen::Index>(excess_returns.size());
    Eigen::MatrixXd x(n, static_cast<Eigen::Index>(names.size()));
    Eigen::VectorXd y(n);
    FactorAlphaFit out;
    Eigen::Index i = 0;
    for (const auto& [month, r] : excess_returns) {
        const FactorMonth& f = *by_month.at(month);
        x(i, 0) = f.mktrf;
        x(i, 1) = f.smb;
        x(i, 2) = f.hml;
        if (include_momentum) x(i, 3) = *f.umd;
        y[i] = r;
        out.months.push_back(month);
        ++i;
    }
    auto standardized = standardize_features(DesignMatrix::with_intercept(names, x, y));
    out.standardized = fit_ols(standardized.design);
    out.transform = std::move(standardized.transform);
    out.raw = unstandardize(out.standardized, out.transform);
    return out;
}

ComparisonTable compare_benchmarks(const std::map<Date, double>& portfolio, std::span<const NamedSeries> benchmarks,
                                   const std::map<Date, double>& risk_free) {
    ComparisonTable table;
    for (const auto& [month, r] : portfolio) {
        if (!risk_free.contains(month)) continue;
        bool all = true;
        for (const auto& b : benchmarks) all = all && b.values.contains(month);
        if (all) table.months.push_back(month);
    }
    if (table.months.empty()) throw DataError("portfolio, benchmarks and risk-free rate share no months");

    std::vector<std::vector<double>> columns;
    table.columns.push_back("portfolio");
    std::vector<const std::map<Date, double>*> sources{&portfolio};
    for (const auto& b : benchmarks) {
        table.columns.push_back(b.name);
        sources.push_back(&b.values);
    }
    table.columns.push_back("risk_free");
    sources.push_back(&risk_free);

    for (const auto* src : sources) {
        std::vector<double> monthly;
        monthly.reserve(table.months.size());
        for (const Date m : table.months) monthly.push_back(src->at(m));
        columns.push_back(cumulative_returns(monthly));
    }
    table.cumulative.assign(table.months.size(), std::vector<double>(columns.size()));
    for (std::size_t t = 0; t < table.months.size(); ++t) {
        for (std::size_t c = 0; c < columns.size(); ++c) table.cumulative[t][c] = columns[c][t];
    }
    return table;
}

PerformanceReport build_performance_report(std::span<const NamedSeries> assets, const std::map<Date, double>& risk_free,
                                           std::span<const FactorMonth> factors, bool include_momentum) {
    PerformanceReport report;
    for (const auto& asset : assets) {
        AssetPerformance perf;
        perf.name = asset.name;
        std::vector<double> r;
        std::vector<double> rf;
        std::map<Date, double> excess;
        for (const auto& [month, value] : asset.values) {
            auto it = risk_free.find(month);
            if (it == risk_free.end()) continue;
            r.push_back(value);
            rf.push_back(it->second);
            excess.emplace(month, value - it->second);
        }
        try {
            perf.monthly = summarize(r, rf, false);
            perf.annualized = summarize(r, rf, true);
        } catch (const Error& e) {
            perf.error = e.what();
        }
        try {
            perf.alpha_fit = factor_alpha(excess, factors, include_momentum);
        } catch (const Error& e) {
            perf.error += (perf.error.empty() ? "" : "; ") + std::string(e.what());
        }
        report.assets.push_back(std::move(perf));
    }
    return report;
}

nlohmann::json regression_table_json(const RegressionFit& fit) {
    const double q = student_t_critical(0.95, static_cast<double>(fit.df_resid));
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t j = 0; j < fit.names.size(); ++j) {
        const auto k = static_cast<Eigen::Index>(j);
        rows.push_back({{"variable", fit.names[j]},
                        {"coef", fit.coefficients[k]},
                        {"std_err", fit.std_errors[k]},
                        {"t", fit.t_stats[k]},
                        {"p", fit.p_values[k]},
                        {"ci_low", fit.coefficients[k] - q * fit.std_errors[k]},
                        {"ci_high", fit.coefficients[k] + q * fit.std_errors[k]}});
    }
    return {{"coefficients", rows},
            {"r_squared", fit.r_squared},
            {"adj_r_squared", fit.adj_r_squared},
            {"n_obs", fit.n_obs},
            {"df_resid", fit.df_resid}};
}

namespace {

nlohmann::json metric_json(const std::optional<MetricRow>& row) {
    if (!row) return nullptr;
    return {{"mean", row->mean}, {"volatility", row->volatility}, {"sharpe", row->sharpe}, {"n", row->observations}};
}

}  // namespace

nlohmann::json performance_json(const PerformanceReport& report) {
    nlohmann::json monthly = nlohmann::json::array();
    nlohmann::json annualized = nlohmann::json::array();
    nlohmann::json regressions = nlohmann::json::object();
    for (const auto& a : report.assets) {
        auto m = metric_json(a.monthly);
        auto y = metric_json(a.annualized);
        const auto alpha = a.alpha();
        nlohmann::json alpha_json = alpha ? nlohmann::json(*alpha) : nlohmann::json(nullptr);
        monthly.push_back({{"asset", a.name}, {"metrics", m}, {"alpha", alpha_json}});
        annualized.push_back({{"asset", a.name}, {"metrics", y}, {"alpha", alpha_json}});
        if (a.alpha_fit) {
            nlohmann::json transform = nlohmann::json::array();
            for (std::size_t i = 0; i < a.alpha_fit->transform.columns.size(); ++i) {
                const auto k = static_cast<Eigen::Index>(i);
                transform.push_back({{"variable", a.alpha_fit->transform.columns[i]},
                                     {"mean", a.alpha_fit->transform.mean[k]},
                                     {"scale", a.alpha_fit->transform.scale[k]}});
            }
            regressions[a.name] = {{"standardized", regression_table_json(a.alpha_fit->standardized)},
                                   {"raw", regression_table_json(a.alpha_fit->raw)},
                                   {"standardization", transform},
                                   {"first_month", a.alpha_fit->months.front().iso()},
                                   {"last_month", a.alpha_fit->months.back().iso()}};
        }
        if (!a.error.empty()) regressions[a.name + ".error"] = a.error;
    }
    return {{"metrics_monthly", monthly},
            {"metrics_annualized", annualized},
            {"alpha_definition", "intercept of the raw-factor regression (standardized intercept = mean excess return)"},
            {"regressions", regressions}};
}

std::string performance_csv(const PerformanceReport& report) {
    std::ostringstream out;
    write_csv_line(out, {"asset", "section", "row", "column", "value"});
    auto metrics = [&](const AssetPerformance& a, const char* section, const std::optional<MetricRow>& row) {
        if (!row) return;
        write_csv_line(out, {a.name, section, "", "mean", format_number(row->mean)});
        write_csv_line(out, {a.name, section, "", "volatility", format_number(row->volatility)});
        write_csv_line(out, {a.name, section, "", "sharpe", format_number(row->sharpe)});
        write_csv_line(out, {a.name, section, "", "alpha", format_number(a.alpha())});
    };
    auto regression = [&](const AssetPerformance& a, const char* section, const RegressionFit& fit) {
        const double q = student_t_critical(0.95, static_cast<double>(fit.df_resid));
        for (std::size_t j = 0; j < fit.names.size(); ++j) {
            const auto k = static_cast<Eigen::Index>(j);
            write_csv_line(out, {a.name, section, fit.names[j], "coef", format_number(fit.coefficients[k])});
            write_csv_line(out, {a.name, section, fit.names[j], "std_err", format_number(fit.std_errors[k])});
            write_csv_line(out, {a.name, section, fit.names[j], "t", format_number(fit.t_stats[k])});
            write_csv_line(out, {a.name, section, fit.names[j], "p", format_number(fit.p_values[k])});
            write_csv_line(out, {a.name, section, fit.names[j], "ci_low",
                                 format_number(fit.coefficients[k] - q * fit.std_errors[k])});
            write_csv_line(out, {a.name, section, fit.names[j], "ci_high",
                                 format_number(fit.coefficients[k] + q * fit.std_errors[k])});
        }
        write_csv_line(out, {a.name, section, "", "r_squared", format_number(fit.r_squared)});
        write_csv_line(out, {a.name, section, "", "adj_r_squared", format_number(fit.adj_r_squared)});
    };
    for (const auto& a : report.assets) {
        metrics(a, "metrics_monthly", a.monthly);
        metrics(a, "metrics_annualized", a.annualized);
        if (a.alpha_fit) {
            regression(a, "regression_standardized", a.alpha_fit->standardized);
            regression(a, "regression_raw", a.alpha_fit->raw);
        }
    }
    return out.str();
}

}  // namespace cashfactor
