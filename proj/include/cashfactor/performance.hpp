#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "cashfactor/date.hpp"
#include "cashfactor/factors.hpp"
#include "cashfactor/ols.hpp"

namespace cashfactor {

struct MetricRow {
    double mean = 0.0;
    double volatility = 0.0;
    double sharpe = 0.0;
    std::size_t observations = 0;
};

inline constexpr double kMonthsPerYear = 12.0;

/// Mean, sample volatility and Sharpe of returns - rf. With `annualize` the
/// mean is scaled by 12 and volatility and Sharpe by sqrt(12). Needs at least
/// 12 aligned observations; throws UndefinedSharpeError on zero variance.
MetricRow summarize(std::span<const double> returns, std::span<const double> risk_free, bool annualize);

/// Names of the factor regressors in design order.
inline constexpr const char* kMarketFactor = "market_factor";
inline constexpr const char* kSizeFactor = "size_factor";
inline constexpr const char* kValueFactor = "value_factor";
inline constexpr const char* kMomentumFactor = "momentum_factor";

struct FactorAlphaFit {
    /// Fit on standardized factors (mean 0, sample sd 1); its intercept is the
    /// mean excess return.
    RegressionFit standardized;
    Standardization transform;
    /// The same fit expressed on raw factor returns; its intercept is alpha.
    RegressionFit raw;
    std::vector<Date> months;

    double alpha() const { return *raw.coefficient(kIntercept); }
};

/// Regresses monthly excess returns on market, size, value and (optionally)
/// momentum factors plus an intercept, with the factors standardized first.
/// Needs at least 24 months; throws DataError listing any return month that
/// has no factor observation.
FactorAlphaFit factor_alpha(const std::map<Date, double>& excess_returns, std::span<const FactorMonth> factors,
                            bool include_momentum = true);

/// Month-aligned cumulative returns of the portfolio, every benchmark and the
/// risk-free rate over the months all of them cover.
struct ComparisonTable {
    std::vector<std::string> columns;  // "portfolio", benchmarks..., "risk_free"
    std::vector<Date> months;
    std::vector<std::vector<double>> cumulative;  // [month][column]
};

ComparisonTable compare_benchmarks(const std::map<Date, double>& portfolio, std::span<const NamedSeries> benchmarks,
                                   const std::map<Date, double>& risk_free);

struct AssetPerformance {
    std::string name;
    std::optional<MetricRow> monthly;
    std::optional<MetricRow> annualized;
    std::optional<FactorAlphaFit> alpha_fit;
    std::string error;  // why a metric is missing, if one is

    std::optional<double> alpha() const {
        if (!alpha_fit) return std::nullopt;
        return alpha_fit->alpha();
    }
};

struct PerformanceReport {
    std::vector<AssetPerformance> assets;  // portfolio first
};

/// Summary metrics and factor regressions for every series. Failures for one
/// asset are recorded in its `error` field instead of aborting the report.
PerformanceReport build_performance_report(std::span<const NamedSeries> assets, const std::map<Date, double>& risk_free,
                                           std::span<const FactorMonth> factors, bool include_momentum = true);

/// Coefficient table with the same columns as a statsmodels summary:
/// coef, std_err, t, p, ci_low, ci_high (95%).
nlohmann::json regression_table_json(const RegressionFit& fit);
nlohmann::json performance_json(const PerformanceReport& report);
/// Long-format flat table: `asset,section,row,column,value`.
std::string performance_csv(const PerformanceReport& report);

}  // namespace cashfactor
