#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace cashfactor {

/// Name of the explicit column of ones.
inline constexpr std::string_view kIntercept = "const";

/// Regressors (one named column each, intercept included explicitly) and the
/// response vector.
struct DesignMatrix {
    std::vector<std::string> columns;
    Eigen::MatrixXd values;
    Eigen::VectorXd response;

    /// Prepends a `const` column of ones to `regressors`.
    static DesignMatrix with_intercept(std::vector<std::string> names, const Eigen::MatrixXd& regressors,
                                       Eigen::VectorXd response);

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
    std::optional<Eigen::Index> index_of(std::string_view name) const;

    /// Throws DataError unless n >= k + 1, all entries are finite, names are
    /// unique and dimensions agree.
    void validate() const;
};

struct RegressionFit {
    std::vector<std::string> names;
    Eigen::VectorXd coefficients;
    Eigen::VectorXd std_errors;
    Eigen::VectorXd t_stats;
    Eigen::VectorXd p_values;
    /// sigma^2 (X'X)^-1.
    Eigen::MatrixXd covariance;
    Eigen::VectorXd residuals;
    double r_squared = 0.0;
    double adj_r_squared = 0.0;
    double sigma2 = 0.0;
    double condition_number = 0.0;
    Eigen::Index n_obs = 0;
    Eigen::Index df_resid = 0;

    std::optional<Eigen::Index> index_of(std::string_view name) const;
    /// Coefficient by name; nullopt when the term is not in the fit.
    std::optional<double> coefficient(std::string_view name) const;
};

/// Condition numbers above this are rejected as singular.
inline constexpr double kMaxConditionNumber = 1e12;

/// Ordinary least squares through a Householder QR factorization, with
/// classical homoskedastic standard errors and two-sided t-test p-values.
/// R-squared is centered: 1 - SSR/SST (0 when the response is constant).
/// Throws SingularFitError naming the columns involved in the near-linear
/// dependency when cond(X) exceeds kMaxConditionNumber.
RegressionFit fit_ols(const DesignMatrix& design);

struct Standardization {
    std::vector<std::string> columns;  // non-intercept columns, design order
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;  // sample standard deviation (n - 1)
};

struct StandardizedDesign {
    DesignMatrix design;
    Standardization transform;
};

/// Centers and scales every non-intercept column to mean 0 and sample standard
/// deviation 1. The response is left alone. Throws DataError naming any
/// zero-variance column.
StandardizedDesign standardize_features(const DesignMatrix& design);

/// Expresses a fit on standardized regressors in the original units:
/// beta_raw = beta_std / scale, const_raw = const_std - sum(beta_raw * mean),
/// with the covariance, standard errors, t-stats and p-values transformed
/// accordingly. Residuals and R-squared are unchanged.
RegressionFit unstandardize(const RegressionFit& fit, const Standardization& transform);

/// Sum of coefficient * row[name], plus the intercept when the fit has one.
/// Extra names in `row` are ignored; a missing regressor throws DataError.
double predict(const RegressionFit& fit, const std::map<std::string, double>& row);

/// Two-sided p-value P(|T| >= |t|) for Student's t with `df` degrees of freedom.
double student_t_two_sided_p(double t, double df);
/// CDF of Student's t.
double student_t_cdf(double t, double df);
/// Two-sided critical value: P(|T| <= q) = level.
double student_t_critical(double level, double df);

}  // namespace cashfactor
