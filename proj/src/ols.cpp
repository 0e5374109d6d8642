#include "cashfactor/ols.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <boost/math/distributions/students_t.hpp>

#include "cashfactor/error.hpp"

namespace cashfactor {

namespace {

std::optional<Eigen::Index> find_name(const std::vector<std::string>& names, std::string_view name) {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) return std::nullopt;
    return static_cast<Eigen::Index>(it - names.begin());
}

void fill_inference(RegressionFit& fit) {
    const Eigen::Index k = fit.coefficients.size();
    fit.std_errors.resize(k);
    fit.t_stats.resize(k);
    fit.p_values.resize(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        fit.std_errors[j] = std::sqrt(std::max(0.0, fit.covariance(j, j)));
        fit.t_stats[j] = fit.coefficients[j] / fit.std_errors[j];
        fit.p_values[j] = student_t_two_sided_p(fit.t_stats[j], static_cast<double>(fit.df_resid));
    }
}

}  // namespace

DesignMatrix DesignMatrix::with_intercept(std::vector<std::string> names, const Eigen::MatrixXd& regressors,
                                          Eigen::VectorXd response) {
    DesignMatrix d;
    d.columns.reserve(names.size() + 1);
    d.columns.emplace_back(kIntercept);
    for (auto& n : names) d.columns.push_back(std::move(n));
    d.values.resize(regressors.rows(), regressors.cols() + 1);
    d.values.col(0).setOnes();
    d.values.rightCols(regressors.cols()) = regressors;
    d.response = std::move(response);
    return d;
}

std::optional<Eigen::Index> DesignMatrix::index_of(std::string_view name) const { return find_name(columns, name); }

void DesignMatrix::validate() const {
    if (static_cast<Eigen::Index>(columns.size()) != values.cols()) {
        throw DataError("design has " + std::to_string(values.cols()) + " columns but " +
                        std::to_string(columns.size()) + " names");
    }
    if (response.size() != values.rows()) {
        throw DataError("response length " + std::to_string(response.size()) + " does not match " +
                        std::to_string(values.rows()) + " design rows");
    }
    if (values.cols() == 0) throw DataError("design has no columns");
    if (values.rows() < values.cols() + 1) {
        throw DataError("need at least k + 1 = " + std::to_string(values.cols() + 1) + " observations, have " +
                        std::to_string(values.rows()));
    }
    std::set<std::string> seen;
    for (const auto& name : columns) {
        if (!seen.insert(name).second) throw DataError("duplicate design column '" + name + "'");
    }
    if (!values.allFinite()) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            if (!values.col(j).allFinite()) throw DataError("non-finite value in column '" + columns[j] + "'");
        }
    }
    if (!response.allFinite()) throw DataError("non-finite value in response");
}

std::optional<Eigen::Index> RegressionFit::index_of(std::string_view name) const { return find_name(names, name); }

std::optional<double> RegressionFit::coefficient(std::string_view name) const {
    auto j = index_of(name);
    if (!j) return std::nullopt;
    return coefficients[*j];
}

RegressionFit fit_ols(const DesignMatrix& design) {
    design.validate();
    const Eigen::Index n = design.rows();
    const Eigen::Index k = design.cols();

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(design.values);
    const Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();

    // X and R share singular values.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(r, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double smax = sv[0];
    const double smin = sv[k - 1];
    const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
    if (!(cond <= kMaxConditionNumber)) {
        const Eigen::VectorXd null_dir = svd.matrixV().col(k - 1).cwiseAbs();
        const double biggest = null_dir.maxCoeff();
        std::vector<std::string> offending;
        std::string listed;
        for (Eigen::Index j = 0; j < k; ++j) {
            if (null_dir[j] >= 0.1 * biggest) {
                offending.push_back(design.columns[j]);
                listed += (listed.empty() ? "" : ", ") + design.columns[j];
            }
        }
        throw SingularFitError("singular design (condition number " + std::to_string(cond) +
                                   "); near-collinear columns: " + listed,
                               std::move(offending));
    }

    RegressionFit fit;
    fit.names = design.columns;
    fit.n_obs = n;
    fit.df_resid = n - k;
    fit.condition_number = cond;
    fit.coefficients = qr.solve(design.response);
    fit.residuals = design.response - design.values * fit.coefficients;

    const double ssr = fit.residuals.squaredNorm();
    const double mean_y = design.response.mean();
    const double sst = (design.response.array() - mean_y).matrix().squaredNorm();
    fit.r_squared = sst > 0.0 ? 1.0 - ssr / sst : 0.0;
    fit.adj_r_squared =
        1.0 - (1.0 - fit.r_squared) * static_cast<double>(n - 1) / static_cast<double>(fit.df_resid);
    fit.sigma2 = ssr / static_cast<double>(fit.df_resid);

    const Eigen::MatrixXd r_inv =
        r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
    fit.covariance = fit.sigma2 * (r_inv * r_inv.transpose());
    fill_inference(fit);
    return fit;
}

StandardizedDesign standardize_features(const DesignMatrix& design) {
    StandardizedDesign out{design, {}};
    const Eigen::Index n = design.rows();
    if (n < 2) throw DataError("standardization needs at least two observations");
    for (Eigen::Index j = 0; j < design.cols(); ++j) {
        if (design.columns[j] == kIntercept) continue;
        const auto col = design.values.col(j);
        const double mean = col.mean();
        const double scale = std::sqrt((col.array() - mean).square().sum() / static_cast<double>(n - 1));
        const double max_abs = col.cwiseAbs().maxCoeff();
        if (!(scale > 1e-12 * max_abs)) {
            throw DataError("cannot standardize zero-variance column '" + design.columns[j] + "'");
        }
        out.design.values.col(j) = (col.array() - mean) / scale;
        out.transform.columns.push_back(design.columns[j]);
        out.transform.mean.conservativeResize(out.transform.mean.size() + 1);
        out.transform.scale.conservativeResize(out.transform.scale.size() + 1);
        out.transform.mean[out.transform.mean.size() - 1] = mean;
        out.transform.scale[out.transform.scale.size() - 1] = scale;
    }
    return out;
}

RegressionFit unstandardize(const RegressionFit& fit, const Standardization& transform) {
    const Eigen::Index k = fit.coefficients.size();
    const auto c = fit.index_of(kIntercept);
    if (!c) throw DataError("cannot unstandardize a fit without an intercept");

    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(k, k);
    for (std::size_t i = 0; i < transform.columns.size(); ++i) {
        const auto j = fit.index_of(transform.columns[i]);
        if (!j) throw DataError("fit has no column '" + transform.columns[i] + "'");
        const double s = transform.scale[static_cast<Eigen::Index>(i)];
        const double m = transform.mean[static_cast<Eigen::Index>(i)];
        a(*j, *j) = 1.0 / s;
        a(*c, *j) = -m / s;
    }
    RegressionFit raw = fit;
    raw.coefficients = a * fit.coefficients;
    raw.covariance = a * fit.covariance * a.transpose();
    fill_inference(raw);
    return raw;
}

double predict(const RegressionFit& fit, const std::map<std::string, double>& row) {
    double total = 0.0;
    for (std::size_t j = 0; j < fit.names.size(); ++j) {
        const double coef = fit.coefficients[static_cast<Eigen::Index>(j)];
        if (fit.names[j] == kIntercept) {
            total += coef;
            continue;
        }
        auto it = row.find(fit.names[j]);
        if (it == row.end()) throw DataError("prediction row lacks regressor '" + fit.names[j] + "'");
        total += coef * it->second;
    }
    return total;
}

double student_t_cdf(double t, double df) {
    if (std::isnan(t) || !(df > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
    const boost::math::students_t_distribution<double> dist(df);
    return boost::math::cdf(dist, t);
}

double student_t_two_sided_p(double t, double df) {
    if (std::isnan(t) || !(df > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    if (std::isinf(t)) return 0.0;
    const boost::math::students_t_distribution<double> dist(df);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

double student_t_critical(double level, double df) {
    const boost::math::students_t_distribution<double> dist(df);
    return boost::math::quantile(dist, 0.5 + level / 2.0);
}

}  // namespace cashfactor
