#include <map>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cashfactor/backtester.hpp"
#include "cashfactor/cash_signal.hpp"
#include "cashfactor/config.hpp"
#include "cashfactor/error.hpp"
#include "cashfactor/lookback_opt.hpp"
#include "cashfactor/ols.hpp"
#include "cashfactor/pipeline.hpp"

namespace py = pybind11;
using namespace cashfactor;

namespace {

py::dict fit_to_dict(const RegressionFit& fit) {
    py::dict d;
    d["names"] = fit.names;
    d["coefficients"] = fit.coefficients;
    d["std_errors"] = fit.std_errors;
    d["t_stats"] = fit.t_stats;
    d["p_values"] = fit.p_values;
    d["r_squared"] = fit.r_squared;
    d["adj_r_squared"] = fit.adj_r_squared;
    d["sigma2"] = fit.sigma2;
    d["condition_number"] = fit.condition_number;
    d["n_obs"] = fit.n_obs;
    d["df_resid"] = fit.df_resid;
    return d;
}

RunConfig make_config(const std::string& config_path, const std::map<std::string, std::string>& overrides) {
    RunConfig config;
    if (!config_path.empty()) load_config_file(config, config_path);
    for (const auto& [key, value] : overrides) apply_setting(config, key, value);
    return config;
}

}  // namespace

PYBIND11_MODULE(_cashfactor, m) {
    m.doc() = "Cash-productivity factor backtester";

    // Later registrations are tried first, so the base class goes first.
    auto& base = py::register_exception<Error>(m, "CashfactorError");
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<DataError>(m, "DataError", base.ptr());
    py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

    m.def(
        "fit_ols",
        [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::optional<std::vector<std::string>> names) {
            std::vector<std::string> cols;
            if (names) {
                cols = *names;
            } else {
                for (Eigen::Index j = 0; j < x.cols(); ++j) cols.push_back("x" + std::to_string(j));
            }
            return fit_to_dict(fit_ols(DesignMatrix::with_intercept(cols, x, y)));
        },
        py::arg("x"), py::arg("y"), py::arg("names") = py::none(),
        "OLS of y on the columns of x plus an intercept named 'const'.");

    m.def("percentile", [](const std::vector<double>& v, double p) { return percentile(v, p); }, py::arg("values"),
          py::arg("p"));
    m.def("winsorize", [](const std::vector<double>& v, double lo, double hi) { return winsorize(v, lo, hi); },
          py::arg("values"), py::arg("low") = 1.0, py::arg("high") = 99.0);
    m.def("cumulative_returns", [](const std::vector<double>& r) { return cumulative_returns(r); },
          py::arg("monthly"));
    m.def("sharpe_ratio", [](const std::vector<double>& r) { return sharpe_ratio(r); }, py::arg("excess_returns"));
    m.def(
        "select_and_weight",
        [](const std::map<std::string, double>& avg) {
            std::map<std::string, double> out;
            for (const auto& h : select_and_weight(avg)) out[h.security_id] = h.weight;
            return out;
        },
        py::arg("average_signals"), "Weights proportional to the strictly positive averages.");

    m.def(
        "optimize_lookback",
        [](const std::function<std::optional<double>(int)>& sharpe_of, int min_lookback, int max_lookback) {
            LookbackSearch search;
            search.min_lookback = min_lookback;
            search.max_lookback = max_lookback;
            const auto r = optimize_lookback(sharpe_of, search);
            py::dict d;
            d["best_lookback"] = r.best_lookback;
            d["best_sharpe"] = r.best_sharpe;
            d["exhaustive"] = r.exhaustive;
            d["converged"] = r.converged;
            std::map<int, double> evaluations;
            for (const auto& e : r.evaluations) evaluations[e.lookback] = e.sharpe;
            d["evaluations"] = evaluations;
            return d;
        },
        py::arg("sharpe_of"), py::arg("min_lookback") = 1, py::arg("max_lookback") = 24);

    m.def(
        "run",
        [](const std::string& command, const std::string& config_path,
           const std::map<std::string, std::string>& overrides) {
            const auto config = make_config(config_path, overrides);
            py::gil_scoped_release release;
            if (command == "ingest") {
                cmd_ingest(config);
            } else if (command == "signal") {
                cmd_signal(config);
            } else if (command == "optimize") {
                cmd_optimize(config);
            } else if (command == "backtest") {
                cmd_backtest(config);
            } else if (command == "report") {
                cmd_report(config.output_dir, config.hist_bins);
            } else {
                throw ConfigError("unknown command '" + command + "'");
            }
            return config.output_dir;
        },
        py::arg("command"), py::arg("config") = "", py::arg("overrides") = std::map<std::string, std::string>{},
        "Runs one pipeline command and returns the output directory.");

    m.def("describe_defaults", &describe_defaults);
}
