#pragma once

#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace cashfactor {

/// mean / sample standard deviation (n - 1), not annualized.
/// Throws DataError for fewer than two observations and UndefinedSharpeError
/// when the standard deviation is zero.
double sharpe_ratio(std::span<const double> excess_returns);

struct PowellOptions {
    double ftol = 1e-8;
    double xtol = 1e-6;
    int maxiter = 100;
};

struct PowellResult {
    std::vector<double> x;
    double fun = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

using Objective = std::function<double(std::span<const double>)>;

/// Powell's conjugate-direction method inside the box [lower, upper].
/// Each sweep line-minimizes along every direction with a bounded Brent
/// search (golden section plus parabolic steps) restricted to the part of the
/// line inside the box; the direction of largest decrease is replaced by the
/// sweep's net displacement when the usual extrapolation test allows it.
/// Stops when a sweep improves f by less than ftol (relative) or after
/// maxiter sweeps. Throws DataError if f(start) is not finite.
PowellResult powell_minimize(const Objective& objective, std::vector<double> start, std::span<const double> lower,
                             std::span<const double> upper, const PowellOptions& options = {});

/// Bounded scalar minimization of f on [a, b] (Brent). Returns (x, f(x)).
std::pair<double, double> brent_bounded(const std::function<double(double)>& f, double a, double b, double xtol,
                                        int max_evaluations = 500);

struct LookbackEvaluation {
    int lookback = 0;
    double sharpe = 0.0;
};

struct OptimizationResult {
    int best_lookback = 0;
    double best_sharpe = 0.0;
    /// Every lookback with a defined Sharpe ratio that was evaluated, sorted by L.
    std::vector<LookbackEvaluation> evaluations;
    bool converged = false;
    bool exhaustive = false;
    int powell_iterations = 0;
};

struct LookbackSearch {
    int min_lookback = 1;
    int max_lookback = 24;
    /// Ranges with at most this many integers are verified exhaustively.
    int exhaustive_limit = 32;
    PowellOptions powell;
};

/// Training Sharpe for a lookback; nullopt when undefined.
using SharpeOfLookback = std::function<std::optional<double>(int)>;

/// Maximizes Sharpe(L) over integer L in [min, max] by running Powell on the
/// continuous relaxation x -> -Sharpe(round(x)), then (for small ranges)
/// sweeping every integer so the reported L is the true argmax. Ties go to
/// the smaller L. Throws UndefinedSharpeError when no L has a defined Sharpe.
OptimizationResult optimize_lookback(const SharpeOfLookback& sharpe_of, const LookbackSearch& search = {});

}  // namespace cashfactor
