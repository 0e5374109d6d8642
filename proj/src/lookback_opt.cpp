#include "cashfactor/lookback_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "cashfactor/diagnostics.hpp"
#include "cashfactor/error.hpp"

namespace cashfactor {

double sharpe_ratio(std::span<const double> excess_returns) {
    const std::size_t n = excess_returns.size();
    if (n < 2) throw DataError("Sharpe ratio needs at least two observations");
    const double mean = std::accumulate(excess_returns.begin(), excess_returns.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double r : excess_returns) ss += (r - mean) * (r - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0)) throw UndefinedSharpeError("Sharpe ratio undefined: zero return variance");
    return mean / sd;
}

std::pair<double, double> brent_bounded(const std::function<double(double)>& f, double a, double b, double xtol,
                                        int max_evaluations) {
    const double sqrt_eps = std::sqrt(std::numeric_limits<double>::epsilon());
    const double golden = 0.5 * (3.0 - std::sqrt(5.0));

    double fulc = a + golden * (b - a);
    double nfc = fulc;
    double xf = fulc;
    double rat = 0.0;
    double e = 0.0;
    double fx = f(xf);
    int evaluations = 1;
    double ffulc = fx;
    double fnfc = fx;
    double xm = 0.5 * (a + b);
    double tol1 = sqrt_eps * std::abs(xf) + xtol / 3.0;
    double tol2 = 2.0 * tol1;

    while (std::abs(xf - xm) > tol2 - 0.5 * (b - a)) {
        bool golden_step = true;
        if (std::abs(e) > tol1) {
            // Try a parabola through the three best points.
            golden_step = false;
            double r = (xf - nfc) * (fx - ffulc);
            double q = (xf - fulc) * (fx - fnfc);
            double p = (xf - fulc) * q - (xf - nfc) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p;
            q = std::abs(q);
            r = e;
            e = rat;
            if (std::abs(p) < std::abs(0.5 * q * r) && p > q * (a - xf) && p < q * (b - xf)) {
                rat = p / q;
                const double x = xf + rat;
                if ((x - a) < tol2 || (b - x) < tol2) {
                    rat = xm - xf >= 0.0 ? tol1 : -tol1;
                }
            } else {
                golden_step = true;
            }
        }
        if (golden_step) {
            e = xf >= xm ? a - xf : b - xf;
            rat = golden * e;
        }
        const double step = rat >= 0.0 ? std::max(std::abs(rat), tol1) : -std::max(std::abs(rat), tol1);
        const double x = xf + step;
        const double fu = f(x);
        ++evaluations;

        if (fu <= fx) {
            if (x >= xf) {
                a = xf;
            } else {
                b = xf;
            }
            fulc = nfc;
            ffulc = fnfc;
            nfc = xf;
            fnfc = fx;
            xf = x;
            fx = fu;
        } else {
            if (x < xf) {
                a = x;
            } else {
                b = x;
            }
            if (fu <= fnfc || nfc == xf) {
                fulc = nfc;
                ffulc = fnfc;
                nfc = x;
                fnfc = fu;
            } else if (fu <= ffulc || fulc == xf || fulc == nfc) {
                fulc = x;
                ffulc = fu;
            }
        }
        xm = 0.5 * (a + b);
        tol1 = sqrt_eps * std::abs(xf) + xtol / 3.0;
        tol2 = 2.0 * tol1;
        if (evaluations >= max_evaluations) break;
    }
    return {xf, fx};
}

namespace {

/// Parameter interval [tmin, tmax] keeping x + t d inside the box.
std::pair<double, double> line_interval(const std::vector<double>& x, const std::vector<double>& d,
                                        std::span<const double> lower, std::span<const double> upper) {
    double tmin = -std::numeric_limits<double>::infinity();
    double tmax = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (d[i] == 0.0) continue;
        const double t1 = (lower[i] - x[i]) / d[i];
        const double t2 = (upper[i] - x[i]) / d[i];
        tmin = std::max(tmin, std::min(t1, t2));
        tmax = std::min(tmax, std::max(t1, t2));
    }
    return {std::min(tmin, 0.0), std::max(tmax, 0.0)};
}

}  // namespace

PowellResult powell_minimize(const Objective& objective, std::vector<double> start, std::span<const double> lower,
                             std::span<const double> upper, const PowellOptions& options) {
    const std::size_t n = start.size();
    if (n == 0 || lower.size() != n || upper.size() != n) {
        throw DataError("powell_minimize: start and bounds must have the same nonzero dimension");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!(lower[i] <= upper[i])) throw DataError("powell_minimize: lower bound above upper bound");
        start[i] = std::clamp(start[i], lower[i], upper[i]);
    }

    PowellResult result;
    auto f = [&](const std::vector<double>& x) {
        ++result.evaluations;
        return objective(x);
    };

    std::vector<double> x = start;
    double fval = f(x);
    if (!std::isfinite(fval)) throw DataError("powell_minimize: objective is not finite at the start point");

    std::vector<std::vector<double>> directions(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) directions[i][i] = 1.0;

    // Minimizes along d from x; moves only on strict improvement. Returns the
    // displacement actually taken.
    auto line_search = [&](std::vector<double>& d) {
        const auto [tmin, tmax] = line_interval(x, d, lower, upper);
        if (tmax - tmin <= 0.0) {
            std::fill(d.begin(), d.end(), 0.0);
            return;
        }
        std::vector<double> trial(n);
        auto phi = [&](double t) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = std::clamp(x[i] + t * d[i], lower[i], upper[i]);
            return f(trial);
        };
        const auto [t, ft] = brent_bounded(phi, tmin, tmax, options.xtol);
        if (ft < fval) {
            for (std::size_t i = 0; i < n; ++i) {
                const double moved = std::clamp(x[i] + t * d[i], lower[i], upper[i]);
                d[i] = moved - x[i];
                x[i] = moved;
            }
            fval = ft;
        } else {
            std::fill(d.begin(), d.end(), 0.0);
        }
    };

    while (true) {
        const double f_start = fval;
        const std::vector<double> x_start = x;
        std::size_t biggest = 0;
        double biggest_drop = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> d = directions[i];
            const double before = fval;
            line_search(d);
            if (before - fval > biggest_drop) {
                biggest_drop = before - fval;
                biggest = i;
            }
        }
        ++result.iterations;
        if (2.0 * (f_start - fval) <= options.ftol * (std::abs(f_start) + std::abs(fval)) + 1e-20) {
            result.converged = true;
            break;
        }
        if (result.iterations >= options.maxiter) break;

        std::vector<double> net(n);
        std::vector<double> extrapolated(n);
        for (std::size_t i = 0; i < n; ++i) {
            net[i] = x[i] - x_start[i];
            extrapolated[i] = std::clamp(x[i] + net[i], lower[i], upper[i]);
        }
        const double f_extra = f(extrapolated);
        if (f_start > f_extra) {
            double t = 2.0 * (f_start + f_extra - 2.0 * fval);
            double tmp = f_start - fval - biggest_drop;
            t *= tmp * tmp;
            tmp = f_start - f_extra;
            t -= biggest_drop * tmp * tmp;
            if (t < 0.0) {
                line_search(net);
                if (std::any_of(net.begin(), net.end(), [](double v) { return v != 0.0; })) {
                    directions[biggest] = directions.back();
                    directions.back() = net;
                }
            }
        }
    }
    result.x = x;
    result.fun = fval;
    return result;
}

OptimizationResult optimize_lookback(const SharpeOfLookback& sharpe_of, const LookbackSearch& search) {
    if (search.min_lookback < 1 || search.max_lookback < search.min_lookback) {
        throw ConfigError("lookback bounds must satisfy 1 <= min <= max");
    }
    std::map<int, std::optional<double>> cache;
    auto evaluate = [&](int lookback) -> std::optional<double> {
        auto it = cache.find(lookback);
        if (it != cache.end()) return it->second;
        std::optional<double> value;
        try {
            value = sharpe_of(lookback);
        } catch (const NumericalError& e) {
            logger().debug("lookback {}: {}", lookback, e.what());
        }
        if (value && !std::isfinite(*value)) value.reset();
        cache.emplace(lookback, value);
        return value;
    };

    OptimizationResult result;
    if (search.min_lookback == search.max_lookback) {
        evaluate(search.min_lookback);
        result.converged = true;
        result.exhaustive = true;
    } else {
        // Undefined Sharpe ratios get a large finite penalty so Powell can keep going.
        constexpr double kPenalty = 1e6;
        const double lo = search.min_lookback;
        const double hi = search.max_lookback;
        auto objective = [&](std::span<const double> x) {
            const int lookback = static_cast<int>(std::clamp(std::lround(x[0]), static_cast<long>(search.min_lookback),
                                                             static_cast<long>(search.max_lookback)));
            const auto s = evaluate(lookback);
            return s ? -*s : kPenalty;
        };
        const std::vector<double> lower{lo};
        const std::vector<double> upper{hi};
        const auto powell =
            powell_minimize(objective, {std::round(0.5 * (lo + hi))}, lower, upper, search.powell);
        result.converged = powell.converged;
        result.powell_iterations = powell.iterations;

        if (search.max_lookback - search.min_lookback + 1 <= search.exhaustive_limit) {
            for (int lookback = search.min_lookback; lookback <= search.max_lookback; ++lookback) evaluate(lookback);
            result.exhaustive = true;
        }
    }

    for (const auto& [lookback, sharpe] : cache) {
        if (sharpe) result.evaluations.push_back({lookback, *sharpe});
    }
    if (result.evaluations.empty()) {
        throw UndefinedSharpeError("no lookback in [" + std::to_string(search.min_lookback) + ", " +
                                   std::to_string(search.max_lookback) + "] has a defined training Sharpe ratio");
    }
    result.best_lookback = result.evaluations.front().lookback;
    result.best_sharpe = result.evaluations.front().sharpe;
    for (const auto& e : result.evaluations) {
        if (e.sharpe > result.best_sharpe) {
            result.best_sharpe = e.sharpe;
            result.best_lookback = e.lookback;
        }
    }
    return result;
}

}  // namespace cashfactor
