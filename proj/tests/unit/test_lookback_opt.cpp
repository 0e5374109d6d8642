#include <cmath>

#include <gtest/gtest.h>

#include "cashfactor/error.hpp"
#include "cashfactor/lookback_opt.hpp"
#include "test_support.hpp"

using namespace cashfactor;
using cashfactor::testing::Rng;

TEST(SharpeRatio, Examples) {
    const std::vector<double> r{0.02, 0.00, 0.04};
    EXPECT_NEAR(sharpe_ratio(r), 1.0, 1e-12);
    const std::vector<double> flat{0.01, 0.01, 0.01};
    EXPECT_THROW(sharpe_ratio(flat), UndefinedSharpeError);
    const std::vector<double> one{0.01};
    EXPECT_THROW(sharpe_ratio(one), DataError);
}

TEST(SharpeRatio, PositiveHomogeneity) {
    Rng rng(51);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> r;
        for (int i = 0; i < rng.integer(2, 100); ++i) r.push_back(rng.normal(0.005, 0.04));
        const double base = sharpe_ratio(r);
        const double c = std::pow(10.0, rng.uniform(-3, 3));
        for (double& v : r) v *= c;
        EXPECT_NEAR(sharpe_ratio(r), base, 1e-12 * std::max(1.0, std::abs(base)));
    }
}

TEST(BrentBounded, FindsInteriorAndBoundaryMinima) {
    auto [x, fx] = brent_bounded([](double v) { return (v - 6.0) * (v - 6.0); }, 1.0, 24.0, 1e-6);
    EXPECT_NEAR(x, 6.0, 1e-6);
    EXPECT_NEAR(fx, 0.0, 1e-11);
    std::tie(x, fx) = brent_bounded([](double v) { return v; }, 2.0, 5.0, 1e-8);
    EXPECT_NEAR(x, 2.0, 1e-6);
}

TEST(Powell, OneDimensionalQuadratic) {
    const std::vector<double> lo{1.0}, hi{24.0};
    const auto r = powell_minimize([](std::span<const double> x) { return (x[0] - 6.0) * (x[0] - 6.0); }, {12.0}, lo, hi);
    EXPECT_NEAR(r.x[0], 6.0, 1e-6);
    EXPECT_TRUE(r.converged);
}

TEST(Powell, SeparableQuadratic) {
    const std::vector<double> lo{-10.0, -10.0}, hi{10.0, 10.0};
    const auto r = powell_minimize(
        [](std::span<const double> x) { return (x[0] - 1.0) * (x[0] - 1.0) + 10.0 * (x[1] + 2.0) * (x[1] + 2.0); },
        {5.0, 5.0}, lo, hi);
    EXPECT_NEAR(r.x[0], 1.0, 1e-5);
    EXPECT_NEAR(r.x[1], -2.0, 1e-5);
    EXPECT_LE(r.iterations, 50);
}

TEST(Powell, ConstantObjectiveStopsAfterOneSweep) {
    const std::vector<double> lo{0.0, 0.0}, hi{10.0, 10.0};
    const auto r = powell_minimize([](std::span<const double>) { return 3.0; }, {4.0, 7.0}, lo, hi);
    EXPECT_EQ(r.x, (std::vector<double>{4.0, 7.0}));
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.iterations, 1);
}

TEST(Powell, RandomPositiveDefiniteQuadratics) {
    Rng rng(52);
    for (int rep = 0; rep < 30; ++rep) {
        const int n = rng.integer(1, 3);
        // A = B B' + 0.5 I, minimum at c.
        std::vector<std::vector<double>> b(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n)));
        for (auto& row : b) for (auto& v : row) v = rng.normal();
        std::vector<std::vector<double>> a(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                for (int k = 0; k < n; ++k) a[i][j] += b[i][k] * b[j][k];
            }
            a[i][i] += 0.5;
        }
        std::vector<double> c;
        for (int i = 0; i < n; ++i) c.push_back(rng.uniform(-3, 3));
        auto f = [&](std::span<const double> x) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) s += (x[i] - c[i]) * a[i][j] * (x[j] - c[j]);
            }
            return s;
        };
        const std::vector<double> lo(static_cast<std::size_t>(n), -20.0), hi(static_cast<std::size_t>(n), 20.0);
        PowellOptions options;
        options.ftol = 1e-14;
        options.xtol = 1e-10;
        const auto r = powell_minimize(f, std::vector<double>(static_cast<std::size_t>(n), 5.0), lo, hi, options);
        for (int i = 0; i < n; ++i) EXPECT_NEAR(r.x[i], c[i], 1e-5) << "rep " << rep;
        EXPECT_LE(r.iterations, 50);
    }
}

TEST(Powell, RespectsBoxAndRejectsNonFiniteStart) {
    const std::vector<double> lo{2.0}, hi{5.0};
    const auto r = powell_minimize([](std::span<const double> x) { return x[0] * x[0]; }, {4.0}, lo, hi);
    EXPECT_NEAR(r.x[0], 2.0, 1e-6);
    EXPECT_THROW(powell_minimize([](std::span<const double>) { return std::nan(""); }, {3.0}, lo, hi), DataError);
}

TEST(OptimizeLookback, SingletonRangeSkipsSearch) {
    int calls = 0;
    LookbackSearch search;
    search.min_lookback = search.max_lookback = 3;
    const auto r = optimize_lookback([&](int) { ++calls; return std::optional<double>(0.4); }, search);
    EXPECT_EQ(r.best_lookback, 3);
    EXPECT_EQ(calls, 1);
}

TEST(OptimizeLookback, TiesGoToSmallerLookback) {
    const auto r = optimize_lookback([](int l) { return std::optional<double>(l >= 4 && l <= 9 ? 1.0 : 0.5); });
    EXPECT_EQ(r.best_lookback, 4);
    EXPECT_TRUE(r.exhaustive);
    EXPECT_EQ(r.evaluations.size(), 24u);
}

TEST(OptimizeLookback, UndefinedSharpeEverywhereIsAnError) {
    EXPECT_THROW(optimize_lookback([](int) { return std::optional<double>(); }), UndefinedSharpeError);
    EXPECT_THROW(optimize_lookback([](int) -> std::optional<double> { throw UndefinedSharpeError("flat"); }),
                 UndefinedSharpeError);
}

TEST(OptimizeLookback, UndefinedLookbacksArePenalizedNotFatal) {
    const auto r = optimize_lookback([](int l) { return l < 5 ? std::nullopt : std::optional<double>(1.0 / l); });
    EXPECT_EQ(r.best_lookback, 5);
    for (const auto& e : r.evaluations) EXPECT_GE(e.lookback, 5);
}

TEST(OptimizeLookback, PlantedSixMonthSignal) {
    const auto world = cashfactor::testing::planted_lookback_world(53, 60, 96, 6);
    const auto& me = world.calendar.month_ends();
    const Date start = me[30], end = me.back();
    std::vector<std::optional<double>> sweep(25);
    for (int l = 1; l <= 24; ++l) sweep[static_cast<std::size_t>(l)] = cashfactor::testing::planted_sharpe(world, l, start, end);
    int argmax = 1;
    for (int l = 2; l <= 24; ++l) {
        if (*sweep[static_cast<std::size_t>(l)] > *sweep[static_cast<std::size_t>(argmax)]) argmax = l;
    }
    EXPECT_EQ(argmax, 6);
    const auto r = optimize_lookback([&](int l) { return cashfactor::testing::planted_sharpe(world, l, start, end); });
    EXPECT_EQ(r.best_lookback, argmax);
    EXPECT_NEAR(r.best_sharpe, *sweep[6], 1e-12);
    for (const auto& e : r.evaluations) EXPECT_LE(e.sharpe, r.best_sharpe + 1e-12);
}

TEST(OptimizeLookback, TrainingFirewall) {
    auto world = cashfactor::testing::planted_lookback_world(54, 40, 80, 6);
    const auto& me = world.calendar.month_ends();
    const Date start = me[26], train_end = me[55];
    auto objective = [&](const cashfactor::testing::PlantedLookbackWorld& w) {
        return [&w, start, train_end](int l) { return cashfactor::testing::planted_sharpe(w, l, start, train_end); };
    };
    const auto base = optimize_lookback(objective(world));
    Rng rng(55);
    for (auto& s : world.signals) {
        if (s.month_end > train_end) s.b_winsorized = rng.normal(0, 5);
    }
    for (auto& [sec, series] : world.returns) {
        for (auto& [d, r] : series) {
            if (d > train_end) r = rng.uniform(-0.4, 0.4);
        }
    }
    const auto again = optimize_lookback(objective(world));
    EXPECT_EQ(base.best_lookback, again.best_lookback);
    ASSERT_EQ(base.evaluations.size(), again.evaluations.size());
    for (std::size_t i = 0; i < base.evaluations.size(); ++i) {
        EXPECT_EQ(base.evaluations[i].sharpe, again.evaluations[i].sharpe);
    }
}
