#include <cmath>

#include <gtest/gtest.h>

#include "cashfactor/backtester.hpp"
#include "cashfactor/error.hpp"
#include "test_support.hpp"

using namespace cashfactor;
using cashfactor::testing::Rng;
using cashfactor::testing::weekday_calendar;
namespace oracle = cashfactor::testing::oracle;

namespace {

SignalRow signal(const std::string& sec, Date month_end, double b, std::uint32_t flags = kFlagNone) {
    SignalRow s;
    s.firm_id = "F" + sec;
    s.security_id = sec;
    s.month_end = month_end;
    s.b_raw = b;
    s.b_winsorized = b;
    s.flags = flags;
    return s;
}

struct Fixture {
    TradingCalendar calendar;
    std::vector<SignalRow> signals;
    ReturnPanel returns;
    std::map<Date, double> risk_free;
};

Fixture random_fixture(std::uint64_t seed, int firms, int months, double missing_rate = 0.0) {
    Rng rng(seed);
    Fixture f{weekday_calendar(Date::parse("2018-01-01"), Date::parse("2018-01-01").plus_days(31 * months - 20)), {},
              {}, {}};
    for (Date me : f.calendar.month_ends()) f.risk_free[me] = rng.uniform(0.0, 0.003);
    for (int i = 0; i < firms; ++i) {
        const std::string sec = std::to_string(100 + i);
        for (Date me : f.calendar.month_ends()) {
            if (rng.uniform(0, 1) >= 0.1) f.signals.push_back(signal(sec, me, rng.normal(0.01, 0.05)));
            if (rng.uniform(0, 1) >= missing_rate) f.returns[sec][me] = rng.normal(0.01, 0.08);
        }
    }
    return f;
}

BacktestConfig whole_period(const Fixture& f, int lookback) {
    BacktestConfig c;
    c.lookback = lookback;
    c.start = f.calendar.month_ends()[1];
    c.end = f.calendar.month_ends().back();
    return c;
}

}  // namespace

TEST(LookbackAverage, Examples) {
    const Date m1 = Date::parse("2020-01-31"), m2 = Date::parse("2020-02-28"), m3 = Date::parse("2020-03-31");
    const std::vector<SignalRow> rows{signal("A", m1, 0.1), signal("A", m2, 0.2), signal("A", m3, 0.3),
                                      signal("B", m1, 0.5), signal("B", m3, 0.7)};
    const SignalIndex index(rows);
    auto avg = lookback_average(index, 3, m3);
    ASSERT_EQ(avg.size(), 1u);  // B has 2 of 3 months
    EXPECT_NEAR(avg.at("A"), 0.2, 1e-15);

    avg = lookback_average(index, 1, m3);
    EXPECT_EQ(avg.at("A"), 0.3);
    EXPECT_EQ(avg.at("B"), 0.7);

    avg = lookback_average(index, 3, m3, 0.5);
    EXPECT_NEAR(avg.at("B"), 0.6, 1e-15);
    EXPECT_THROW(lookback_average(index, 0, m3), ConfigError);
}

TEST(LookbackAverage, FlaggedSignalsAreNotEligibleByDefault) {
    const Date m1 = Date::parse("2020-01-31");
    const std::vector<SignalRow> rows{signal("A", m1, 0.4, kFlagNegativeBase), signal("B", m1, 0.2)};
    EXPECT_EQ(lookback_average(SignalIndex(rows), 1, m1).size(), 1u);
    EXPECT_EQ(lookback_average(SignalIndex(rows, true), 1, m1).size(), 2u);
}

TEST(SelectAndWeight, Examples) {
    auto w = select_and_weight({{"A", 2}, {"B", 3}, {"C", 5}});
    ASSERT_EQ(w.size(), 3u);
    EXPECT_DOUBLE_EQ(w[0].weight, 0.2);
    EXPECT_DOUBLE_EQ(w[1].weight, 0.3);
    EXPECT_DOUBLE_EQ(w[2].weight, 0.5);

    w = select_and_weight({{"A", 1}, {"B", -1}});
    ASSERT_EQ(w.size(), 1u);
    EXPECT_EQ(w[0].security_id, "A");
    EXPECT_EQ(w[0].weight, 1.0);

    EXPECT_TRUE(select_and_weight({{"A", -1}, {"B", -2}, {"C", 0}}).empty());
}

TEST(SelectAndWeight, SimplexAndScaleInvariance) {
    Rng rng(31);
    for (int rep = 0; rep < 300; ++rep) {
        std::map<std::string, double> s;
        const int n = rng.integer(1, 40);
        for (int i = 0; i < n; ++i) s["S" + std::to_string(i)] = rng.normal(0, 1);
        const auto w = select_and_weight(s);
        double total = 0.0;
        for (const auto& h : w) {
            EXPECT_GT(h.weight, 0.0);
            EXPECT_GT(s.at(h.security_id), 0.0);
            total += h.weight;
        }
        std::size_t positives = 0;
        for (const auto& [id, v] : s) positives += v > 0.0;
        EXPECT_EQ(w.size(), positives);
        if (!w.empty()) EXPECT_NEAR(total, 1.0, 1e-12);

        const double c = std::pow(10.0, rng.uniform(-3, 3));
        std::map<std::string, double> scaled;
        for (const auto& [id, v] : s) scaled[id] = v * c;
        const auto ws = select_and_weight(scaled);
        ASSERT_EQ(ws.size(), w.size());
        for (std::size_t i = 0; i < w.size(); ++i) {
            EXPECT_EQ(ws[i].security_id, w[i].security_id);
            EXPECT_NEAR(ws[i].weight, w[i].weight, 1e-12);
        }
    }
}

TEST(PortfolioReturn, Examples) {
    const std::vector<Holding> h{{"A", 0.5}, {"B", 0.5}};
    EXPECT_NEAR(portfolio_return(h, {{"A", 0.10}, {"B", -0.02}}).value, 0.04, 1e-15);
    EXPECT_EQ(portfolio_return(std::vector<Holding>{}, {{"A", 0.10}}).value, 0.0);
    const auto missing = portfolio_return(h, {{"A", 0.10}});
    EXPECT_NEAR(missing.value, 0.05, 1e-15);
    ASSERT_EQ(missing.missing.size(), 1u);
    EXPECT_EQ(missing.missing[0], "B");
}

TEST(CumulativeReturns, Examples) {
    const std::vector<double> r{0.1, -0.1};
    const auto c = cumulative_returns(r);
    EXPECT_NEAR(c[0], 0.1, 1e-15);
    EXPECT_NEAR(c[1], -0.01, 1e-15);
    const std::vector<double> zeros(5, 0.0);
    for (double v : cumulative_returns(zeros)) EXPECT_EQ(v, 0.0);
    const std::vector<double> wipeout{0.1, -1.0};
    EXPECT_THROW(cumulative_returns(wipeout), DataError);
}

TEST(CumulativeReturns, MatchesProductOracleAndInverts) {
    Rng rng(32);
    std::vector<double> r;
    for (int i = 0; i < 100; ++i) r.push_back(rng.uniform(-0.5, 0.5));
    const auto c = cumulative_returns(r);
    const auto p = oracle::cumulative_product(r);
    for (std::size_t i = 0; i < r.size(); ++i) {
        EXPECT_NEAR(c[i], p[i], 1e-12 * std::max(1.0, std::abs(p[i])));
        const double back = i == 0 ? c[0] : (1.0 + c[i]) / (1.0 + c[i - 1]) - 1.0;
        EXPECT_NEAR(back, r[i], 1e-10);
    }
}

TEST(RunBacktest, SingleAlwaysPositiveFirmEarnsItsReturn) {
    const auto cal = weekday_calendar(Date::parse("2020-01-01"), Date::parse("2020-12-31"));
    std::vector<SignalRow> rows;
    ReturnPanel returns;
    Rng rng(33);
    for (Date me : cal.month_ends()) {
        rows.push_back(signal("A", me, rng.uniform(0.01, 0.2)));
        returns["A"][me] = rng.normal(0.01, 0.05);
    }
    BacktestConfig c;
    c.lookback = 2;
    c.start = Date::parse("2020-03-31");
    c.end = Date::parse("2020-12-31");
    const auto result = run_backtest(SignalIndex(rows), returns, {}, cal, c);
    ASSERT_EQ(result.months.size(), 10u);
    for (const auto& m : result.months) {
        EXPECT_EQ(m.portfolio_return, returns["A"][m.realization]);
        EXPECT_EQ(m.n_holdings, 1u);
        EXPECT_EQ(cal.next_month_end(m.formation), m.realization);
    }
}

TEST(RunBacktest, EmptyMonthsAndMissingReturns) {
    const auto cal = weekday_calendar(Date::parse("2020-01-01"), Date::parse("2020-04-30"));
    const auto& me = cal.month_ends();
    const std::vector<SignalRow> rows{signal("A", me[0], -0.1), signal("A", me[1], 0.2), signal("B", me[1], 0.2),
                                      signal("A", me[2], 0.1)};
    ReturnPanel returns{{"A", {{me[1], 0.03}, {me[2], 0.05}, {me[3], 0.02}}}, {"B", {{me[1], 0.04}}}};
    std::map<Date, double> rf{{me[1], 0.001}, {me[2], 0.002}, {me[3], 0.003}};
    BacktestConfig c;
    c.lookback = 1;
    c.start = me[1];
    c.end = me[3];
    Diagnostics diag;
    auto result = run_backtest(SignalIndex(rows), returns, rf, cal, c, &diag);
    ASSERT_EQ(result.months.size(), 3u);
    EXPECT_EQ(result.months[0].portfolio_return, 0.0);  // January: nothing positive
    EXPECT_EQ(result.months[0].n_holdings, 0u);
    EXPECT_NEAR(result.months[1].portfolio_return, 0.5 * 0.05, 1e-15);  // B has no March return
    EXPECT_EQ(result.months[1].missing_returns, 1u);
    EXPECT_EQ(result.missing_return_events, 1u);
    EXPECT_EQ(diag.count_of("missing_next_month_return"), 1u);
    EXPECT_EQ(result.months[2].portfolio_return, 0.02);

    c.empty_month = EmptyMonthPolicy::RiskFree;
    result = run_backtest(SignalIndex(rows), returns, rf, cal, c);
    EXPECT_EQ(result.months[0].portfolio_return, 0.001);
}

TEST(RunBacktest, PeriodOutsideCalendarIsAnError) {
    const auto f = random_fixture(34, 3, 6);
    BacktestConfig c = whole_period(f, 2);
    c.end = Date::parse("2030-01-31");
    EXPECT_THROW(run_backtest(SignalIndex(f.signals), f.returns, f.risk_free, f.calendar, c), DataError);
    c = whole_period(f, 2);
    c.start = c.end = f.calendar.month_ends().front();
    EXPECT_THROW(run_backtest(SignalIndex(f.signals), f.returns, f.risk_free, f.calendar, c), DataError);
}

TEST(RunBacktest, MatchesBruteForceTrace) {
    const auto f = random_fixture(35, 3, 12, 0.1);
    for (int lookback : {1, 2, 3, 6}) {
        const auto result =
            run_backtest(SignalIndex(f.signals), f.returns, f.risk_free, f.calendar, whole_period(f, lookback));
        const auto& me = f.calendar.month_ends();
        ASSERT_EQ(result.months.size(), me.size() - 1);
        std::vector<double> expected_returns;
        for (std::size_t t = 1; t < me.size(); ++t) {
            // Oracle: full-coverage mean over months t-L..t-1, positivity filter, proportional weights.
            std::map<std::string, double> avg;
            for (const auto& [sec, _] : f.returns) {
                double sum = 0.0;
                int n = 0;
                for (const auto& s : f.signals) {
                    const int age = me[t - 1].month_ordinal() - s.month_end.month_ordinal();
                    if (s.security_id == sec && age >= 0 && age < lookback) {
                        sum += s.b_winsorized;
                        ++n;
                    }
                }
                if (n == lookback) avg[sec] = sum / n;
            }
            double total = 0.0;
            for (const auto& [sec, a] : avg) total += a > 0 ? a : 0.0;
            double r = 0.0;
            std::size_t held = 0;
            const auto& snap = result.snapshots[t - 1];
            for (const auto& [sec, a] : avg) {
                if (a <= 0) continue;
                ASSERT_LT(held, snap.holdings.size());
                EXPECT_EQ(snap.holdings[held].security_id, sec);
                EXPECT_NEAR(snap.holdings[held].weight, a / total, 1e-15);
                ++held;
                auto it = f.returns.at(sec).find(me[t]);
                if (it != f.returns.at(sec).end()) r += a / total * it->second;
            }
            EXPECT_EQ(held, snap.holdings.size());
            EXPECT_NEAR(result.months[t - 1].portfolio_return, r, 1e-15);
            expected_returns.push_back(r);
        }
        const auto cum = oracle::cumulative_product(expected_returns);
        for (std::size_t i = 0; i < cum.size(); ++i) {
            EXPECT_NEAR(result.months[i].cumulative_return, cum[i], 1e-12);
        }
    }
}

TEST(RunBacktest, FutureMutationLeavesPastUnchanged) {
    const auto f = random_fixture(36, 5, 18);
    const auto base = run_backtest(SignalIndex(f.signals), f.returns, f.risk_free, f.calendar, whole_period(f, 3));
    Rng rng(37);
    for (int rep = 0; rep < 10; ++rep) {
        const Date t = f.calendar.month_ends()[static_cast<std::size_t>(rng.integer(2, 16))];
        auto mutated = f;
        for (auto& s : mutated.signals) {
            if (s.month_end > t) s.b_winsorized = rng.normal(0, 1);
        }
        for (auto& [sec, series] : mutated.returns) {
            for (auto& [d, r] : series) {
                if (d > t) r = rng.uniform(-0.5, 0.5);
            }
        }
        const auto again = run_backtest(SignalIndex(mutated.signals), mutated.returns, mutated.risk_free,
                                        mutated.calendar, whole_period(f, 3));
        for (std::size_t i = 0; i < base.months.size(); ++i) {
            if (base.months[i].realization > t) break;
            EXPECT_EQ(base.months[i].portfolio_return, again.months[i].portfolio_return);
            EXPECT_EQ(base.months[i].cumulative_return, again.months[i].cumulative_return);
            const auto& a = base.snapshots[i].holdings;
            const auto& b = again.snapshots[i].holdings;
            ASSERT_EQ(a.size(), b.size());
            for (std::size_t j = 0; j < a.size(); ++j) {
                EXPECT_EQ(a[j].security_id, b[j].security_id);
                EXPECT_EQ(a[j].weight, b[j].weight);
            }
        }
    }
}

TEST(ReturnPanel, SkipsMissingReturns) {
    MonthlyEquityRow a;
    a.security_id = "A";
    a.month_end = Date::parse("2020-01-31");
    a.monthly_return = 0.1;
    MonthlyEquityRow b = a;
    b.month_end = Date::parse("2020-02-28");
    b.monthly_return = std::nullopt;
    const std::vector<MonthlyEquityRow> rows{a, b};
    const auto panel = return_panel(rows);
    EXPECT_EQ(panel.at("A").size(), 1u);
}
