#include <cmath>

#include <gtest/gtest.h>

#include "cashfactor/calendar.hpp"
#include "cashfactor/csv.hpp"
#include "cashfactor/error.hpp"
#include "cashfactor/prices.hpp"
#include "test_support.hpp"

using namespace cashfactor;
using cashfactor::testing::Rng;
using cashfactor::testing::weekday_calendar;

namespace {

std::vector<Date> dates(std::initializer_list<const char*> iso) {
    std::vector<Date> out;
    for (const char* s : iso) out.push_back(Date::parse(s));
    return out;
}

DailyPriceBar bar(const std::string& id, const char* date, double price, std::optional<double> ret = std::nullopt,
                  double shares = 1000.0, double cfacpr = 1.0, double cfacshr = 1.0) {
    return DailyPriceBar{id, Date::parse(date), price, cfacpr, cfacshr, shares, ret};
}

}  // namespace

TEST(Date, ParsesStrictIsoAndOrdersMonths) {
    const Date d = Date::parse("2020-02-29");
    EXPECT_EQ(d.year(), 2020);
    EXPECT_EQ(d.month(), 2u);
    EXPECT_EQ(d.day(), 29u);
    EXPECT_EQ(d.iso(), "2020-02-29");
    EXPECT_EQ(Date::parse("2021-01-05").month_ordinal() - Date::parse("2020-12-31").month_ordinal(), 1);
    EXPECT_THROW(Date::parse("2021-02-29"), std::invalid_argument);
    EXPECT_THROW(Date::parse("2021-2-01"), std::invalid_argument);
    EXPECT_THROW(Date::parse("20210201"), std::invalid_argument);
}

TEST(TradingCalendar, MonthEndIsMaximumDayPerMonth) {
    const auto days = dates({"2020-01-30", "2020-01-31", "2020-02-27", "2020-02-28"});
    const auto cal = build_trading_calendar(days);
    EXPECT_EQ(cal.month_ends(), dates({"2020-01-31", "2020-02-28"}));
}

TEST(TradingCalendar, SingletonCalendar) {
    const auto days = dates({"2020-03-16"});
    EXPECT_EQ(build_trading_calendar(days).month_ends(), dates({"2020-03-16"}));
}

TEST(TradingCalendar, EmptyMonthIsAbsentAndNotBridged) {
    const auto days = dates({"2020-01-15", "2020-01-31", "2020-03-02", "2020-03-31"});
    const auto cal = build_trading_calendar(days);
    ASSERT_EQ(cal.month_ends().size(), 2u);
    EXPECT_FALSE(cal.previous_month_end(Date::parse("2020-03-31")).has_value());
    EXPECT_FALSE(cal.next_month_end(Date::parse("2020-01-31")).has_value());
}

TEST(TradingCalendar, RejectsEmptyUnsortedAndDuplicateInput) {
    EXPECT_THROW(build_trading_calendar(std::vector<Date>{}), CalendarError);
    EXPECT_THROW(build_trading_calendar(dates({"2020-01-02", "2020-01-01"})), CalendarError);
    EXPECT_THROW(build_trading_calendar(dates({"2020-01-02", "2020-01-02"})), CalendarError);
}

TEST(TradingCalendar, InvariantsHoldOnRandomCalendars) {
    Rng rng(7);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<Date> days;
        Date d = Date::parse("2015-01-01");
        for (int i = 0; i < 400; ++i) {
            d = d.plus_days(rng.integer(1, 4));
            days.push_back(d);
        }
        const auto cal = build_trading_calendar(days);
        std::map<int, Date> max_day;
        for (Date x : days) max_day[x.month_ordinal()] = std::max(max_day[x.month_ordinal()], x);
        ASSERT_EQ(cal.month_ends().size(), max_day.size());
        for (Date me : cal.month_ends()) {
            EXPECT_TRUE(cal.is_trading_day(me));
            EXPECT_EQ(max_day.at(me.month_ordinal()), me);
        }
        for (std::size_t i = 1; i < cal.month_ends().size(); ++i) {
            EXPECT_LT(cal.month_ends()[i - 1].month_ordinal(), cal.month_ends()[i].month_ordinal());
        }
    }
}

TEST(AdjustPrices, SubstitutesFactors) {
    const std::vector<DailyPriceBar> bars{bar("A", "2020-01-02", 100.0, std::nullopt, 1000.0, 2.0, 2.0)};
    const auto adj = adjust_prices(bars);
    ASSERT_EQ(adj.size(), 1u);
    EXPECT_DOUBLE_EQ(adj[0].adj_price, 50.0);
    EXPECT_DOUBLE_EQ(adj[0].adj_shares, 2000.0);
    EXPECT_DOUBLE_EQ(adj[0].market_cap, 100000.0);
}

TEST(AdjustPrices, UnitFactorsPassThrough) {
    const std::vector<DailyPriceBar> bars{bar("A", "2020-01-02", 37.25, std::nullopt, 512.0)};
    const auto adj = adjust_prices(bars);
    EXPECT_EQ(adj[0].adj_price, 37.25);
    EXPECT_EQ(adj[0].adj_shares, 512.0);
}

TEST(AdjustPrices, RejectsNonpositiveFactorWithDiagnostic) {
    Diagnostics diag;
    const std::vector<DailyPriceBar> bars{bar("A", "2020-01-02", 10.0, std::nullopt, 1.0, 0.0, 1.0),
                                          bar("A", "2020-01-03", 10.0, std::nullopt, 1.0, 1.0, -1.0),
                                          bar("A", "2020-01-06", 10.0)};
    const auto adj = adjust_prices(bars, &diag);
    ASSERT_EQ(adj.size(), 1u);
    EXPECT_EQ(adj[0].date, Date::parse("2020-01-06"));
    EXPECT_EQ(diag.count_of("bad_adjustment_factor"), 2u);
}

TEST(AdjustPrices, SplitLeavesAdjustedSeriesContinuous) {
    // 2:1 split on 2020-01-06. Raw prices halve and share counts double.
    const std::vector<DailyPriceBar> bars{bar("A", "2020-01-02", 100.0, std::nullopt, 1000.0, 2.0, 2.0),
                                          bar("A", "2020-01-03", 102.0, std::nullopt, 1000.0, 2.0, 2.0),
                                          bar("A", "2020-01-06", 51.5, std::nullopt, 2000.0, 1.0, 1.0),
                                          bar("A", "2020-01-07", 52.0, std::nullopt, 2000.0, 1.0, 1.0)};
    const auto adj = adjust_prices(bars);
    const std::vector<double> expected_price{50.0, 51.0, 51.5, 52.0};
    for (std::size_t i = 0; i < adj.size(); ++i) {
        EXPECT_DOUBLE_EQ(adj[i].adj_price, expected_price[i]);
        EXPECT_DOUBLE_EQ(adj[i].adj_shares, 2000.0);
    }
    EXPECT_NEAR(adj[2].adj_price / adj[1].adj_price - 1.0, 0.5 / 51.0, 1e-15);
}

TEST(AdjustPrices, MarketCapInvariantUnderSyntheticSplits) {
    Rng rng(11);
    for (int i = 0; i < 500; ++i) {
        const double p = rng.uniform(1.0, 500.0);
        const double cp = rng.uniform(0.1, 10.0);
        const double s = rng.uniform(1.0, 1e6);
        const double cs = rng.uniform(0.1, 10.0);
        const double k = rng.uniform(0.01, 100.0);
        const std::vector<DailyPriceBar> a{bar("A", "2020-01-02", p, std::nullopt, s, cp, cs)};
        const std::vector<DailyPriceBar> b{bar("A", "2020-01-02", p / k, std::nullopt, s * k, cp / k, cs / k)};
        const double m1 = adjust_prices(a)[0].market_cap;
        const double m2 = adjust_prices(b)[0].market_cap;
        EXPECT_NEAR(m1, m2, 1e-12 * m1);
        const auto adj = adjust_prices(a)[0];
        EXPECT_NEAR(adj.market_cap, adj.adj_price * adj.adj_shares, 1e-12 * adj.market_cap);
    }
}

TEST(CompoundMonthlyReturns, Examples) {
    const auto cal = weekday_calendar(Date::parse("2020-01-01"), Date::parse("2020-03-31"));
    const std::vector<DatedReturn> two{{Date::parse("2020-01-02"), 0.01}, {Date::parse("2020-01-03"), 0.01}};
    auto m = compound_monthly_returns(two, cal);
    ASSERT_EQ(m.size(), 1u);
    EXPECT_NEAR(m[0].value, 1.01 * 1.01 - 1.0, 1e-15);
    EXPECT_EQ(m[0].month_end, Date::parse("2020-01-31"));

    const std::vector<DatedReturn> up_down{{Date::parse("2020-02-03"), 0.10}, {Date::parse("2020-02-04"), -0.10}};
    m = compound_monthly_returns(up_down, cal);
    ASSERT_EQ(m.size(), 1u);
    EXPECT_NEAR(m[0].value, -0.01, 1e-15);
    // No observations in January or March: those months are missing, not zero.
    EXPECT_EQ(m[0].month_end, Date::parse("2020-02-28"));
}

TEST(CompoundMonthlyReturns, RejectsTotalLoss) {
    const auto cal = weekday_calendar(Date::parse("2020-01-01"), Date::parse("2020-01-31"));
    Diagnostics diag;
    const std::vector<DatedReturn> r{{Date::parse("2020-01-02"), -1.0}, {Date::parse("2020-01-03"), 0.02}};
    const auto m = compound_monthly_returns(r, cal, &diag);
    ASSERT_EQ(m.size(), 1u);
    EXPECT_NEAR(m[0].value, 0.02, 1e-15);
    EXPECT_EQ(diag.count_of("invalid_daily_return"), 1u);
}

TEST(CompoundMonthlyReturns, ConstantReturnMatchesClosedForm) {
    const auto cal = weekday_calendar(Date::parse("2020-01-01"), Date::parse("2020-01-31"));
    for (double r : {-0.03, -0.001, 0.0, 0.0005, 0.02}) {
        std::vector<DatedReturn> daily;
        for (Date d : cal.days()) daily.push_back({d, r});
        const auto m = compound_monthly_returns(daily, cal);
        EXPECT_NEAR(m[0].value, std::pow(1.0 + r, static_cast<double>(cal.days().size())) - 1.0, 1e-12);
    }
}

TEST(SampleMonthEnd, PriceChangeFallback) {
    const auto cal = weekday_calendar(Date::parse("2020-01-01"), Date::parse("2020-02-29"));
    const std::vector<DailyPriceBar> bars{bar("A", "2020-01-31", 50.0), bar("A", "2020-02-28", 55.0)};
    const auto rows = build_monthly_equity(bars, cal);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_FALSE(rows[0].monthly_return.has_value());
    EXPECT_NEAR(*rows[1].monthly_return, 0.10, 1e-15);
    EXPECT_EQ(rows[1].return_source, ReturnSource::PriceChange);
}

TEST(SampleMonthEnd, NoRowWithoutMonthEndPrice) {
    const auto cal = weekday_calendar(Date::parse("2020-01-01"), Date::parse("2020-02-29"));
    const std::vector<DailyPriceBar> bars{bar("A", "2020-01-30", 50.0), bar("A", "2020-02-28", 55.0)};
    const auto rows = build_monthly_equity(bars, cal);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].month_end, Date::parse("2020-02-28"));
    EXPECT_FALSE(rows[0].monthly_return.has_value());
}

TEST(SampleMonthEnd, CompoundedAndPriceDerivedAgreeOnCleanData) {
    const auto cal = weekday_calendar(Date::parse("2019-12-01"), Date::parse("2020-06-30"));
    Rng rng(3);
    std::vector<DailyPriceBar> daily;
    std::vector<DailyPriceBar> month_end_only;
    double price = 40.0;
    bool first = true;
    for (Date d : cal.days()) {
        const double r = rng.normal(0.0005, 0.02);
        if (!first) price *= 1.0 + r;
        daily.push_back(bar("A", d.iso().c_str(), price, first ? std::nullopt : std::optional<double>(r)));
        if (cal.is_month_end(d)) month_end_only.push_back(bar("A", d.iso().c_str(), price));
        first = false;
    }
    const auto compounded = build_monthly_equity(daily, cal);
    const auto from_price = build_monthly_equity(month_end_only, cal);
    ASSERT_EQ(compounded.size(), from_price.size());
    for (std::size_t i = 1; i < compounded.size(); ++i) {
        ASSERT_EQ(compounded[i].return_source, ReturnSource::Compounded);
        ASSERT_EQ(from_price[i].return_source, ReturnSource::PriceChange);
        EXPECT_NEAR(*compounded[i].monthly_return, *from_price[i].monthly_return, 1e-12);
    }
}

TEST(SampleMonthEnd, PartialDailyReturnsFallBackToPriceChange) {
    const auto cal = weekday_calendar(Date::parse("2020-01-01"), Date::parse("2020-02-29"));
    const std::vector<DailyPriceBar> bars{bar("A", "2020-01-31", 50.0, 0.0), bar("A", "2020-02-27", 52.0, 0.04),
                                          bar("A", "2020-02-28", 55.0)};
    const auto rows = build_monthly_equity(bars, cal);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[1].return_source, ReturnSource::PriceChange);
    EXPECT_NEAR(*rows[1].monthly_return, 0.10, 1e-15);
}

TEST(SampleMonthEnd, KeysAreUniqueAfterDuplicateInput) {
    const auto cal = weekday_calendar(Date::parse("2020-01-01"), Date::parse("2020-02-29"));
    Diagnostics diag;
    const std::vector<DailyPriceBar> bars{bar("A", "2020-01-31", 50.0), bar("A", "2020-02-28", 54.0),
                                          bar("A", "2020-02-28", 55.0)};
    const auto rows = build_monthly_equity(bars, cal, &diag);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[1].adj_price, 55.0);
    EXPECT_EQ(diag.count_of("duplicate_bar"), 1u);
}

TEST(PricesCsv, NegativePricesAreAbsoluteValuedAndCounted) {
    cashfactor::testing::TempDir dir("prices");
    const auto path = dir.path() / "prices.csv";
    cashfactor::testing::write_text(path,
                                    "permno,date,prc,ret,shrout,cfacpr,cfacshr\n"
                                    "1,2020-01-31,-12.5,,100,1,1\n"
                                    "1,2020-02-28,13,0.04,100,1,1\n");
    Diagnostics diag;
    const auto bars = read_prices_csv(path, &diag);
    ASSERT_EQ(bars.size(), 2u);
    EXPECT_EQ(*bars[0].raw_price, 12.5);
    EXPECT_FALSE(bars[0].daily_return.has_value());
    EXPECT_EQ(diag.count_of("negative_price"), 1u);
}

TEST(PricesCsv, SchemaErrorNamesFileLineAndColumn) {
    cashfactor::testing::TempDir dir("prices_bad");
    const auto path = dir.path() / "prices.csv";
    cashfactor::testing::write_text(path,
                                    "permno,date,prc,ret,shrout,cfacpr,cfacshr\n"
                                    "1,2020-01-31,12.5,,100,1,1\n"
                                    "1,2020-02-28,abc,,100,1,1\n");
    try {
        read_prices_csv(path);
        FAIL() << "expected a schema error";
    } catch (const SchemaError& e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_EQ(e.column(), "prc");
        EXPECT_NE(e.file().find("prices.csv"), std::string::npos);
    }
    cashfactor::testing::write_text(path, "permno,date,prc\n1,2020-01-31,1\n");
    EXPECT_THROW(read_prices_csv(path), SchemaError);
}

TEST(Csv, NumbersRoundTripWithSeventeenDigits) {
    Rng rng(5);
    for (int i = 0; i < 2000; ++i) {
        const double v = rng.normal() * std::pow(10.0, rng.integer(-12, 12));
        EXPECT_EQ(std::stod(format_number(v)), v);
    }
    EXPECT_EQ(format_number(std::nan("")), "");
    EXPECT_EQ(format_number(std::optional<double>{}), "");
}
