#include "cashfactor/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "cashfactor/csv.hpp"
#include "cashfactor/error.hpp"

namespace cashfactor {

namespace {

nlohmann::json missing_field_counts(const std::filesystem::path& path) {
    const auto table = CsvTable::read(path, {});
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& column : table.header()) {
        std::size_t missing = 0;
        for (const auto& row : table.rows()) missing += row.empty(column) ? 1 : 0;
        counts[column] = missing;
    }
    return {{"rows", table.rows().size()}, {"missing", counts}};
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << content;
    if (!out) throw DataError("failed writing " + path.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& value) {
    write_file(path, value.dump(2) + "\n");
}

std::filesystem::path prepare_output(const RunConfig& config) {
    std::error_code ec;
    std::filesystem::create_directories(config.output_dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + config.output_dir.string() + ": " + ec.message());
    return config.output_dir;
}

Date last_month_end(const IngestResult& data) { return data.calendar.month_ends().back(); }

std::string panel_csv(std::span<const FirmMonthRow> panel) {
    std::ostringstream out;
    std::vector<std::string> header{"gvkey",       "permno",        "month_end",          "monthly_return",
                                    "risk_free",   "excess_return", "market_cap",         "lagged_market_cap",
                                    "cash",        "lagged_cash",   "total_debt",         "lagged_total_debt",
                                    "leverage",    "rdq"};
    for (const char* name : kRegressorNames) header.emplace_back(name);
    write_csv_line(out, header);
    for (const auto& r : panel) {
        std::vector<std::string> fields{r.firm_id,
                                        r.security_id,
                                        r.month_end.iso(),
                                        format_number(r.monthly_return),
                                        format_number(r.risk_free),
                                        format_number(r.excess_return),
                                        format_number(r.market_cap),
                                        format_number(r.lagged_market_cap),
                                        format_number(r.fundamentals.cash_holdings),
                                        format_number(r.lagged_fundamentals.cash_holdings),
                                        format_number(r.fundamentals.total_debt),
                                        format_number(r.lagged_fundamentals.total_debt),
                                        format_number(r.leverage),
                                        r.filing_report_date.iso()};
        for (double v : r.x) fields.push_back(format_number(v));
        write_csv_line(out, fields);
    }
    return out.str();
}

std::string signals_csv(const SignalSeries& signals) {
    std::ostringstream out;
    write_csv_line(out, {"gvkey", "permno", "month_end", "marginal_cash_value", "avg_cash_value", "b_raw",
                         "b_winsorized", "flags"});
    for (const auto& s : signals.rows) {
        write_csv_line(out, {s.firm_id, s.security_id, s.month_end.iso(), format_number(s.marginal_cash_value),
                             format_number(s.avg_cash_value), format_number(s.b_raw), format_number(s.b_winsorized),
                             std::to_string(s.flags)});
    }
    return out.str();
}

nlohmann::json fits_json(const SignalSeries& signals) {
    nlohmann::json fits = nlohmann::json::array();
    for (const auto& f : signals.fits) {
        fits.push_back({{"as_of", f.as_of.iso()}, {"n_obs", f.n_obs}, {"r_squared", f.r_squared}, {"dropped", f.dropped}});
    }
    return fits;
}

std::string returns_csv(const BacktestResult& result) {
    std::ostringstream out;
    write_csv_line(out, {"month_end", "portfolio_return", "cumulative_return", "n_holdings"});
    for (const auto& m : result.months) {
        write_csv_line(out, {m.realization.iso(), format_number(m.portfolio_return), format_number(m.cumulative_return),
                             std::to_string(m.n_holdings)});
    }
    return out.str();
}

std::string holdings_csv(const BacktestResult& result) {
    std::ostringstream out;
    write_csv_line(out, {"month_end", "permno", "weight"});
    for (const auto& snap : result.snapshots) {
        for (const auto& h : snap.holdings) {
            write_csv_line(out, {snap.month_end.iso(), h.security_id, format_number(h.weight)});
        }
    }
    return out.str();
}

nlohmann::json optimization_json(const OptimizationResult& opt, const RunConfig& config) {
    nlohmann::json evals = nlohmann::json::array();
    for (const auto& e : opt.evaluations) evals.push_back({{"L", e.lookback}, {"sharpe", e.sharpe}});
    return {{"best_L", opt.best_lookback},
            {"best_sharpe", opt.best_sharpe},
            {"converged", opt.converged},
            {"exhaustive_verification", opt.exhaustive},
            {"powell_iterations", opt.powell_iterations},
            {"bounds", {config.search.min_lookback, config.search.max_lookback}},
            {"train_start", config.train_start.iso()},
            {"train_end", config.train_end.iso()},
            {"evaluations", evals}};
}

/// Market benchmark plus any configured benchmark series, all monthly.
std::vector<NamedSeries> benchmark_series(const IngestResult& data) {
    std::vector<NamedSeries> out;
    NamedSeries market{"market", {}};
    for (const auto& f : data.factors) market.values.emplace(f.month_end, f.mktrf + f.rf);
    out.push_back(std::move(market));
    for (const auto& b : data.benchmarks) out.push_back(b);
    return out;
}

std::string benchmarks_monthly_csv(const std::map<Date, double>& risk_free, std::span<const NamedSeries> benchmarks) {
    std::ostringstream out;
    std::vector<std::string> header{"month_end", "risk_free"};
    for (const auto& b : benchmarks) header.push_back(b.name);
    write_csv_line(out, header);
    for (const auto& [month, rf] : risk_free) {
        std::vector<std::string> fields{month.iso(), format_number(rf)};
        for (const auto& b : benchmarks) {
            auto it = b.values.find(month);
            fields.push_back(it == b.values.end() ? std::string() : format_number(it->second));
        }
        write_csv_line(out, fields);
    }
    return out.str();
}

struct Analysis {
    SignalSeries signals;
    int lookback = 0;
    std::optional<OptimizationResult> optimization;
};

Analysis analyse(const IngestResult& data, const RunConfig& config, bool need_lookback) {
    Analysis a;
    Diagnostics diag;
    a.signals = compute_signal_series(data.panel, data.calendar, config.signal, &diag);
    if (!need_lookback) return a;
    if (config.lookback) {
        a.lookback = *config.lookback;
    } else {
        a.optimization = optimize_on_training(data, a.signals, config);
        a.lookback = a.optimization->best_lookback;
    }
    return a;
}

}  // namespace

IngestResult run_ingest(const RunConfig& config) {
    validate(config);
    IngestResult data;
    Diagnostics& diag = data.diagnostics;

    auto bars = read_prices_csv(config.data.prices, &diag);
    if (!config.data.calendar.empty()) {
        data.calendar = read_calendar_csv(config.data.calendar);
    } else {
        std::set<Date> days;
        for (const auto& b : bars) days.insert(b.date);
        const std::vector<Date> ordered(days.begin(), days.end());
        data.calendar = build_trading_calendar(ordered);
    }
    data.equity = build_monthly_equity(bars, data.calendar, &diag);

    const auto filings = read_fundamentals_csv(config.data.fundamentals, &diag);
    const auto links = read_link_csv(config.data.link);
    const auto factor_days = read_factors_csv(config.data.factors);
    data.factors = monthly_factors(factor_days, data.calendar, &diag);
    data.risk_free = risk_free_by_month(data.factors);
    if (!config.data.benchmarks.empty()) data.benchmarks = read_benchmarks_csv(config.data.benchmarks, data.calendar, &diag);

    data.universe = filter_universe(links, filings, data.equity, config.universe);
    std::set<std::string> member_firms;
    for (const auto& m : data.universe.members) member_firms.insert(m.firm_id);
    std::vector<QuarterlyFiling> member_filings;
    for (const auto& f : filings) {
        if (member_firms.contains(f.firm_id)) member_filings.push_back(f);
    }
    const auto effective = apply_pit_lag(member_filings, data.calendar, &diag);
    const auto monthly = forward_fill_monthly(effective, data.calendar, config.max_staleness_months);
    data.panel = build_panel(monthly, data.equity, data.risk_free, data.universe.members, data.calendar, &diag);

    nlohmann::json inputs = {{"prices", missing_field_counts(config.data.prices)},
                             {"fundamentals", missing_field_counts(config.data.fundamentals)},
                             {"link", missing_field_counts(config.data.link)},
                             {"factors", missing_field_counts(config.data.factors)}};
    if (!config.data.benchmarks.empty()) inputs["benchmarks"] = missing_field_counts(config.data.benchmarks);

    std::set<std::string> member_securities;
    for (const auto& m : data.universe.members) member_securities.insert(m.security_id);
    data.report = {{"schema_errors", 0},
                   {"inputs", inputs},
                   {"calendar", {{"trading_days", data.calendar.days().size()},
                                 {"month_ends", data.calendar.month_ends().size()},
                                 {"first", data.calendar.days().front().iso()},
                                 {"last", data.calendar.days().back().iso()}}},
                   {"filters", diag.counts()},
                   {"universe", {{"exclusions", data.universe.exclusions},
                                 {"firms", member_firms.size()},
                                 {"securities", member_securities.size()}}},
                   {"counts", {{"filings_read", filings.size()},
                               {"filings_effective", effective.size()},
                               {"equity_rows", data.equity.size()},
                               {"factor_months", data.factors.size()},
                               {"panel_rows", data.panel.size()}}},
                   {"messages", diag.messages()}};
    logger().info("ingest: {} panel rows for {} firms", data.panel.size(), member_firms.size());
    return data;
}

BacktestResult backtest_period(const IngestResult& data, const SignalSeries& signals, const RunConfig& config,
                               int lookback, Date start, std::optional<Date> end) {
    BacktestConfig bt;
    bt.lookback = lookback;
    bt.start = start;
    bt.end = end ? *end : last_month_end(data);
    bt.empty_month = config.empty_month;
    bt.min_lookback_coverage = config.min_lookback_coverage;
    const SignalIndex index(signals.rows, config.signal.allow_negative_acv_base);
    return run_backtest(index, return_panel(data.equity), data.risk_free, data.calendar, bt);
}

double training_sharpe(const BacktestResult& result, const std::map<Date, double>& risk_free) {
    std::vector<double> excess;
    excess.reserve(result.months.size());
    for (const auto& m : result.months) {
        auto rf = risk_free.find(m.realization);
        if (rf == risk_free.end()) throw DataError("no risk-free rate for " + m.realization.iso());
        excess.push_back(m.portfolio_return - rf->second);
    }
    return sharpe_ratio(excess);
}

OptimizationResult optimize_on_training(const IngestResult& data, const SignalSeries& signals, const RunConfig& config) {
    const SignalIndex index(signals.rows, config.signal.allow_negative_acv_base);
    const auto returns = return_panel(data.equity);
    BacktestConfig bt;
    bt.start = config.train_start;
    bt.end = config.train_end;
    bt.empty_month = config.empty_month;
    bt.min_lookback_coverage = config.min_lookback_coverage;
    auto objective = [&](int lookback) -> std::optional<double> {
        BacktestConfig c = bt;
        c.lookback = lookback;
        const auto result = run_backtest(index, returns, data.risk_free, data.calendar, c);
        return training_sharpe(result, data.risk_free);
    };
    return optimize_lookback(objective, config.search);
}

Histogram histogram(std::span<const double> values, int bins) {
    if (bins < 1) throw ConfigError("histogram needs at least one bin");
    if (values.empty()) throw DataError("histogram of an empty series");
    auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    double lo = *lo_it;
    double hi = *hi_it;
    if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    Histogram h;
    h.edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i <= bins; ++i) h.edges[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / bins;
    h.edges.back() = hi;
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    for (double v : values) {
        // Bin i holds edges[i] <= v < edges[i+1]; the maximum falls in the last bin.
        const auto it = std::upper_bound(h.edges.begin(), h.edges.end(), v);
        auto bin = static_cast<std::size_t>(std::distance(h.edges.begin(), it)) - 1;
        bin = std::min(bin, h.counts.size() - 1);
        ++h.counts[bin];
    }
    return h;
}

void cmd_ingest(const RunConfig& config) {
    const auto data = run_ingest(config);
    const auto dir = prepare_output(config);
    write_file(dir / "panel.csv", panel_csv(data.panel));
    write_json(dir / "ingest_report.json", data.report);
}

void cmd_signal(const RunConfig& config) {
    const auto data = run_ingest(config);
    const auto analysis = analyse(data, config, false);
    const auto dir = prepare_output(config);
    write_file(dir / "panel.csv", panel_csv(data.panel));
    write_json(dir / "ingest_report.json", data.report);
    write_file(dir / "signals.csv", signals_csv(analysis.signals));
    write_json(dir / "fits.json", fits_json(analysis.signals));
}

void cmd_optimize(const RunConfig& config) {
    const auto data = run_ingest(config);
    Diagnostics diag;
    const auto signals = compute_signal_series(data.panel, data.calendar, config.signal, &diag);
    const auto opt = optimize_on_training(data, signals, config);
    const auto dir = prepare_output(config);
    write_json(dir / "optimization.json", optimization_json(opt, config));
}

void cmd_backtest(const RunConfig& config) {
    const auto data = run_ingest(config);
    const auto analysis = analyse(data, config, true);
    const auto result = backtest_period(data, analysis.signals, config, analysis.lookback, config.test_start,
                                        config.test_end);

    const auto benchmarks = benchmark_series(data);
    std::map<Date, double> portfolio;
    for (const auto& m : result.months) portfolio.emplace(m.realization, m.portfolio_return);
    std::vector<NamedSeries> assets{{"portfolio", portfolio}};
    for (const auto& b : benchmarks) {
        NamedSeries aligned{b.name, {}};
        for (const auto& [month, r] : portfolio) {
            if (auto it = b.values.find(month); it != b.values.end()) aligned.values.emplace(month, it->second);
        }
        assets.push_back(std::move(aligned));
    }
    const auto report = build_performance_report(assets, data.risk_free, data.factors, config.include_momentum);

    const auto dir = prepare_output(config);
    write_file(dir / "panel.csv", panel_csv(data.panel));
    write_json(dir / "ingest_report.json", data.report);
    write_file(dir / "signals.csv", signals_csv(analysis.signals));
    write_json(dir / "fits.json", fits_json(analysis.signals));
    if (analysis.optimization) write_json(dir / "optimization.json", optimization_json(*analysis.optimization, config));
    write_file(dir / "backtest_returns.csv", returns_csv(result));
    write_file(dir / "holdings.csv", holdings_csv(result));
    write_file(dir / "benchmarks_monthly.csv", benchmarks_monthly_csv(data.risk_free, benchmarks));
    write_json(dir / "performance.json", performance_json(report));
    write_file(dir / "performance.csv", performance_csv(report));

    nlohmann::json settings = nlohmann::json::object();
    std::istringstream dump(dump_config(config));
    for (std::string line; std::getline(dump, line);) {
        const auto eq = line.find(" = ");
        if (eq != std::string::npos) settings[line.substr(0, eq)] = line.substr(eq + 3);
    }
    write_json(dir / "run_metadata.json",
               {{"lookback", analysis.lookback},
                {"lookback_source", analysis.optimization ? "optimized" : "fixed"},
                {"universe", config.universe.mode == UniverseMode::Nasdaq ? "nasdaq" : "handpicked"},
                {"period", {{"first_realization", result.months.front().realization.iso()},
                            {"last_realization", result.months.back().realization.iso()},
                            {"months", result.months.size()}}},
                {"missing_return_events", result.missing_return_events},
                {"seed", config.seed},
                {"settings", settings}});

    cmd_report(dir, config.hist_bins);
}

void cmd_report(const std::filesystem::path& results_dir, int hist_bins) {
    const auto returns_path = results_dir / "backtest_returns.csv";
    const auto bench_path = results_dir / "benchmarks_monthly.csv";
    for (const auto& p : {returns_path, bench_path}) {
        if (!std::filesystem::exists(p)) throw DataError("missing result file " + p.string() + "; run backtest first");
    }
    const auto returns_table = CsvTable::read(returns_path, {"month_end", "portfolio_return"});
    std::map<Date, double> portfolio;
    std::vector<double> monthly;
    for (const auto& row : returns_table.rows()) {
        const double r = row.required_number("portfolio_return");
        portfolio.emplace(row.required_date("month_end"), r);
        monthly.push_back(r);
    }
    if (portfolio.empty()) throw DataError(returns_path.string() + " holds no months");

    const auto bench_table = CsvTable::read(bench_path, {"month_end", "risk_free"});
    std::map<Date, double> risk_free;
    std::vector<NamedSeries> benchmarks;
    for (const auto& column : bench_table.header()) {
        if (column != "month_end" && column != "risk_free") benchmarks.push_back({column, {}});
    }
    for (const auto& row : bench_table.rows()) {
        const Date month = row.required_date("month_end");
        risk_free.emplace(month, row.required_number("risk_free"));
        for (auto& b : benchmarks) {
            if (auto v = row.number(b.name)) b.values.emplace(month, *v);
        }
    }

    const auto table = compare_benchmarks(portfolio, benchmarks, risk_free);
    std::ostringstream cumulative;
    std::vector<std::string> header{"date"};
    header.insert(header.end(), table.columns.begin(), table.columns.end());
    write_csv_line(cumulative, header);
    for (std::size_t t = 0; t < table.months.size(); ++t) {
        std::vector<std::string> fields{table.months[t].iso()};
        for (double v : table.cumulative[t]) fields.push_back(format_number(v));
        write_csv_line(cumulative, fields);
    }
    write_file(results_dir / "plot_cumulative.csv", cumulative.str());

    const auto hist = histogram(monthly, hist_bins);
    std::ostringstream hist_out;
    write_csv_line(hist_out, {"bin_low", "bin_high", "count"});
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        write_csv_line(hist_out,
                       {format_number(hist.edges[i]), format_number(hist.edges[i + 1]), std::to_string(hist.counts[i])});
    }
    write_file(results_dir / "plot_monthly_hist.csv", hist_out.str());

    std::ostringstream line;
    write_csv_line(line, {"date", "return"});
    for (const auto& [month, r] : portfolio) write_csv_line(line, {month.iso(), format_number(r)});
    write_file(results_dir / "plot_monthly_line.csv", line.str());
}

}  // namespace cashfactor
