#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "cashfactor/config.hpp"
#include "cashfactor/diagnostics.hpp"
#include "cashfactor/error.hpp"
#include "cashfactor/pipeline.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct Flags {
    std::string config;
    std::string lookback;
    std::string train_start;
    std::string train_end;
    std::string test_start;
    std::string test_end;
    std::string winsor;
    std::string out;
    std::string universe;
};

cashfactor::RunConfig build_config(const Flags& flags) {
    cashfactor::RunConfig config;
    if (!flags.config.empty()) cashfactor::load_config_file(config, flags.config);
    auto set = [&](const char* key, const std::string& value) {
        if (!value.empty()) cashfactor::apply_setting(config, key, value);
    };
    set("backtest.lookback", flags.lookback);
    set("train.start", flags.train_start);
    set("train.end", flags.train_end);
    set("test.start", flags.test_start);
    set("test.end", flags.test_end);
    set("signal.winsor", flags.winsor);
    set("output.dir", flags.out);
    set("universe.mode", flags.universe);
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    cashfactor::configure_logging_from_env();

    CLI::App app{"Cash-productivity factor backtester"};
    app.require_subcommand(1);
    app.footer("Config keys and defaults (file: one `key = value` per line):\n" + cashfactor::describe_defaults() +
               "\nExit codes: 0 success, 2 config error, 3 data or schema error, 4 numerical failure.\n"
               "Log level: CASHFACTOR_LOG=trace|debug|info|warn|error|off (default warn).");

    Flags flags;
    app.add_option("--config", flags.config, "Key-value config file")->check(CLI::ExistingFile);
    app.add_option("--lookback", flags.lookback, "Lookback in months, or 'optimize'");
    app.add_option("--train-start", flags.train_start, "First training month (YYYY-MM-DD)");
    app.add_option("--train-end", flags.train_end, "Last training month (YYYY-MM-DD)");
    app.add_option("--test-start", flags.test_start, "First test month (YYYY-MM-DD)");
    app.add_option("--test-end", flags.test_end, "Last test month (YYYY-MM-DD)");
    app.add_option("--winsor", flags.winsor, "Winsorization percentiles LOW,HIGH");
    app.add_option("--out", flags.out, "Output directory");
    app.add_option("--universe", flags.universe, "nasdaq or handpicked")
        ->check(CLI::IsMember({"nasdaq", "handpicked"}));

    auto* ingest = app.add_subcommand("ingest", "Build the point-in-time panel and ingestion report");
    auto* signal = app.add_subcommand("signal", "Compute the monthly cash-return signal");
    auto* optimize = app.add_subcommand("optimize", "Optimize the lookback on the training period");
    auto* backtest = app.add_subcommand("backtest", "Run the out-of-sample backtest and reports");
    auto* report = app.add_subcommand("report", "Rebuild plot files from existing results");
    std::string results_dir;
    report->add_option("--results", results_dir, "Directory holding backtest results (default: --out)");
    for (auto* sub : {ingest, signal, optimize, backtest, report}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        const auto config = build_config(flags);
        if (*ingest) {
            cashfactor::cmd_ingest(config);
        } else if (*signal) {
            cashfactor::cmd_signal(config);
        } else if (*optimize) {
            cashfactor::cmd_optimize(config);
        } else if (*backtest) {
            cashfactor::cmd_backtest(config);
        } else if (*report) {
            cashfactor::validate(config, false);
            cashfactor::cmd_report(results_dir.empty() ? config.output_dir : std::filesystem::path(results_dir), config.hist_bins);
        }
    } catch (const cashfactor::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const cashfactor::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const cashfactor::NumericalError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return kExitNumerical;
    }
    return 0;
}
