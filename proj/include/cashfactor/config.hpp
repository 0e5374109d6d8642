#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cashfactor/backtester.hpp"
#include "cashfactor/cash_signal.hpp"
#include "cashfactor/date.hpp"
#include "cashfactor/fundamentals.hpp"
#include "cashfactor/lookback_opt.hpp"

namespace cashfactor {

struct DataPaths {
    std::filesystem::path prices;
    std::filesystem::path fundamentals;
    std::filesystem::path link;
    std::filesystem::path factors;
    /// Optional: derived from the price dates when empty.
    std::filesystem::path calendar;
    /// Optional daily benchmark returns `date,<name>...`.
    std::filesystem::path benchmarks;
};

/// Everything a pipeline run needs. Defaults are the documented ones; a config
/// file and then command-line flags override them key by key.
struct RunConfig {
    DataPaths data;
    UniverseConfig universe;
    int max_staleness_months = 6;
    SignalConfig signal;

    /// Fixed lookback, or nullopt to optimize it on the training period.
    std::optional<int> lookback = 6;
    EmptyMonthPolicy empty_month = EmptyMonthPolicy::Zero;
    double min_lookback_coverage = 1.0;

    Date train_start{2010, 1, 1};
    Date train_end{2014, 12, 31};
    Date test_start{2015, 1, 1};
    /// Last month end of the data when unset.
    std::optional<Date> test_end;

    LookbackSearch search;
    bool include_momentum = true;
    int hist_bins = 20;

    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 0;
};

/// Sets one `key = value` setting. Throws ConfigError for unknown keys and
/// malformed values. Relative paths are resolved against `base_dir`.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value,
                   const std::filesystem::path& base_dir = {});

/// Parses a key-value file: one `key = value` per line, `#` starts a comment.
/// Relative data paths are taken relative to the file's directory.
void load_config_file(RunConfig& config, const std::filesystem::path& path);

/// Throws ConfigError when the periods overlap, percentiles or bounds are out
/// of range, or (with `check_paths`) a required input file does not exist.
void validate(const RunConfig& config, bool check_paths = true);

/// Every recognised key with its default, one `key = value` per line.
std::string describe_defaults();

/// Canonical `key = value` dump of the effective configuration.
std::string dump_config(const RunConfig& config);

}  // namespace cashfactor
