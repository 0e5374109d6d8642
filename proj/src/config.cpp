#include "cashfactor/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "cashfactor/csv.hpp"
#include "cashfactor/error.hpp"

namespace cashfactor {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::string bad_value(std::string_view key, std::string_view value, std::string_view expected) {
    return "config key '" + std::string(key) + "': cannot read '" + std::string(value) + "' as " +
           std::string(expected);
}

long long parse_integer(std::string_view key, std::string_view value) {
    long long out = 0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc{} || ptr != end) throw ConfigError(bad_value(key, value, "an integer"));
    return out;
}

double parse_real(std::string_view key, std::string_view value) {
    double out = 0.0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc{} || ptr != end) throw ConfigError(bad_value(key, value, "a number"));
    return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError(bad_value(key, value, "true or false"));
}

Date parse_date(std::string_view key, std::string_view value) {
    try {
        return Date::parse(value);
    } catch (const std::invalid_argument&) {
        throw ConfigError(bad_value(key, value, "a YYYY-MM-DD date"));
    }
}

std::vector<std::string> split_list(std::string_view value) {
    std::vector<std::string> out;
    while (!value.empty()) {
        const auto comma = value.find(',');
        const auto item = trim(value.substr(0, comma));
        if (!item.empty()) out.emplace_back(item);
        if (comma == std::string_view::npos) break;
        value.remove_prefix(comma + 1);
    }
    return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, std::string_view value) {
    std::filesystem::path p{std::string(value)};
    if (p.empty() || p.is_absolute() || base.empty()) return p;
    return base / p;
}

std::string shortest(double value) {
    char buf[32];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return ec == std::errc{} ? std::string(buf, end) : format_number(value);
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
    return out;
}

struct Key {
    const char* name;
    std::function<void(RunConfig&, std::string_view, const std::filesystem::path&)> set;
    std::function<std::string(const RunConfig&)> get;
};

const std::vector<Key>& keys() {
    static const std::vector<Key> table = [] {
        std::vector<Key> k;
        auto path_key = [&](const char* name, std::filesystem::path DataPaths::*member) {
            k.push_back({name,
                         [member](RunConfig& c, std::string_view v, const std::filesystem::path& base) {
                             c.data.*member = resolve(base, v);
                         },
                         [member](const RunConfig& c) { return (c.data.*member).string(); }});
        };
        path_key("data.prices", &DataPaths::prices);
        path_key("data.fundamentals", &DataPaths::fundamentals);
        path_key("data.link", &DataPaths::link);
        path_key("data.factors", &DataPaths::factors);
        path_key("data.calendar", &DataPaths::calendar);
        path_key("data.benchmarks", &DataPaths::benchmarks);

        k.push_back({"universe.mode",
                     [](RunConfig& c, std::string_view v, const auto&) {
                         if (v == "nasdaq") {
                             c.universe.mode = UniverseMode::Nasdaq;
                         } else if (v == "handpicked") {
                             c.universe.mode = UniverseMode::Handpicked;
                         } else {
                             throw ConfigError(bad_value("universe.mode", v, "nasdaq or handpicked"));
                         }
                     },
                     [](const RunConfig& c) {
                         return std::string(c.universe.mode == UniverseMode::Nasdaq ? "nasdaq" : "handpicked");
                     }});
        k.push_back({"universe.ids", [](RunConfig& c, std::string_view v, const auto&) { c.universe.ids = split_list(v); },
                     [](const RunConfig& c) { return join(c.universe.ids); }});
        k.push_back({"universe.exclude_sic_from",
                     [](RunConfig& c, std::string_view v, const auto&) {
                         c.universe.exclude_sic_from = static_cast<int>(parse_integer("universe.exclude_sic_from", v));
                     },
                     [](const RunConfig& c) { return std::to_string(c.universe.exclude_sic_from); }});
        k.push_back({"universe.exclude_sic_to",
                     [](RunConfig& c, std::string_view v, const auto&) {
                         c.universe.exclude_sic_to = static_cast<int>(parse_integer("universe.exclude_sic_to", v));
                     },
                     [](const RunConfig& c) { return std::to_string(c.universe.exclude_sic_to); }});
        k.push_back({"universe.coverage_start",
                     [](RunConfig& c, std::string_view v, const auto&) {
                         if (v.empty()) {
                             c.universe.coverage_start.reset();
                         } else {
                             c.universe.coverage_start = parse_date("universe.coverage_start", v);
                         }
                     },
                     [](const RunConfig& c) {
                         return c.universe.coverage_start ? c.universe.coverage_start->iso() : std::string();
                     }});
        k.push_back({"universe.coverage_end",
                     [](RunConfig& c, std::string_view v, const auto&) {
                         if (v.empty()) {
                             c.universe.coverage_end.reset();
                         } else {
                             c.universe.coverage_end = parse_date("universe.coverage_end", v);
                         }
                     },
                     [](const RunConfig& c) {
                         return c.universe.coverage_end ? c.universe.coverage_end->iso() : std::string();
                     }});
        k.push_back({"pit.max_staleness_months",
                     [](RunConfig& c, std::string_view v, const auto&) {
                         c.max_staleness_months = static_cast<int>(parse_integer("pit.max_staleness_months", v));
                     },
                     [](const RunConfig& c) { return std::to_string(c.max_staleness_months); }});

        k.push_back({"signal.window",
                     [](RunConfig& c, std::string_view v, const auto&) {
                         if (v == "expanding") {
                             c.signal.rolling_months = 0;
                             return;
                         }
                         if (v.starts_with("rolling(") && v.ends_with(")")) {
                             const auto inner = v.substr(8, v.size() - 9);
                             const auto months = parse_integer("signal.window", inner);
                             if (months < 1) throw ConfigError("signal.window: rolling window must be positive");
                             c.signal.rolling_months = static_cast<int>(months);
                             return;
                         }
                         throw ConfigError(bad_value("signal.window", v, "expanding or rolling(k)"));
                     },
                     [](const RunConfig& c) {
                         return c.signal.rolling_months == 0 ? std::string("expanding")
                                                             : "rolling(" + std::to_string(c.signal.rolling_months) + ")";
                     }});
        k.push_back({"signal.min_obs",
                     [](RunConfig& c, std::string_view v, const auto&) {
                         const auto n = parse_integer("signal.min_obs", v);
                         if (n < 1) throw ConfigError("signal.min_obs must be positive");
                         c.signal.min_obs = static_cast<std::size_t>(n);
                     },
                     [](const RunConfig& c) { return std::to_string(c.signal.min_obs); }});
        k.push_back({"signal.refit_every_months",
                     [](RunConfig& c, std::string_view v, const auto&) {
                         c.signal.refit_every_months = static_cast<int>(parse_integer("signal.refit_every_months", v));
                     },
                     [](const RunConfig& c) { return std::to_string(c.signal.refit_every_months); }});
        k.push_back({"signal.winsor",
                     [](RunConfig& c, std::string_view v, const auto&) {
                         const auto parts = split_list(v);
                         if (parts.size() != 2) throw ConfigError(bad_value("signal.winsor", v, "LOW,HIGH"));
                         c.signal.winsor_low = parse_real("signal.winsor", parts[0]);
                         c.signal.winsor_high = parse_real("signal.winsor", parts[1]);
                     },
                     [](const RunConfig& c) {
                         return shortest(c.signal.winsor_low) + "," + shortest(c.signal.winsor_high);
                     }});
        k.push_back({"signal.allow_negative_acv_base",
                     [](RunConfig& c, std::string_view v, const auto&) {
                         c.signal.allow_negative_acv_base = parse_bool("signal.allow_negative_acv_base", v);
                     },
                     [](const RunConfig& c) { return std::string(c.signal.allow_negative_acv_base ? "true" : "false"); }});

        k.push_back({"backtest.lookback",
                     [](RunConfig& c, std::string_view v, const auto&) {
                         if (v == "optimize") {
                             c.lookback.reset();
                         } else {
                             c.lookback = static_cast<int>(parse_integer("backtest.lookback", v));
                         }
                     },
                     [](const RunConfig& c) { return c.lookback ? std::to_string(*c.lookback) : std::string("optimize"); }});
        k.push_back({"backtest.empty_month",
                     [](RunConfig& c, std::string_view v, const auto&) {
                         if (v == "zero") {
                             c.empty_month = EmptyMonthPolicy::Zero;
                         } else if (v == "risk_free") {
                             c.empty_month = EmptyMonthPolicy::RiskFree;
                         } else {
                             throw ConfigError(bad_value("backtest.empty_month", v, "zero or risk_free"));
                         }
                     },
                     [](const RunConfig& c) {
                         return std::string(c.empty_month == EmptyMonthPolicy::Zero ? "zero" : "risk_free");
                     }});
        k.push_back({"backtest.min_lookback_coverage",
                     [](RunConfig& c, std::string_view v, const auto&) {
                         c.min_lookback_coverage = parse_real("backtest.min_lookback_coverage", v);
                     },
                     [](const RunConfig& c) { return shortest(c.min_lookback_coverage); }});

        k.push_back({"train.start",
                     [](RunConfig& c, std::string_view v, const auto&) { c.train_start = parse_date("train.start", v); },
                     [](const RunConfig& c) { return c.train_start.iso(); }});
        k.push_back({"train.end",
                     [](RunConfig& c, std::string_view v, const auto&) { c.train_end = parse_date("train.end", v); },
                     [](const RunConfig& c) { return c.train_end.iso(); }});
        k.push_back({"test.start",
                     [](RunConfig& c, std::string_view v, const auto&) { c.test_start = parse_date("test.start", v); },
                     [](const RunConfig& c) { return c.test_start.iso(); }});
        k.push_back({"test.end",
                     [](RunConfig& c, std::string_view v, const auto&) {
                         if (v.empty()) {
                             c.test_end.reset();
                         } else {
                             c.test_end = parse_date("test.end", v);
                         }
                     },
                     [](const RunConfig& c) { return c.test_end ? c.test_end->iso() : std::string(); }});

        k.push_back({"optimize.l_min",
                     [](RunConfig& c, std::string_view v, const auto&) {
                         c.search.min_lookback = static_cast<int>(parse_integer("optimize.l_min", v));
                     },
                     [](const RunConfig& c) { return std::to_string(c.search.min_lookback); }});
        k.push_back({"optimize.l_max",
                     [](RunConfig& c, std::string_view v, const auto&) {
                         c.search.max_lookback = static_cast<int>(parse_integer("optimize.l_max", v));
                     },
                     [](const RunConfig& c) { return std::to_string(c.search.max_lookback); }});
        k.push_back({"optimize.ftol",
                     [](RunConfig& c, std::string_view v, const auto&) { c.search.powell.ftol = parse_real("optimize.ftol", v); },
                     [](const RunConfig& c) { return shortest(c.search.powell.ftol); }});
        k.push_back({"optimize.xtol",
                     [](RunConfig& c, std::string_view v, const auto&) { c.search.powell.xtol = parse_real("optimize.xtol", v); },
                     [](const RunConfig& c) { return shortest(c.search.powell.xtol); }});
        k.push_back({"optimize.maxiter",
                     [](RunConfig& c, std::string_view v, const auto&) {
                         c.search.powell.maxiter = static_cast<int>(parse_integer("optimize.maxiter", v));
                     },
                     [](const RunConfig& c) { return std::to_string(c.search.powell.maxiter); }});

        k.push_back({"performance.include_momentum",
                     [](RunConfig& c, std::string_view v, const auto&) {
                         c.include_momentum = parse_bool("performance.include_momentum", v);
                     },
                     [](const RunConfig& c) { return std::string(c.include_momentum ? "true" : "false"); }});
        k.push_back({"report.hist_bins",
                     [](RunConfig& c, std::string_view v, const auto&) {
                         c.hist_bins = static_cast<int>(parse_integer("report.hist_bins", v));
                     },
                     [](const RunConfig& c) { return std::to_string(c.hist_bins); }});
        k.push_back({"output.dir",
                     [](RunConfig& c, std::string_view v, const std::filesystem::path& base) {
                         c.output_dir = resolve(base, v);
                     },
                     [](const RunConfig& c) { return c.output_dir.string(); }});
        k.push_back({"seed",
                     [](RunConfig& c, std::string_view v, const auto&) {
                         const auto s = parse_integer("seed", v);
                         if (s < 0) throw ConfigError("seed must be nonnegative");
                         c.seed = static_cast<std::uint64_t>(s);
                     },
                     [](const RunConfig& c) { return std::to_string(c.seed); }});
        return k;
    }();
    return table;
}

}  // namespace

void apply_setting(RunConfig& config, std::string_view key, std::string_view value,
                   const std::filesystem::path& base_dir) {
    key = trim(key);
    value = trim(value);
    for (const auto& k : keys()) {
        if (key == k.name) {
            k.set(config, value, base_dir);
            return;
        }
    }
    throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void load_config_file(RunConfig& config, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    const auto base = path.parent_path();
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        std::string_view text = line;
        if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
        text = trim(text);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(number) + ": expected 'key = value'");
        }
        try {
            apply_setting(config, text.substr(0, eq), text.substr(eq + 1), base);
        } catch (const ConfigError& e) {
            throw ConfigError(path.string() + ":" + std::to_string(number) + ": " + e.what());
        }
    }
}

void validate(const RunConfig& config, bool check_paths) {
    if (config.test_start <= config.train_end) {
        throw ConfigError("test period starting " + config.test_start.iso() + " overlaps the training period ending " +
                          config.train_end.iso());
    }
    if (config.train_end < config.train_start) throw ConfigError("training period ends before it starts");
    if (config.test_end && *config.test_end < config.test_start) throw ConfigError("test period ends before it starts");
    if (!(config.signal.winsor_low >= 0.0 && config.signal.winsor_low < config.signal.winsor_high &&
          config.signal.winsor_high <= 100.0)) {
        throw ConfigError("winsor percentiles must satisfy 0 <= low < high <= 100");
    }
    if (config.lookback && *config.lookback < 1) throw ConfigError("backtest.lookback must be at least 1");
    if (config.search.min_lookback < 1 || config.search.max_lookback < config.search.min_lookback) {
        throw ConfigError("optimize bounds must satisfy 1 <= l_min <= l_max");
    }
    if (!(config.min_lookback_coverage > 0.0 && config.min_lookback_coverage <= 1.0)) {
        throw ConfigError("backtest.min_lookback_coverage must lie in (0, 1]");
    }
    if (config.max_staleness_months < 0) throw ConfigError("pit.max_staleness_months must be nonnegative");
    if (config.signal.refit_every_months < 1) throw ConfigError("signal.refit_every_months must be at least 1");
    if (config.hist_bins < 1) throw ConfigError("report.hist_bins must be at least 1");
    if (config.universe.mode == UniverseMode::Handpicked && config.universe.ids.empty()) {
        throw ConfigError("universe.mode = handpicked needs universe.ids");
    }
    if (!check_paths) return;
    auto require = [](const std::filesystem::path& p, const char* key, bool optional) {
        if (p.empty()) {
            if (optional) return;
            throw ConfigError(std::string(key) + " is not set");
        }
        if (!std::filesystem::exists(p)) throw ConfigError(std::string(key) + ": file not found: " + p.string());
    };
    require(config.data.prices, "data.prices", false);
    require(config.data.fundamentals, "data.fundamentals", false);
    require(config.data.link, "data.link", false);
    require(config.data.factors, "data.factors", false);
    require(config.data.calendar, "data.calendar", true);
    require(config.data.benchmarks, "data.benchmarks", true);
}

std::string describe_defaults() { return dump_config(RunConfig{}); }

std::string dump_config(const RunConfig& config) {
    std::ostringstream out;
    for (const auto& k : keys()) out << k.name << " = " << k.get(config) << "\n";
    return out.str();
}

}  // namespace cashfactor
