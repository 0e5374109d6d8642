#include "cashfactor/diagnostics.hpp"

#include <cstdlib>
#include <memory>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace cashfactor {

namespace {

std::shared_ptr<spdlog::logger> make_logger() {
    auto existing = spdlog::get("cashfactor");
    if (existing) return existing;
    auto log = spdlog::stderr_color_mt("cashfactor");
    log->set_pattern("[%l] %v");
    log->set_level(spdlog::level::warn);
    if (const char* env = std::getenv("CASHFACTOR_LOG")) {
        log->set_level(spdlog::level::from_str(env));
    }
    return log;
}

}  // namespace

spdlog::logger& logger() {
    static std::shared_ptr<spdlog::logger> instance = make_logger();
    return *instance;
}

void configure_logging_from_env() {
    if (const char* env = std::getenv("CASHFACTOR_LOG")) {
        logger().set_level(spdlog::level::from_str(env));
    }
}

void Diagnostics::record(const std::string& reason, const std::string& message) {
    const std::size_t seen = counts_[reason]++;
    if (seen < kMaxMessagesPerReason) {
        messages_.push_back(reason + ": " + message);
        logger().debug("{}: {}", reason, message);
    }
}

void Diagnostics::count(const std::string& reason, std::size_t n) { counts_[reason] += n; }

std::size_t Diagnostics::count_of(const std::string& reason) const {
    auto it = counts_.find(reason);
    return it == counts_.end() ? 0 : it->second;
}

void Diagnostics::merge(const Diagnostics& other) {
    for (const auto& [reason, n] : other.counts_) counts_[reason] += n;
    messages_.insert(messages_.end(), other.messages_.begin(), other.messages_.end());
}

}  // namespace cashfactor
