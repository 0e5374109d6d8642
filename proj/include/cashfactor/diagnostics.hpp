#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <spdlog/logger.h>

namespace cashfactor {

/// Shared "cashfactor" logger. Level comes from CASHFACTOR_LOG
/// (trace|debug|info|warn|error|off), default warn.
spdlog::logger& logger();

/// Re-reads CASHFACTOR_LOG and applies it to the shared logger.
void configure_logging_from_env();

/// Collects per-reason counts of rejected rows and the first few messages for
/// each reason. Operations that drop data take an optional pointer to one.
class Diagnostics {
public:
    static constexpr std::size_t kMaxMessagesPerReason = 20;

    void record(const std::string& reason, const std::string& message);
    void count(const std::string& reason, std::size_t n = 1);

    std::size_t count_of(const std::string& reason) const;
    const std::map<std::string, std::size_t>& counts() const noexcept { return counts_; }
    const std::vector<std::string>& messages() const noexcept { return messages_; }

    void merge(const Diagnostics& other);

private:
    std::map<std::string, std::size_t> counts_;
    std::vector<std::string> messages_;
};

inline void note(Diagnostics* diag, const std::string& reason, const std::string& message) {
    if (diag != nullptr) diag->record(reason, message);
}

}  // namespace cashfactor
