#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cashfactor/calendar.hpp"
#include "cashfactor/date.hpp"
#include "cashfactor/diagnostics.hpp"
#include "cashfactor/prices.hpp"

namespace cashfactor {

/// One quarterly filing (Compustat quarterly layout). Values in currency.
struct QuarterlyFiling {
    std::string firm_id;
    Date report_date;
    std::optional<double> total_assets;
    std::optional<double> cash_holdings;
    std::optional<double> total_debt;
    std::optional<double> earnings;
    std::optional<double> rnd_expense;
    std::optional<double> interest_expense;
    std::optional<double> dividends_paid;
};

/// A filing after the point-in-time lag: usable from `effective_date`, first
/// visible at month end `effective_month_end`.
struct EffectiveFiling {
    QuarterlyFiling filing;
    Date effective_date;
    Date effective_month_end;
};

/// The filing a firm shows at one month end, and the filing it replaced.
struct MonthlyFundamentals {
    std::string firm_id;
    Date month_end;
    EffectiveFiling current;
    std::optional<EffectiveFiling> previous;
    int staleness_months = 0;
};

struct LinkRow {
    std::string firm_id;
    std::string security_id;
    int sic_code = 0;
    Date link_start;
    std::optional<Date> link_end;  // open-ended when absent

    bool active_on(Date d) const { return link_start <= d && (!link_end || d <= *link_end); }
};

enum class UniverseMode { Nasdaq, Handpicked };

struct UniverseConfig {
    UniverseMode mode = UniverseMode::Nasdaq;
    /// Handpicked mode: security or firm identifiers to keep.
    std::vector<std::string> ids;
    int exclude_sic_from = 6000;
    int exclude_sic_to = 6799;
    /// When set, a security must have month-end prices on or before
    /// coverage_start and on or after coverage_end.
    std::optional<Date> coverage_start;
    std::optional<Date> coverage_end;
};

struct UniverseResult {
    /// Admitted links, sorted by (firm_id, security_id, link_start).
    std::vector<LinkRow> members;
    /// Number of (firm, security) pairs removed by each filter.
    std::map<std::string, std::size_t> exclusions;
};

/// Effective-dates each filing: first trading day strictly after the report
/// date, mapped to the first month end on or after it. Filings that cannot be
/// placed on the calendar are dropped and recorded. Output is sorted by
/// (firm_id, effective_month_end, report_date).
std::vector<EffectiveFiling> apply_pit_lag(std::span<const QuarterlyFiling> filings,
                                           const TradingCalendar& calendar,
                                           Diagnostics* diag = nullptr);

/// Carries each firm's latest visible filing forward over the month ends of
/// the calendar. When several filings become visible in the same month the
/// one reported last wins. Months more than `max_staleness_months` past the
/// filing's effective month are dropped. Output is sorted by
/// (firm_id, month_end).
std::vector<MonthlyFundamentals> forward_fill_monthly(std::span<const EffectiveFiling> filings,
                                                      const TradingCalendar& calendar,
                                                      int max_staleness_months = 6);

/// The distinct filings appearing as `current` in forward-filled rows.
std::vector<EffectiveFiling> filings_of(std::span<const MonthlyFundamentals> rows);

/// Applies the SIC exclusion, the handpicked id list and the coverage window,
/// and keeps only pairs that have both filings and month-end prices. Throws
/// UniverseError (with per-filter counts) when nothing survives, and
/// DataError when a pair has overlapping link ranges.
UniverseResult filter_universe(std::span<const LinkRow> links, std::span<const QuarterlyFiling> filings,
                               std::span<const MonthlyEquityRow> prices, const UniverseConfig& config);

/// Filing values after imputation: missing R&D, interest, dividends and total
/// debt read as zero. Total assets, cash and earnings are required.
struct FilingValues {
    double total_assets = 0.0;
    double cash_holdings = 0.0;
    double total_debt = 0.0;
    double earnings = 0.0;
    double rnd_expense = 0.0;
    double interest_expense = 0.0;
    double dividends_paid = 0.0;
};

/// Number and names of the cash-regression regressors, in column order.
inline constexpr std::size_t kRegressorCount = 11;
extern const std::array<const char*, kRegressorCount> kRegressorNames;

/// Index of each regressor in FirmMonthRow::x.
enum Regressor : std::size_t {
    kDeltaCash = 0,
    kDeltaEarnings,
    kDeltaNoncashAssets,
    kDeltaRnd,
    kDeltaInterest,
    kDeltaDividends,
    kLaggedCash,
    kLeverage,
    kDeltaDebtPlusCap,
    kCashSizeInteraction,
    kCashLeverageInteraction,
};

/// One row of the regression panel.
struct FirmMonthRow {
    std::string firm_id;
    std::string security_id;
    Date month_end;
    double monthly_return = 0.0;
    double risk_free = 0.0;
    double excess_return = 0.0;
    double market_cap = 0.0;
    double lagged_market_cap = 0.0;
    FilingValues fundamentals;
    FilingValues lagged_fundamentals;
    Date filing_report_date;
    double leverage = 0.0;
    std::array<double, kRegressorCount> x{};
};

/// TotalDebt / (TotalDebt + market cap).
double leverage_ratio(double total_debt, double market_cap);

/// Numerator and denominator convention for the debt-plus-market-cap change
/// regressor: ((D_t + M_t) - (D_prev + M_{t-1})) / (D_prev + M_{t-1}).
/// Returns nullopt when the denominator is not positive.
std::optional<double> debt_plus_cap_change(double debt, double market_cap, double lagged_debt,
                                           double lagged_market_cap);

/// Computes x1..x11 and leverage for one firm-month. Returns nullopt when a
/// denominator is degenerate or any value is non-finite.
std::optional<std::pair<double, std::array<double, kRegressorCount>>> compute_regressors(
    const FilingValues& current, const FilingValues& previous, double market_cap, double lagged_market_cap);

/// Joins forward-filled fundamentals, month-end equity rows and the monthly
/// risk-free rate into the regression panel for the admitted links. Rows
/// without a previous filing, without a positive lagged market cap, without a
/// return or risk-free rate, or missing a critical field are excluded and
/// counted in `diag`. Sorted by (firm_id, security_id, month_end).
std::vector<FirmMonthRow> build_panel(std::span<const MonthlyFundamentals> fundamentals,
                                      std::span<const MonthlyEquityRow> equity,
                                      const std::map<Date, double>& risk_free,
                                      std::span<const LinkRow> members, const TradingCalendar& calendar,
                                      Diagnostics* diag = nullptr);

/// Reads `gvkey,rdq,atq,cheq,dlttq,ibq,xrdq,xintq,dvq`. Rows without `rdq` are
/// dropped and counted as "missing_report_date".
std::vector<QuarterlyFiling> read_fundamentals_csv(const std::filesystem::path& path,
                                                   Diagnostics* diag = nullptr);

/// Reads `gvkey,permno,sic,linkdt,linkenddt`.
std::vector<LinkRow> read_link_csv(const std::filesystem::path& path);

}  // namespace cashfactor
