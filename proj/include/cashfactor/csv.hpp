#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "cashfactor/date.hpp"

namespace cashfactor {

/// Minimal comma-separated reader for the flat vendor extracts this project
/// ingests: header row, no quoting, empty field = missing.
class CsvTable {
public:
    /// Reads `path` and checks that every name in `required_columns` appears in
    /// the header. Throws SchemaError on a missing column or ragged row.
    static CsvTable read(const std::filesystem::path& path,
                         const std::vector<std::string>& required_columns);
    static CsvTable parse(std::string_view text, std::string source_name,
                          const std::vector<std::string>& required_columns);

    struct Layout {
        std::string source;
        std::vector<std::string> header;
        std::size_t index_of(std::string_view column, std::size_t line) const;
    };

    class Row {
    public:
        std::size_t line() const noexcept { return line_; }
        std::string_view text(std::string_view column) const;
        bool empty(std::string_view column) const { return text(column).empty(); }

        std::optional<double> number(std::string_view column) const;
        double required_number(std::string_view column) const;
        std::optional<Date> date(std::string_view column) const;
        Date required_date(std::string_view column) const;

    private:
        friend class CsvTable;
        std::shared_ptr<const Layout> layout_;
        std::size_t line_ = 0;
        std::vector<std::string> fields_;
    };

    const std::string& source() const noexcept { return layout_->source; }
    const std::vector<std::string>& header() const noexcept { return layout_->header; }
    const std::vector<Row>& rows() const noexcept { return rows_; }
    bool has_column(std::string_view column) const;

private:
    std::shared_ptr<const Layout> layout_;
    std::vector<Row> rows_;
};

/// Round-trip text for a double (17 significant digits); NaN and
/// missing values render as an empty field.
std::string format_number(double value);
std::string format_number(const std::optional<double>& value);

/// Writes one CSV line, joining already-formatted fields with commas.
void write_csv_line(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace cashfactor
