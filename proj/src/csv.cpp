#include "cashfactor/csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cashfactor/error.hpp"

namespace cashfactor {

namespace {

std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        std::string_view field = line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                                     : comma - start);
        while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
        while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
            field.remove_suffix(1);
        }
        out.emplace_back(field);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace

CsvTable CsvTable::read(const std::filesystem::path& path,
                        const std::vector<std::string>& required_columns) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open input file " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str(), path.string(), required_columns);
}

CsvTable CsvTable::parse(std::string_view text, std::string source_name,
                         const std::vector<std::string>& required_columns) {
    CsvTable table;
    auto layout = std::make_shared<Layout>();
    layout->source = std::move(source_name);

    std::size_t line_no = 0;
    std::size_t pos = 0;
    if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF) pos = 3;  // UTF-8 BOM
    bool have_header = false;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

        auto fields = split_line(line);
        if (!have_header) {
            layout->header = std::move(fields);
            have_header = true;
            for (const auto& col : required_columns) {
                if (std::find(layout->header.begin(), layout->header.end(), col) == layout->header.end()) {
                    throw SchemaError(layout->source, line_no, col, "required column missing from header");
                }
            }
            continue;
        }
        if (fields.size() != layout->header.size()) {
            throw SchemaError(layout->source, line_no, layout->header.back(),
                              "expected " + std::to_string(layout->header.size()) + " fields, found " +
                                  std::to_string(fields.size()));
        }
        Row row;
        row.layout_ = layout;
        row.line_ = line_no;
        row.fields_ = std::move(fields);
        table.rows_.push_back(std::move(row));
    }
    if (!have_header) {
        throw SchemaError(layout->source, 1, required_columns.empty() ? "" : required_columns.front(),
                          "file is empty (no header row)");
    }
    table.layout_ = std::move(layout);
    return table;
}

bool CsvTable::has_column(std::string_view column) const {
    return std::find(header().begin(), header().end(), column) != header().end();
}

std::size_t CsvTable::Layout::index_of(std::string_view column, std::size_t line) const {
    auto it = std::find(header.begin(), header.end(), column);
    if (it == header.end()) {
        throw SchemaError(source, line, std::string(column), "column not present");
    }
    return static_cast<std::size_t>(it - header.begin());
}

std::string_view CsvTable::Row::text(std::string_view column) const {
    return fields_[layout_->index_of(column, line_)];
}

std::optional<double> CsvTable::Row::number(std::string_view column) const {
    const std::string_view field = text(column);
    if (field.empty()) return std::nullopt;
    const std::string copy(field);
    char* end = nullptr;
    const double value = std::strtod(copy.c_str(), &end);
    if (end != copy.c_str() + copy.size()) {
        throw SchemaError(layout_->source, line_, std::string(column), "not a number: '" + copy + "'");
    }
    return value;
}

double CsvTable::Row::required_number(std::string_view column) const {
    auto value = number(column);
    if (!value) throw SchemaError(layout_->source, line_, std::string(column), "required value missing");
    return *value;
}

std::optional<Date> CsvTable::Row::date(std::string_view column) const {
    const std::string_view field = text(column);
    if (field.empty()) return std::nullopt;
    try {
        return Date::parse(field);
    } catch (const std::invalid_argument& e) {
        throw SchemaError(layout_->source, line_, std::string(column), e.what());
    }
}

Date CsvTable::Row::required_date(std::string_view column) const {
    auto value = date(column);
    if (!value) throw SchemaError(layout_->source, line_, std::string(column), "required date missing");
    return *value;
}

std::string format_number(double value) {
    if (std::isnan(value)) return {};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::string format_number(const std::optional<double>& value) {
    return value ? format_number(*value) : std::string{};
}

void write_csv_line(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i != 0) out << ',';
        out << fields[i];
    }
    out << '\n';
}

}  // namespace cashfactor
