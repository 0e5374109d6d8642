#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cashfactor {

/// Base of every error thrown by the library. The CLI maps the three
/// families below onto distinct process exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or flag combination (exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed or insufficient input data (exit code 3).
class DataError : public Error {
public:
    using Error::Error;
};

class CalendarError : public DataError {
public:
    using DataError::DataError;
};

/// Schema violation in an input file; carries file/line/column context.
class SchemaError : public DataError {
public:
    SchemaError(std::string file, std::size_t line, std::string column, const std::string& what)
        : DataError(file + ":" + std::to_string(line) + ": column '" + column + "': " + what),
          file_(std::move(file)),
          line_(line),
          column_(std::move(column)) {}

    const std::string& file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }
    const std::string& column() const noexcept { return column_; }

private:
    std::string file_;
    std::size_t line_;
    std::string column_;
};

class UniverseError : public DataError {
public:
    using DataError::DataError;
};

/// Numerical failure: singular fit, undefined Sharpe, no fit available (exit code 4).
class NumericalError : public Error {
public:
    using Error::Error;
};

class SingularFitError : public NumericalError {
public:
    SingularFitError(const std::string& what, std::vector<std::string> columns)
        : NumericalError(what), columns_(std::move(columns)) {}

    const std::vector<std::string>& columns() const noexcept { return columns_; }

private:
    std::vector<std::string> columns_;
};

class NoFitError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class UndefinedSharpeError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace cashfactor
