#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace latecomer {

/// Bad or unusable input data. The CLI maps these to exit code 2.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed CSV header (a required column is missing).
class FormatError : public DataError {
public:
    FormatError(const std::string &message, std::string missing_column)
        : DataError(message), missing_column_(std::move(missing_column)) {}
    const std::string &missing_column() const { return missing_column_; }

private:
    std::string missing_column_;
};

/// Unparseable cell. Row and column are 1-based and count the header as row 1.
class ParseError : public DataError {
public:
    ParseError(const std::string &message, std::size_t row, std::size_t column)
        : DataError(message + " (row " + std::to_string(row) + ", column " + std::to_string(column) + ")"),
          row_(row), column_(column) {}
    std::size_t row() const { return row_; }
    std::size_t column() const { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

/// The series never reached the alignment threshold.
class NotLatecomerError : public DataError {
public:
    NotLatecomerError(const std::string &name, std::int64_t threshold, std::int64_t max_count)
        : DataError(name + ": not yet a latecomer (max count " + std::to_string(max_count) +
                    " below threshold " + std::to_string(threshold) + ")"),
          max_count_(max_count) {}
    std::int64_t max_count() const { return max_count_; }

private:
    std::int64_t max_count_;
};

/// Estimation or forecasting failure. The CLI maps these to exit code 3.
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConvergenceError : public FitError {
public:
    ConvergenceError(const std::string &message, std::vector<double> last_iterate, double gap, int iterations)
        : FitError(message), last_iterate_(std::move(last_iterate)), gap_(gap), iterations_(iterations) {}

    const std::vector<double> &last_iterate() const { return last_iterate_; }
    /// Largest KKT violation at the last iterate.
    double gap() const { return gap_; }
    int iterations() const { return iterations_; }

private:
    std::vector<double> last_iterate_;
    double gap_;
    int iterations_;
};

} // namespace latecomer
