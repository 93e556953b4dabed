#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace denolab {

// Broad failure classes. The CLI maps them onto exit codes 1, 2 and 3.
enum class ErrorCategory { usage, data, numerical };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

class UsageError : public Error {
public:
    explicit UsageError(const std::string& what) : Error(ErrorCategory::usage, what) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(ErrorCategory::numerical, what) {}
};

// --- data errors -----------------------------------------------------------

class FileNotFound : public DataError {
public:
    explicit FileNotFound(const std::string& path) : DataError("file not found: " + path) {}
};

class SchemaMismatch : public DataError {
public:
    explicit SchemaMismatch(const std::string& column)
        : DataError("column not present in header: " + column) {}
};

class ParseError : public DataError {
public:
    ParseError(std::size_t row, const std::string& what)
        : DataError("row " + std::to_string(row) + ": " + what), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class NonPositivePrice : public DataError {
public:
    explicit NonPositivePrice(std::size_t index)
        : DataError("non-positive or non-finite price at index " + std::to_string(index)),
          index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

class NonMonotoneTimestamps : public DataError {
public:
    explicit NonMonotoneTimestamps(std::size_t index)
        : DataError("timestamps not strictly increasing at index " + std::to_string(index)),
          index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

class SeriesTooShort : public DataError {
public:
    explicit SeriesTooShort(const std::string& what) : DataError("series too short: " + what) {}
};

class DegenerateScaler : public DataError {
public:
    DegenerateScaler() : DataError("degenerate scaler: max equals min over the fit range") {}
};

class NonFiniteFeature : public DataError {
public:
    explicit NonFiniteFeature(std::size_t row)
        : DataError("non-finite feature in sample " + std::to_string(row)) {}
};

class IoError : public DataError {
public:
    explicit IoError(const std::string& what) : DataError("i/o error: " + what) {}
};

// --- usage errors ----------------------------------------------------------

class NegativeTau : public UsageError {
public:
    explicit NegativeTau(double tau) : UsageError("tau must be >= 0, got " + std::to_string(tau)) {}
};

class WindowOutOfRange : public UsageError {
public:
    explicit WindowOutOfRange(const std::string& what) : UsageError("window out of range: " + what) {}
};

class WindowOrder : public UsageError {
public:
    WindowOrder(int short_window, int long_window)
        : UsageError("short window " + std::to_string(short_window) +
                     " must be smaller than long window " + std::to_string(long_window)) {}
};

class ShapeMismatch : public UsageError {
public:
    explicit ShapeMismatch(const std::string& what) : UsageError("shape mismatch: " + what) {}
};

class DimensionMismatch : public UsageError {
public:
    explicit DimensionMismatch(const std::string& what) : UsageError("dimension mismatch: " + what) {}
};

class EmptyInput : public UsageError {
public:
    explicit EmptyInput(const std::string& what) : UsageError("empty input: " + what) {}
};

class ConfigError : public UsageError {
public:
    explicit ConfigError(const std::string& what) : UsageError("config: " + what) {}
};

// --- numerical errors ------------------------------------------------------

class NonFiniteLoss : public NumericalError {
public:
    explicit NonFiniteLoss(int epoch)
        : NumericalError("training diverged: non-finite loss at epoch " + std::to_string(epoch)),
          epoch_(epoch) {}
    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

}  // namespace denolab
