#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace denolab {

// Dense row-major matrix of doubles. Rows are channels, columns are time.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }
    double operator()(std::size_t r, std::size_t c) const {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    // Columns [begin, end) of every row.
    Matrix slice_cols(std::size_t begin, std::size_t end) const {
        assert(begin <= end && end <= cols_);
        Matrix out(rows_, end - begin);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = begin; c < end; ++c) out(r, c - begin) = (*this)(r, c);
        return out;
    }

    bool same_shape(const Matrix& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

}  // namespace denolab
