#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace driftmap {

using Vector = std::vector<double>;

// Dense row-major matrix. Rows are points, columns are embedding dimensions.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    // All rows must share one length; throws DimensionMismatchError otherwise.
    static Matrix from_rows(const std::vector<Vector>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return rows_ == 0; }

    std::span<double> row(std::size_t i) noexcept {
        return {data_.data() + i * cols_, cols_};
    }
    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }
    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    // An empty matrix adopts the width of the first appended row.
    void append_row(std::span<const double> values);
    void append_rows(const Matrix& other);

    Vector row_vector(std::size_t i) const { return {row(i).begin(), row(i).end()}; }
    std::vector<Vector> to_rows() const;

    // Rows selected by index, in the order given.
    Matrix select_rows(std::span<const std::size_t> indices) const;

    const std::vector<double>& data() const noexcept { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

}  // namespace driftmap
