#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "coopsgd/errors.hpp"

namespace coopsgd {

// Dense real matrix, row-major. Small and value-semantic: every problem in
// this toolkit is desk scale, so there is no sparse or blocked storage.
class DenseMatrix {
public:
    DenseMatrix() = default;

    DenseMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), entries_(rows * cols, 0.0) {
        if (rows == 0 || cols == 0) throw DimensionError("DenseMatrix: zero dimension");
    }

    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

    static DenseMatrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return entries_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return entries_[r * cols_ + c]; }

    double* row_ptr(std::size_t r) { return entries_.data() + r * cols_; }
    const double* row_ptr(std::size_t r) const { return entries_.data() + r * cols_; }

    const std::vector<double>& entries() const noexcept { return entries_; }
    std::vector<double>& entries() noexcept { return entries_; }

    std::vector<double> column(std::size_t c) const;
    void set_column(std::size_t c, std::span<const double> values);
    void zero_column(std::size_t c);

    bool all_finite() const noexcept;

    DenseMatrix transposed() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> entries_;
};

// The n x n averaging matrix 11^T / n (every entry 1/n).
DenseMatrix averaging_matrix(std::size_t n);

// Plain triple-loop product A * B.
DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b);

// A * B^T without materializing the transpose; B's rows are contiguous, so
// this is the preferred form for state-times-mixing updates.
DenseMatrix multiply_by_transpose(const DenseMatrix& a, const DenseMatrix& b);

double frobenius_norm_sq(const DenseMatrix& a);
double frobenius_norm(const DenseMatrix& a);

inline constexpr int kOperatorNormIterationCap = 10000;

// Largest singular value via power iteration on A^T A. Deterministic start
// vector (normalized all-ones) so repeated calls agree bit for bit.
double operator_norm(const DenseMatrix& a, double tol = 1e-10);

// Ordered transpose-product W_s^T W_{s+1}^T ... W_k^T over a schedule slice.
// An empty schedule yields the identity of the given dimension.
DenseMatrix mixing_chain_product(std::span<const DenseMatrix> schedule, std::size_t dim_if_empty);

}  // namespace coopsgd
