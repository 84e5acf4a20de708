#include "coopsgd/matrix.hpp"

#include <cmath>
#include <cstring>
#include <string>

namespace coopsgd {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    if (rows == 0 || cols == 0) throw DimensionError("DenseMatrix: zero dimension");
    if (entries_.size() != rows * cols)
        throw DimensionError("DenseMatrix: entry count " + std::to_string(entries_.size()) +
                             " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

std::vector<double> DenseMatrix::column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
}

void DenseMatrix::set_column(std::size_t c, std::span<const double> values) {
    if (values.size() != rows_) throw DimensionError("set_column: length mismatch");
    for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = values[r];
}

void DenseMatrix::zero_column(std::size_t c) {
    for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = 0.0;
}

bool DenseMatrix::all_finite() const noexcept {
    for (double v : entries_)
        if (!std::isfinite(v)) return false;
    return true;
}

DenseMatrix DenseMatrix::transposed() const {
    DenseMatrix out(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
    return out;
}

DenseMatrix averaging_matrix(std::size_t n) {
    if (n == 0) throw DimensionError("averaging_matrix: n must be at least 1");
    DenseMatrix m(n, n);
    const double v = 1.0 / static_cast<double>(n);
    for (double& e : m.entries()) e = v;
    return m;
}

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) throw DimensionError("multiply: inner dimensions differ");
    DenseMatrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row_ptr(i);
        double* orow = out.row_ptr(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.row_ptr(k);
            for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

DenseMatrix multiply_by_transpose(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.cols()) throw DimensionError("multiply_by_transpose: inner dimensions differ");
    DenseMatrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row_ptr(i);
        double* orow = out.row_ptr(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* brow = b.row_ptr(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) acc += arow[k] * brow[k];
            orow[j] = acc;
        }
    }
    return out;
}

double frobenius_norm_sq(const DenseMatrix& a) {
    double acc = 0.0;
    for (double v : a.entries()) acc += v * v;
    return acc;
}

double frobenius_norm(const DenseMatrix& a) { return std::sqrt(frobenius_norm_sq(a)); }

double operator_norm(const DenseMatrix& a, double tol) {
    if (tol <= 0.0) throw NumericalError("operator_norm: tol must be positive");
    const std::size_t n = a.cols();
    std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n)));
    std::vector<double> av(a.rows()), atav(n);
    double sigma_prev = -1.0;
    for (int iter = 0; iter < kOperatorNormIterationCap; ++iter) {
        // av = A v
        for (std::size_t i = 0; i < a.rows(); ++i) {
            const double* row = a.row_ptr(i);
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) acc += row[k] * v[k];
            av[i] = acc;
        }
        // atav = A^T av
        for (std::size_t k = 0; k < n; ++k) atav[k] = 0.0;
        for (std::size_t i = 0; i < a.rows(); ++i) {
            const double* row = a.row_ptr(i);
            const double avi = av[i];
            if (avi == 0.0) continue;
            for (std::size_t k = 0; k < n; ++k) atav[k] += row[k] * avi;
        }
        double norm_sq = 0.0;
        for (double x : atav) norm_sq += x * x;
        const double norm = std::sqrt(norm_sq);
        if (norm == 0.0) return 0.0;  // v landed in the null space of A^T A
        double av_norm_sq = 0.0;
        for (double x : av) av_norm_sq += x * x;
        const double sigma = std::sqrt(av_norm_sq);  // ||Av|| with ||v|| = 1
        for (std::size_t k = 0; k < n; ++k) v[k] = atav[k] / norm;
        if (sigma_prev >= 0.0 && std::abs(sigma - sigma_prev) <= tol * std::max(sigma, 1.0))
            return sigma;
        sigma_prev = sigma;
    }
    throw NumericalError("operator_norm: power iteration did not converge within cap");
}

DenseMatrix mixing_chain_product(std::span<const DenseMatrix> schedule, std::size_t dim_if_empty) {
    if (schedule.empty()) return DenseMatrix::identity(dim_if_empty);
    const std::size_t n = schedule.front().rows();
    for (const DenseMatrix& w : schedule)
        if (w.rows() != n || w.cols() != n)
            throw DimensionError("mixing_chain_product: matrices must be square with equal dimension");
    DenseMatrix acc = schedule.front().transposed();
    for (std::size_t i = 1; i < schedule.size(); ++i)
        acc = multiply(acc, schedule[i].transposed());
    return acc;
}

}  // namespace coopsgd
