#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "coopsgd/matrix.hpp"
#include "coopsgd/mixing.hpp"
#include "coopsgd/rng.hpp"
#include "coopsgd/selection.hpp"

namespace coopsgd::testing {

// Naive triple-loop product, written independently of the library kernel.
inline DenseMatrix naive_multiply(const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
            out(i, j) = acc;
        }
    return out;
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.entries().size(); ++i)
        worst = std::max(worst, std::abs(a.entries()[i] - b.entries()[i]));
    return worst;
}

// Random matrix with standard normal entries.
inline DenseMatrix random_matrix(KeyedRng& rng, std::size_t rows, std::size_t cols) {
    DenseMatrix out(rows, cols);
    for (double& v : out.entries()) v = rng.next_gaussian();
    return out;
}

// Random column-stochastic mixing matrix over n slots with `active` nonzero
// columns. When `support_all_rows` is set the Dirichlet weight is spread over
// every row, otherwise only over the active ones.
inline MixingMatrix random_column_stochastic(KeyedRng& rng, std::size_t n, std::size_t active,
                                             bool support_all_rows) {
    SelectionSet sel;
    sel.client_count = n;
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t i = 0; i < active; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.next_below(n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(active);
    std::sort(pool.begin(), pool.end());
    sel.members = pool;

    MixingMatrix out{DenseMatrix(n, n), sel, 0, false};
    for (std::size_t j : sel.members) {
        if (support_all_rows) {
            const std::vector<double> col = rng.next_dirichlet(n, 1.0);
            for (std::size_t i = 0; i < n; ++i) out.w(i, j) = col[i];
        } else {
            const std::vector<double> col = rng.next_dirichlet(active, 1.0);
            for (std::size_t r = 0; r < active; ++r) out.w(sel.members[r], j) = col[r];
        }
    }
    return out;
}

inline double l2_norm(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

}  // namespace coopsgd::testing
