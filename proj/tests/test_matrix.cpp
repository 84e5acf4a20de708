#include <doctest.h>

#include <limits>

#include "coopsgd/matrix.hpp"
#include "coopsgd/rng.hpp"
#include "test_support.hpp"

using namespace coopsgd;
using namespace coopsgd::testing;

TEST_CASE("averaging matrix") {
    const DenseMatrix j2 = averaging_matrix(2);
    for (double v : j2.entries()) CHECK(v == doctest::Approx(0.5));
    const DenseMatrix j1 = averaging_matrix(1);
    CHECK(j1(0, 0) == doctest::Approx(1.0));
    const DenseMatrix j4 = averaging_matrix(4);
    for (double v : j4.entries()) CHECK(v == doctest::Approx(0.25));
    CHECK_THROWS_AS(averaging_matrix(0), DimensionError);
}

TEST_CASE("frobenius norm squared") {
    DenseMatrix i_minus_j = DenseMatrix::identity(2);
    const DenseMatrix j = averaging_matrix(2);
    for (std::size_t i = 0; i < 4; ++i) i_minus_j.entries()[i] -= j.entries()[i];
    CHECK(frobenius_norm_sq(i_minus_j) == doctest::Approx(1.0).epsilon(1e-12));

    CHECK(frobenius_norm_sq(DenseMatrix(3, 3)) == 0.0);

    DenseMatrix row(1, 2);
    row(0, 0) = 3.0;
    row(0, 1) = 4.0;
    CHECK(frobenius_norm_sq(row) == doctest::Approx(25.0));
}

TEST_CASE("operator norm") {
    CHECK(operator_norm(averaging_matrix(5)) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(operator_norm(DenseMatrix::identity(7)) == doctest::Approx(1.0).epsilon(1e-9));
    DenseMatrix diag(2, 2);
    diag(0, 0) = 2.0;
    diag(1, 1) = 0.5;
    CHECK(operator_norm(diag) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(operator_norm(DenseMatrix(4, 4)) == 0.0);
    CHECK_THROWS_AS(operator_norm(diag, -1.0), NumericalError);
}

TEST_CASE("mixing chain product") {
    const DenseMatrix j = averaging_matrix(3);
    std::vector<DenseMatrix> jj{j, j};
    const DenseMatrix prod = mixing_chain_product(jj, 3);
    CHECK(max_abs_diff(prod, j) < 1e-15);  // J is idempotent and symmetric

    const DenseMatrix empty = mixing_chain_product({}, 4);
    CHECK(max_abs_diff(empty, DenseMatrix::identity(4)) == 0.0);

    KeyedRng rng{31u};
    const MixingMatrix w1 = random_column_stochastic(rng, 5, 5, true);
    const MixingMatrix w2 = random_column_stochastic(rng, 5, 5, true);
    std::vector<DenseMatrix> ws{w1.w, w2.w};
    const DenseMatrix got = mixing_chain_product(ws, 5);
    const DenseMatrix want = naive_multiply(w1.w.transposed(), w2.w.transposed());
    CHECK(max_abs_diff(got, want) < 1e-12);

    std::vector<DenseMatrix> bad{DenseMatrix::identity(2), DenseMatrix::identity(3)};
    CHECK_THROWS_AS(mixing_chain_product(bad, 2), DimensionError);
}

TEST_CASE("product of column-stochastic matrices stays column-stochastic") {
    KeyedRng rng{101u};
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.next_below(6);
        const MixingMatrix a = random_column_stochastic(rng, n, n, true);
        const MixingMatrix b = random_column_stochastic(rng, n, n, true);
        const DenseMatrix prod = naive_multiply(b.w, a.w);
        for (std::size_t j = 0; j < n; ++j) {
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) sum += prod(i, j);
            CHECK(std::abs(sum - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("norm inequalities on random matrices") {
    KeyedRng rng{202u};
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t r = 1 + rng.next_below(6);
        const std::size_t c = 1 + rng.next_below(6);
        const DenseMatrix a = random_matrix(rng, r, c);
        CHECK(operator_norm(a) <= frobenius_norm(a) + 1e-9);
    }
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t m = 1 + rng.next_below(5);
        const std::size_t n = 1 + rng.next_below(5);
        const DenseMatrix a = random_matrix(rng, m, n);
        const DenseMatrix b = random_matrix(rng, n, m);
        const DenseMatrix ab = multiply(a, b);
        double trace = 0.0;
        for (std::size_t i = 0; i < m; ++i) trace += ab(i, i);
        CHECK(std::abs(trace) <= frobenius_norm(a) * frobenius_norm(b) + 1e-9);
        CHECK(frobenius_norm(ab) <= operator_norm(a) * frobenius_norm(b) + 1e-9);
    }
}

TEST_CASE("dense matrix plumbing") {
    CHECK_THROWS_AS(DenseMatrix(0, 3), DimensionError);
    CHECK_THROWS_AS(DenseMatrix(2, 2, {1.0, 2.0}), DimensionError);
    DenseMatrix a(2, 3);
    a(1, 2) = 5.0;
    CHECK(a.transposed()(2, 1) == 5.0);
    CHECK(a.all_finite());
    a(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK(!a.all_finite());
    CHECK_THROWS_AS(multiply(DenseMatrix(2, 3), DenseMatrix(2, 3)), DimensionError);
}
