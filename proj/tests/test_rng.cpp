#include <doctest.h>

#include <cmath>

#include "coopsgd/rng.hpp"

using namespace coopsgd;

TEST_CASE("keyed streams are pure functions of the key") {
    KeyedRng a{1u, 2u, 3u};
    KeyedRng b{1u, 2u, 3u};
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    KeyedRng c{1u, 2u, 4u};
    bool any_diff = false;
    KeyedRng a2{1u, 2u, 3u};
    for (int i = 0; i < 16; ++i) any_diff = any_diff || a2.next_u64() != c.next_u64();
    CHECK(any_diff);
}

TEST_CASE("uniform and bounded draws stay in range") {
    KeyedRng rng{9u};
    for (int i = 0; i < 1000; ++i) {
        const double u = rng.next_double();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(rng.next_below(7) < 7);
    }
    CHECK_THROWS_AS(rng.next_below(0), NumericalError);
}

TEST_CASE("gaussian moments") {
    KeyedRng rng{123u};
    const int n = 200000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = rng.next_gaussian();
        sum += g;
        sum_sq += g * g;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(sum_sq / n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("gamma and dirichlet draws") {
    KeyedRng rng{77u};
    double sum = 0.0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
        const double g = rng.next_gamma(2.5);
        CHECK(g > 0.0);
        sum += g;
    }
    CHECK(sum / n == doctest::Approx(2.5).epsilon(0.03));  // E[Gamma(a,1)] = a

    for (double alpha : {0.3, 1.0, 8.0}) {
        const std::vector<double> p = rng.next_dirichlet(6, alpha);
        double total = 0.0;
        for (double v : p) {
            CHECK(v >= 0.0);
            total += v;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(rng.next_gamma(0.0), NumericalError);
}
