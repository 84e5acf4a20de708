#include <doctest.h>

#include "coopsgd/selection.hpp"
#include "coopsgd/rng.hpp"
#include "test_support.hpp"

using namespace coopsgd;
using namespace coopsgd::testing;

TEST_CASE("select: all clients") {
    SelectionPolicy policy;
    policy.kind = SelectionKind::All;
    for (std::size_t round : {0u, 3u, 9u}) {
        const SelectionSet sel = select(policy, round, 8);
        REQUIRE(sel.members.size() == 8);
        for (std::size_t i = 0; i < 8; ++i) CHECK(sel.members[i] == i);
    }
}

TEST_CASE("select: static-random repeats the same sample") {
    SelectionPolicy policy;
    policy.kind = SelectionKind::StaticRandom;
    policy.fraction = 0.5;
    policy.seed = 42;
    const SelectionSet r0 = select(policy, 0, 8);
    const SelectionSet r5 = select(policy, 5, 8);
    CHECK(r0.members == r5.members);
    CHECK(r0.members.size() == 4);
}

TEST_CASE("select: per-round-random draws per round with fixed cardinality") {
    SelectionPolicy policy;
    policy.kind = SelectionKind::PerRoundRandom;
    policy.fraction = 10.0 / 75.0;
    policy.seed = 42;
    bool any_diff = false;
    std::vector<std::size_t> prev;
    for (std::size_t round = 0; round < 20; ++round) {
        const SelectionSet sel = select(policy, round, 75);
        CHECK(sel.members.size() == 10);
        for (std::size_t i = 0; i + 1 < sel.members.size(); ++i)
            CHECK(sel.members[i] < sel.members[i + 1]);
        CHECK(sel.members.back() < 75);
        if (round > 0 && sel.members != prev) any_diff = true;
        prev = sel.members;
    }
    CHECK(any_diff);

    // Pure function of (seed, round): call order is irrelevant.
    const SelectionSet again = select(policy, 7, 75);
    const SelectionSet direct = select(policy, 7, 75);
    CHECK(again.members == direct.members);
}

TEST_CASE("selected count rounds half-up and rejects empty selections") {
    CHECK(selected_count(0.5, 8) == 4);
    CHECK(selected_count(0.5, 7) == 4);  // 3.5 rounds up
    CHECK(selected_count(1.0, 3) == 3);
    CHECK_THROWS_AS(selected_count(0.01, 4), ConfigError);
    CHECK_THROWS_AS(selected_count(1.5, 4), ConfigError);
}

TEST_CASE("zero_unselected blanks client columns and keeps auxiliaries") {
    KeyedRng rng{5u};
    const std::size_t d = 4, m = 5, v = 2;
    DenseMatrix x = random_matrix(rng, d, m + v);
    DenseMatrix g = random_matrix(rng, d, m + v);

    SelectionSet all;
    all.client_count = m;
    all.members = {0, 1, 2, 3, 4};
    const auto [xa, ga] = zero_unselected(x, g, all);
    CHECK(max_abs_diff(xa, x) == 0.0);
    CHECK(max_abs_diff(ga, g) == 0.0);

    SelectionSet partial;
    partial.client_count = m;
    partial.members = {1, 3};
    const auto [xp, gp] = zero_unselected(x, g, partial);
    double kept = 0.0;
    for (std::size_t c : {1u, 3u, 5u, 6u})
        for (std::size_t r = 0; r < d; ++r) kept += x(r, c) * x(r, c);
    CHECK(frobenius_norm_sq(xp) == doctest::Approx(kept).epsilon(1e-12));
    for (std::size_t c : {0u, 2u, 4u})
        for (std::size_t r = 0; r < d; ++r) {
            CHECK(xp(r, c) == 0.0);
            CHECK(gp(r, c) == 0.0);
        }
    // auxiliary columns untouched
    for (std::size_t c = m; c < m + v; ++c)
        for (std::size_t r = 0; r < d; ++r) CHECK(xp(r, c) == x(r, c));
}

TEST_CASE("cardinality is constant across rounds") {
    SelectionPolicy policy;
    policy.kind = SelectionKind::PerRoundRandom;
    policy.fraction = 0.4;
    policy.seed = 11;
    const std::size_t m = 13;
    const std::size_t want = selected_count(policy.fraction, m);
    for (std::size_t round = 0; round < 50; ++round)
        CHECK(select(policy, round, m).members.size() == want);
}
