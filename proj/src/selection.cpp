#include "coopsgd/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "coopsgd/rng.hpp"

namespace coopsgd {

bool SelectionSet::contains(std::size_t client) const {
    return std::binary_search(members.begin(), members.end(), client);
}

std::size_t selected_count(double fraction, std::size_t m) {
    if (!(fraction > 0.0) || fraction > 1.0)
        throw ConfigError("selection.c", "fraction must be in (0, 1]");
    const auto count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(m) + 0.5));
    if (count == 0) throw ConfigError("selection.c", "c * m rounds to zero clients");
    return std::min(count, m);
}

namespace {

// Partial Fisher-Yates over 0..m-1, keyed deterministically.
std::vector<std::size_t> sample_without_replacement(KeyedRng& rng, std::size_t m, std::size_t take) {
    std::vector<std::size_t> pool(m);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.next_below(m - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(take);
    std::sort(pool.begin(), pool.end());
    return pool;
}

}  // namespace

SelectionSet select(const SelectionPolicy& policy, std::size_t round, std::size_t m) {
    if (m == 0) throw ConfigError("selection", "client count must be at least 1");
    SelectionSet out;
    out.round = round;
    out.client_count = m;
    switch (policy.kind) {
        case SelectionKind::All: {
            out.members.resize(m);
            std::iota(out.members.begin(), out.members.end(), std::size_t{0});
            break;
        }
        case SelectionKind::StaticRandom: {
            const std::size_t take = selected_count(policy.fraction, m);
            KeyedRng rng{policy.seed, 0x5e1ec7ULL};
            out.members = sample_without_replacement(rng, m, take);
            break;
        }
        case SelectionKind::PerRoundRandom: {
            const std::size_t take = selected_count(policy.fraction, m);
            KeyedRng rng{policy.seed, 0x5e1ec7ULL, static_cast<std::uint64_t>(round) + 1};
            out.members = sample_without_replacement(rng, m, take);
            break;
        }
    }
    return out;
}

void zero_unselected_columns(DenseMatrix& x, const SelectionSet& sel) {
    for (std::size_t c = 0; c < sel.client_count && c < x.cols(); ++c)
        if (!sel.contains(c)) x.zero_column(c);
}

std::pair<DenseMatrix, DenseMatrix> zero_unselected(const DenseMatrix& x, const DenseMatrix& g,
                                                    const SelectionSet& sel) {
    if (x.rows() != g.rows() || x.cols() != g.cols())
        throw DimensionError("zero_unselected: state and gradient shapes differ");
    DenseMatrix xz = x;
    DenseMatrix gz = g;
    zero_unselected_columns(xz, sel);
    zero_unselected_columns(gz, sel);
    return {std::move(xz), std::move(gz)};
}

}  // namespace coopsgd
