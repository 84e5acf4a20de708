#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

#include "coopsgd/errors.hpp"
#include "coopsgd/matrix.hpp"

namespace coopsgd {

// Clients participating in one communication round. Indices are sorted and
// unique, in [0, client_count).
struct SelectionSet {
    std::size_t round = 0;
    std::size_t client_count = 0;
    std::vector<std::size_t> members;

    bool contains(std::size_t client) const;
};

enum class SelectionKind { All, StaticRandom, PerRoundRandom };

struct SelectionPolicy {
    SelectionKind kind = SelectionKind::All;
    double fraction = 1.0;  // c, in (0, 1]
    std::uint64_t seed = 0;
};

// Number of clients per round: round-half-up of c * m; must be at least 1.
std::size_t selected_count(double fraction, std::size_t m);

// Deterministic per-round selection. `all` ignores the seed; `static-random`
// draws one sample reused every round; `per-round-random` keys the stream by
// (seed, round) so the sample is independent of call order.
SelectionSet select(const SelectionPolicy& policy, std::size_t round, std::size_t m);

// Zero the model and gradient columns of unselected clients; auxiliary
// columns (indices >= m) are left untouched. This is the bookkeeping that
// keeps the averaged-model recursion exact under partial participation.
std::pair<DenseMatrix, DenseMatrix> zero_unselected(const DenseMatrix& x, const DenseMatrix& g,
                                                    const SelectionSet& sel);

// In-place single-matrix variant used by the training loop.
void zero_unselected_columns(DenseMatrix& x, const SelectionSet& sel);

}  // namespace coopsgd
