#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coopsgd/matrix.hpp"
#include "coopsgd/selection.hpp"

namespace coopsgd {

// Column-stochastic mixing matrix over m clients plus v auxiliary slots.
// Unselected clients are represented as all-zero columns (and contribute
// nothing through their rows); auxiliary slots are always active.
struct MixingMatrix {
    DenseMatrix w;           // (m+v) x (m+v)
    SelectionSet selected;   // clients with nonzero columns
    std::size_t aux_count = 0;
    // True when every nonzero column is identical, i.e. one aggregation step
    // drives all participants to the same point (uniform / dataset-weighted
    // averaging). Governs the broadcast step in the trainer.
    bool consensus = false;

    std::size_t dim() const { return w.rows(); }
    bool column_active(std::size_t c) const {
        return c >= selected.client_count || selected.contains(c);
    }
};

struct MixingValidity {
    bool ok = true;
    std::string violation;  // first violated invariant, empty when ok
};

// Uniform averaging over the selected clients: w_ij = 1/(cm) on the selected
// block, identity on the auxiliary block, zero elsewhere.
MixingMatrix build_uniform(std::size_t mplusv, const SelectionSet& selected, std::size_t aux_count = 0);

// Dataset-size-weighted averaging: selected column j gets entry
// |D_i| / sum_selected |D| in each selected row i.
MixingMatrix build_dataset_proportional(const std::vector<double>& sizes, const SelectionSet& selected,
                                        std::size_t aux_count = 0);

// Column-stochasticity check: each column either sums to 1 (within tol) with
// nonnegative entries, or is identically zero and matches an unselected
// client. Returns the first violated invariant by name.
MixingValidity validate(const MixingMatrix& w, double tol = 1e-9);

// Detects whether every active column of `w` is identical (exact comparison).
bool is_consensus_matrix(const DenseMatrix& w, const SelectionSet& selected, std::size_t aux_count);

// Upper bound on the consensus deviation of a column-stochastic matrix:
// delta = max(0, c (n-1) (1 - n^2 t1 t2)) where t1 t2 is the smallest
// product of the two smallest entries within a single nonzero column.
// `count_structural_zeros` keeps literal zero entries of active columns in
// the candidate pool (the literal formula); switching it off skips them.
double delta_bound(const MixingMatrix& w, double selected_fraction, bool count_structural_zeros = true);

// Brute-force ||Phi^T (I - J)||_F^2, the quantity delta_bound dominates.
// Zero rows of Phi^T (unselected clients) drop out of this product, which is
// why it differs from ||Phi^T - J||_F^2 whenever zero columns are present.
double consensus_deviation_sq(const DenseMatrix& phi);

// --- schedules ---------------------------------------------------------

enum class MixingKind {
    Static,            // one fixed matrix at every aggregation
    PeriodicList,      // cycles through a fixed list, one per round
    SeededRandomFamily,  // fresh Dirichlet-column draw per round
    UniformJ,          // uniform averaging over the current selected set
};

// Deterministic time-indexed source of mixing matrices. At iteration k the
// trainer applies the schedule's matrix when k mod tau == 0 and the identity
// otherwise; matrix_at() is a pure function of (round, selection).
class MixingSchedule {
public:
    static MixingSchedule static_matrix(DenseMatrix w, std::size_t tau, std::size_t m, std::size_t v);
    static MixingSchedule periodic_list(std::vector<DenseMatrix> ws, std::size_t tau, std::size_t m,
                                        std::size_t v);
    static MixingSchedule seeded_random_family(std::uint64_t seed, double concentration, std::size_t tau,
                                               std::size_t m, std::size_t v);
    static MixingSchedule uniform_j(std::size_t tau, std::size_t m, std::size_t v);
    // Dataset-proportional weights rebuilt over the selected set each round.
    static MixingSchedule dataset_proportional(std::vector<double> sizes, std::size_t tau, std::size_t m,
                                               std::size_t v);

    MixingKind kind() const { return kind_; }
    std::size_t tau() const { return tau_; }
    std::size_t dim() const { return m_ + v_; }

    // Same source, different communication period.
    MixingSchedule with_tau(std::size_t tau) const {
        MixingSchedule copy = *this;
        if (tau == 0) throw ConfigError("run.tau", "communication period must be at least 1");
        copy.tau_ = tau;
        return copy;
    }

    // The S_k rule: identity unless k mod tau == 0 (k is 1-based).
    bool aggregates_at(std::size_t k) const { return k % tau_ == 0; }

    MixingMatrix matrix_at(std::size_t round, const SelectionSet& selected) const;

private:
    MixingSchedule(MixingKind kind, std::size_t tau, std::size_t m, std::size_t v);

    MixingKind kind_;
    std::size_t tau_;
    std::size_t m_;
    std::size_t v_;
    std::vector<DenseMatrix> fixed_;
    std::vector<double> sizes_;
    std::uint64_t seed_ = 0;
    double concentration_ = 1.0;
    bool proportional_ = false;
};

// --- JSON wire format ---------------------------------------------------
// {"dim": n, "columns": [[...], ...]} column-major; validated on load.

std::string mixing_to_json(const MixingMatrix& w);
MixingMatrix mixing_from_json(const std::string& text);
MixingMatrix mixing_from_json_file(const std::string& path);
void mixing_to_json_file(const MixingMatrix& w, const std::string& path);

}  // namespace coopsgd
