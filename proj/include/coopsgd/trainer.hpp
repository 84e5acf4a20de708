#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coopsgd/matrix.hpp"
#include "coopsgd/mixing.hpp"
#include "coopsgd/objectives.hpp"
#include "coopsgd/selection.hpp"

namespace coopsgd {

// d x (m+v) state: one column per client model followed by the auxiliary
// columns. The accounting view (unselected client columns zeroed) is what
// enters the update rule and the recorded trace.
struct StateMatrix {
    std::size_t d = 0;
    std::size_t m = 0;
    std::size_t v = 0;
    DenseMatrix columns;  // d x (m+v)

    StateMatrix(std::size_t d_, std::size_t m_, std::size_t v_)
        : d(d_), m(m_), v(v_), columns(d_, m_ + v_) {}

    std::size_t width() const { return m + v; }
};

enum class Algorithm { Unified, Psasgd, Dpsgd, FullySync, Easgd };

enum class InitKind { Zero, Scaled };

struct RunConfig {
    Algorithm algorithm = Algorithm::Unified;
    double eta = 0.1;
    std::size_t tau = 1;
    std::size_t iterations = 1;  // K
    SelectionPolicy selection;
    double easgd_alpha = 0.0;  // elastic coefficient; easgd only
    InitKind init = InitKind::Zero;
    double init_scale = 1.0;
    std::uint64_t seed = 0;  // drives init, gradient noise and selection
};

struct TraceRecord {
    std::size_t k = 0;
    double loss = 0.0;
    double grad_norm_sq = 0.0;
    double consensus_sq = 0.0;
    bool aggregated = false;
    std::vector<std::size_t> selected;
};

struct RunTrace {
    std::vector<TraceRecord> records;  // length K, indexed by iterate u_1..u_K
    double running_mean_grad_sq = 0.0;
    double final_loss = 0.0;        // global loss of the deployable client average
    double x1_frob_sq = 0.0;        // ||X_1||_F^2 of the accounting state
    double max_delta = 0.0;         // largest delta_bound over applied mixing matrices
    double realized_fraction = 1.0; // |C_k| / m actually used
    // Largest per-iteration deviation from the averaged-model recursion
    // u_{k+1} = u_k - eta_eff * mean selected gradient.
    double max_avg_model_residual = 0.0;
    std::vector<double> final_averaged_model;

    std::string to_csv() const;
};

// Thrown by run() on blow-up; carries the trace recorded so far.
class TrainingDiverged : public DivergenceError {
public:
    TrainingDiverged(std::size_t k, RunTrace prefix)
        : DivergenceError("training diverged at iteration " + std::to_string(k), k),
          trace(std::move(prefix)) {}

    RunTrace trace;
};

// Averaged model u = X 1/(m+v) over all columns including auxiliaries.
std::vector<double> averaged_model(const StateMatrix& x);

// Consensus error ||X (I - J)||_F^2 of the accounting state.
double consensus_error_sq(const StateMatrix& x);

// One update X_{k+1} = (X_k - eta G_k) S_k^T. `x` must already carry zero
// columns for unselected clients; G holds gradient columns for the selected
// clients only. Applied when the schedule aggregates at k; identity otherwise.
StateMatrix step(const StateMatrix& x, const DenseMatrix& g, const MixingMatrix& w, double eta);

// Single EASGD update (elastic local step plus anchor move at aggregation
// iterations). x is d x m client columns, z the anchor column.
void easgd_update(DenseMatrix& x, std::vector<double>& z, const DenseMatrix& g, double eta, double alpha,
                  std::size_t k, std::size_t tau);

// Initial d x (m+v) state: all columns zero, or init_scale times a seeded
// base vector (every model starts at the same point).
StateMatrix make_initial_state(const RunConfig& config, std::size_t d, std::size_t m, std::size_t v);

// Full K-iteration run of the configured algorithm against the suite.
// Throws DivergenceError (carrying the trace prefix position) when any state
// entry exceeds the blow-up guard.
RunTrace run(const RunConfig& config, const ObjectiveSuite& suite, const MixingSchedule& schedule);

inline constexpr double kDivergenceGuard = 1e12;

}  // namespace coopsgd
