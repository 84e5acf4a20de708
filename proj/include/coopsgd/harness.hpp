#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "coopsgd/bounds.hpp"
#include "coopsgd/config.hpp"
#include "coopsgd/mixing.hpp"
#include "coopsgd/objectives.hpp"
#include "coopsgd/trainer.hpp"

namespace coopsgd {

struct ObjectiveSpec {
    enum class Kind { Quadratic, Logistic } kind = Kind::Quadratic;
    std::size_t d = 1;
    std::size_t m = 1;
    std::uint64_t seed = 0;
    // quadratic
    std::vector<double> spectrum;
    double kappa_target = 0.0;
    double sigma = 0.0;
    // logistic
    std::size_t samples = 0;
    PartitionKind partition = PartitionKind::Iid;
    double alpha = 1.0;
    std::size_t batch = 1;
    std::string dataset_csv;  // optional import
};

struct MixingSpec {
    enum class Kind { UniformJ, Static, PeriodicList, RandomFamily, DatasetProportional } kind =
        Kind::UniformJ;
    std::string file;
    std::vector<std::string> files;
    double concentration = 1.0;
    std::uint64_t seed = 0;
    std::vector<double> sizes;
};

struct SweepAxes {
    std::optional<std::vector<double>> tau;
    std::optional<std::vector<double>> fraction;
    std::optional<std::vector<double>> init_scale;
    std::optional<std::vector<double>> eta;
};

struct ExperimentConfig {
    ObjectiveSpec objective;
    Algorithm algorithm = Algorithm::Psasgd;
    double eta = 0.1;
    std::size_t tau = 1;
    std::size_t iterations = 1;
    std::size_t aux = 0;  // v; fixed to 1 for easgd
    InitKind init = InitKind::Zero;
    double init_scale = 1.0;
    double easgd_alpha = 0.0;
    SelectionKind selection = SelectionKind::All;
    double fraction = 1.0;
    MixingSpec mixing;
    std::vector<std::uint64_t> seeds;
    SweepAxes sweep;
    // bound-report inputs that the suite cannot provide
    std::optional<double> kappa_override;
    std::optional<double> loss_floor_override;
    bool x1_term_over_k = false;
};

// One resolved point of the sweep grid.
struct SweepPoint {
    std::size_t tau = 1;
    double fraction = 1.0;
    double init_scale = 1.0;
    double eta = 0.1;

    std::string label() const;
    std::string hash() const;  // stable 16-hex directory name
};

struct RunOutcome {
    SweepPoint point;
    std::uint64_t seed = 0;
    bool diverged = false;
    std::size_t diverged_at = 0;
    RunTrace trace;  // full trace, or the prefix up to divergence
    BoundInputs bound_inputs;
    BoundReport bound_report;
    bool bound_applicable = false;  // kappa known (or zero) and run completed
};

// Parses and validates the experiment grammar; throws ConfigError with the
// offending field path. Honors the COOPSGD_SEED environment override.
ExperimentConfig load_experiment(const ConfigMap& map);

std::vector<SweepPoint> expand_sweep(const ExperimentConfig& cfg);

std::shared_ptr<const ObjectiveSuite> build_suite(const ObjectiveSpec& spec);

MixingSchedule build_schedule(const ExperimentConfig& cfg, const SweepPoint& point);

RunOutcome execute_run(const ExperimentConfig& cfg, const ObjectiveSuite& suite,
                       const SweepPoint& point, std::uint64_t seed);

struct ExperimentResult {
    std::vector<RunOutcome> outcomes;
    std::size_t completed = 0;
    std::size_t diverged = 0;
};

// Runs the whole sweep (points x seeds), writes per-run trace.csv,
// summary.json and bound_report.json under <out>/<point-hash>/<seed>/ plus a
// top-level comparison.csv. `jobs` sizes the worker pool; outputs are
// byte-identical for any job count.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const ConfigMap& echo,
                                const std::string& out_dir, std::size_t jobs);

// Bound report for every sweep point without simulating: initial state and
// per-round mixing matrices are generated analytically.
void write_bound_reports(const ExperimentConfig& cfg, const std::string& out_path);

struct SelectionComparison {
    std::vector<double> per_round_final_losses;
    std::vector<double> static_final_losses;
    double per_round_median = 0.0;
    double static_median = 0.0;
};

// Runs per-round-random vs static-random selection with matched seeds and
// reports the median final global loss per mode.
SelectionComparison compare_selection_modes(const ExperimentConfig& cfg, const ConfigMap& echo,
                                            const std::string& out_dir, std::size_t jobs);

}  // namespace coopsgd
