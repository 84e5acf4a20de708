#include "coopsgd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace fs = std::filesystem;

namespace coopsgd {

namespace {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<double> spectrum_from_config(const ConfigMap& map, std::size_t d) {
    if (map.has("objective.spectrum")) {
        const ConfigValue& v = map.values().at("objective.spectrum");
        if (const auto* s = std::get_if<std::string>(&v)) {
            // "linspace:<lo>:<hi>"
            if (s->rfind("linspace:", 0) != 0)
                throw ConfigError("objective.spectrum", "expected a list or 'linspace:lo:hi'");
            const std::size_t a = s->find(':');
            const std::size_t b = s->find(':', a + 1);
            if (b == std::string::npos)
                throw ConfigError("objective.spectrum", "expected 'linspace:lo:hi'");
            const double lo = std::atof(s->substr(a + 1, b - a - 1).c_str());
            const double hi = std::atof(s->substr(b + 1).c_str());
            std::vector<double> out(d);
            for (std::size_t i = 0; i < d; ++i)
                out[i] = d == 1 ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(d - 1);
            return out;
        }
        return map.require_number_list("objective.spectrum");
    }
    return std::vector<double>(d, 1.0);
}

Algorithm algorithm_from_string(const std::string& s) {
    if (s == "unified") return Algorithm::Unified;
    if (s == "psasgd") return Algorithm::Psasgd;
    if (s == "dpsgd") return Algorithm::Dpsgd;
    if (s == "fully-sync") return Algorithm::FullySync;
    if (s == "easgd") return Algorithm::Easgd;
    throw ConfigError("algorithm", "unknown algorithm '" + s + "'");
}

SelectionKind selection_from_string(const std::string& s) {
    if (s == "all") return SelectionKind::All;
    if (s == "static-random") return SelectionKind::StaticRandom;
    if (s == "per-round-random") return SelectionKind::PerRoundRandom;
    throw ConfigError("selection.kind", "unknown selection kind '" + s + "'");
}

MixingSpec::Kind mixing_kind_from_string(const std::string& s) {
    if (s == "uniform-j") return MixingSpec::Kind::UniformJ;
    if (s == "static") return MixingSpec::Kind::Static;
    if (s == "periodic-list") return MixingSpec::Kind::PeriodicList;
    if (s == "random-family") return MixingSpec::Kind::RandomFamily;
    if (s == "dataset-proportional") return MixingSpec::Kind::DatasetProportional;
    throw ConfigError("mixing.kind", "unknown mixing kind '" + s + "'");
}

std::vector<std::string> known_config_keys() {
    return {"objective", "algorithm", "run",   "easgd", "selection",
            "mixing",    "seeds",     "sweep", "bounds"};
}

double median_of(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

nlohmann::json config_echo_json(const ConfigMap& echo) {
    nlohmann::json doc;
    for (const auto& [key, value] : echo.values()) {
        std::visit([&](const auto& v) { doc[key] = v; }, value);
    }
    return doc;
}

}  // namespace

std::string SweepPoint::label() const {
    std::ostringstream out;
    out << "tau=" << tau << ",c=" << format_double(fraction) << ",init_scale="
        << format_double(init_scale) << ",eta=" << format_double(eta);
    return out.str();
}

std::string SweepPoint::hash() const {
    // FNV-1a over the canonical label; stable across runs and platforms.
    const std::string text = label();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ExperimentConfig load_experiment(const ConfigMap& map) {
    const std::vector<std::string> unknown = map.unknown_keys(known_config_keys());
    if (!unknown.empty()) throw ConfigError(unknown.front(), "unknown configuration key");

    ExperimentConfig cfg;

    const std::string objective_kind = map.string_or("objective.kind", "quadratic");
    if (objective_kind == "quadratic") {
        cfg.objective.kind = ObjectiveSpec::Kind::Quadratic;
    } else if (objective_kind == "logistic") {
        cfg.objective.kind = ObjectiveSpec::Kind::Logistic;
    } else {
        throw ConfigError("objective.kind", "unknown objective '" + objective_kind + "'");
    }
    const std::int64_t d = map.require_integer("objective.d");
    const std::int64_t m = map.require_integer("objective.m");
    if (d < 1) throw ConfigError("objective.d", "dimension must be at least 1");
    if (m < 1) throw ConfigError("objective.m", "client count must be at least 1");
    cfg.objective.d = static_cast<std::size_t>(d);
    cfg.objective.m = static_cast<std::size_t>(m);
    cfg.objective.seed = static_cast<std::uint64_t>(map.integer_or("objective.seed", 7));
    if (cfg.objective.kind == ObjectiveSpec::Kind::Quadratic) {
        cfg.objective.spectrum = spectrum_from_config(map, cfg.objective.d);
        if (cfg.objective.spectrum.size() != cfg.objective.d)
            throw ConfigError("objective.spectrum", "need one eigenvalue per dimension");
        cfg.objective.kappa_target = map.number_or("objective.kappa", 0.0);
        cfg.objective.sigma = map.number_or("objective.sigma", 0.0);
    } else {
        cfg.objective.samples = static_cast<std::size_t>(map.integer_or("objective.samples", 1024));
        const std::string partition = map.string_or("objective.partition", "iid");
        if (partition == "iid") {
            cfg.objective.partition = PartitionKind::Iid;
        } else if (partition == "dirichlet") {
            cfg.objective.partition = PartitionKind::Dirichlet;
        } else {
            throw ConfigError("objective.partition", "expected 'iid' or 'dirichlet'");
        }
        cfg.objective.alpha = map.number_or("objective.alpha", 0.6);
        cfg.objective.batch = static_cast<std::size_t>(map.integer_or("objective.batch", 32));
        cfg.objective.dataset_csv = map.string_or("objective.dataset", "");
    }

    cfg.algorithm = algorithm_from_string(map.string_or("algorithm", "psasgd"));
    cfg.eta = map.require_number("run.eta");
    const std::int64_t tau = map.integer_or("run.tau", 1);
    const std::int64_t k = map.require_integer("run.k");
    if (tau < 1) throw ConfigError("run.tau", "communication period must be at least 1");
    if (k < 1) throw ConfigError("run.k", "iteration count must be at least 1");
    cfg.tau = static_cast<std::size_t>(tau);
    cfg.iterations = static_cast<std::size_t>(k);
    const std::int64_t aux = map.integer_or("run.aux", 0);
    if (aux < 0) throw ConfigError("run.aux", "auxiliary count must be nonnegative");
    cfg.aux = static_cast<std::size_t>(aux);
    const std::string init = map.string_or("run.init", "zero");
    if (init == "zero") {
        cfg.init = InitKind::Zero;
    } else if (init == "scaled") {
        cfg.init = InitKind::Scaled;
    } else {
        throw ConfigError("run.init", "expected 'zero' or 'scaled'");
    }
    cfg.init_scale = map.number_or("run.init_scale", 1.0);
    cfg.easgd_alpha = map.number_or("easgd.alpha", 0.0);
    if (cfg.algorithm == Algorithm::Easgd) {
        cfg.aux = 1;
        const double m_alpha = cfg.easgd_alpha * static_cast<double>(cfg.objective.m);
        if (!(m_alpha > 0.0) || m_alpha > 1.0)
            throw ConfigError("easgd.alpha", "need 0 < m*alpha <= 1");
    }

    cfg.selection = selection_from_string(map.string_or("selection.kind", "all"));
    cfg.fraction = map.number_or("selection.c", 1.0);
    if (!(cfg.fraction > 0.0) || cfg.fraction > 1.0)
        throw ConfigError("selection.c", "fraction must be in (0, 1]");
    if (cfg.selection != SelectionKind::All) selected_count(cfg.fraction, cfg.objective.m);

    cfg.mixing.kind = mixing_kind_from_string(map.string_or("mixing.kind", "uniform-j"));
    cfg.mixing.file = map.string_or("mixing.file", "");
    cfg.mixing.files = map.string_list_or_empty("mixing.files");
    cfg.mixing.concentration = map.number_or("mixing.concentration", 1.0);
    cfg.mixing.seed = static_cast<std::uint64_t>(map.integer_or("mixing.seed", 0));
    if (map.has("mixing.sizes")) cfg.mixing.sizes = map.require_number_list("mixing.sizes");
    if (cfg.mixing.kind == MixingSpec::Kind::Static && cfg.mixing.file.empty())
        throw ConfigError("mixing.file", "static mixing needs a matrix file");
    if (cfg.mixing.kind == MixingSpec::Kind::PeriodicList && cfg.mixing.files.empty())
        throw ConfigError("mixing.files", "periodic-list mixing needs matrix files");
    if (cfg.mixing.kind == MixingSpec::Kind::DatasetProportional &&
        cfg.mixing.sizes.size() != cfg.objective.m)
        throw ConfigError("mixing.sizes", "need one dataset size per client");

    const std::vector<double> seed_list = map.number_list("seeds").value_or(std::vector<double>{1.0});
    for (double s : seed_list) cfg.seeds.push_back(static_cast<std::uint64_t>(std::llround(s)));
    if (cfg.seeds.empty()) throw ConfigError("seeds", "seed list must not be empty");
    if (const char* env = std::getenv("COOPSGD_SEED")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end == env || *end != '\0') throw ConfigError("seeds", "COOPSGD_SEED is not an integer");
        cfg.seeds = {static_cast<std::uint64_t>(v)};
    }

    cfg.sweep.tau = map.number_list("sweep.tau");
    cfg.sweep.fraction = map.number_list("sweep.c");
    cfg.sweep.init_scale = map.number_list("sweep.init_scale");
    cfg.sweep.eta = map.number_list("sweep.eta");

    if (map.has("bounds.kappa")) cfg.kappa_override = map.require_number("bounds.kappa");
    if (map.has("bounds.f_inf")) cfg.loss_floor_override = map.require_number("bounds.f_inf");
    cfg.x1_term_over_k = map.bool_or("bounds.x1_term_over_k", false);

    return cfg;
}

std::vector<SweepPoint> expand_sweep(const ExperimentConfig& cfg) {
    const std::vector<double> taus =
        cfg.sweep.tau.value_or(std::vector<double>{static_cast<double>(cfg.tau)});
    const std::vector<double> fractions = cfg.sweep.fraction.value_or(std::vector<double>{cfg.fraction});
    const std::vector<double> scales =
        cfg.sweep.init_scale.value_or(std::vector<double>{cfg.init_scale});
    const std::vector<double> etas = cfg.sweep.eta.value_or(std::vector<double>{cfg.eta});

    std::vector<SweepPoint> points;
    for (double t : taus)
        for (double c : fractions)
            for (double s : scales)
                for (double e : etas) {
                    SweepPoint p;
                    if (t < 1.0 || std::floor(t) != t)
                        throw ConfigError("sweep.tau", "periods must be positive integers");
                    p.tau = static_cast<std::size_t>(t);
                    p.fraction = c;
                    p.init_scale = s;
                    p.eta = e;
                    points.push_back(p);
                }
    return points;
}

std::shared_ptr<const ObjectiveSuite> build_suite(const ObjectiveSpec& spec) {
    if (spec.kind == ObjectiveSpec::Kind::Quadratic) {
        return std::make_shared<QuadraticSuite>(spec.d, spec.m, spec.spectrum, spec.kappa_target,
                                                spec.sigma, spec.seed);
    }
    if (!spec.dataset_csv.empty()) {
        std::ifstream in(spec.dataset_csv);
        if (!in) throw ConfigError("objective.dataset", "cannot open " + spec.dataset_csv);
        std::vector<double> features;
        std::vector<int> labels;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream row(line);
            std::string cell;
            std::vector<double> values;
            while (std::getline(row, cell, ',')) values.push_back(std::atof(cell.c_str()));
            if (values.size() != spec.d + 1)
                throw ConfigError("objective.dataset", "expected d features plus a label per row");
            for (std::size_t i = 0; i < spec.d; ++i) features.push_back(values[i]);
            labels.push_back(static_cast<int>(values.back()));
        }
        return std::make_shared<LogisticSuite>(spec.d, spec.m, std::move(features), std::move(labels),
                                               spec.partition, spec.alpha, spec.batch, spec.seed);
    }
    return std::make_shared<LogisticSuite>(spec.d, spec.m, spec.samples, spec.partition, spec.alpha,
                                           spec.batch, spec.seed);
}

MixingSchedule build_schedule(const ExperimentConfig& cfg, const SweepPoint& point) {
    const std::size_t m = cfg.objective.m;
    const std::size_t v = cfg.aux;
    switch (cfg.mixing.kind) {
        case MixingSpec::Kind::UniformJ:
            return MixingSchedule::uniform_j(point.tau, m, v);
        case MixingSpec::Kind::Static:
            return MixingSchedule::static_matrix(mixing_from_json_file(cfg.mixing.file).w, point.tau, m,
                                                 v);
        case MixingSpec::Kind::PeriodicList: {
            std::vector<DenseMatrix> ws;
            for (const std::string& path : cfg.mixing.files)
                ws.push_back(mixing_from_json_file(path).w);
            return MixingSchedule::periodic_list(std::move(ws), point.tau, m, v);
        }
        case MixingSpec::Kind::RandomFamily:
            return MixingSchedule::seeded_random_family(cfg.mixing.seed, cfg.mixing.concentration,
                                                        point.tau, m, v);
        case MixingSpec::Kind::DatasetProportional:
            return MixingSchedule::dataset_proportional(cfg.mixing.sizes, point.tau, m, v);
    }
    throw ConfigError("mixing.kind", "unreachable");
}

namespace {

RunConfig run_config_for(const ExperimentConfig& cfg, const SweepPoint& point, std::uint64_t seed) {
    RunConfig rc;
    rc.algorithm = cfg.algorithm;
    rc.eta = point.eta;
    rc.tau = point.tau;
    rc.iterations = cfg.iterations;
    rc.selection.kind = cfg.selection;
    rc.selection.fraction = point.fraction;
    rc.selection.seed = seed;
    rc.easgd_alpha = cfg.easgd_alpha;
    rc.init = cfg.init;
    rc.init_scale = point.init_scale;
    rc.seed = seed;
    return rc;
}

BoundInputs bound_inputs_for(const ExperimentConfig& cfg, const ObjectiveSuite& suite,
                             const SweepPoint& point, const RunTrace& trace) {
    BoundInputs in;
    in.smoothness = suite.smoothness();
    in.sigma = suite.noise_sigma();
    in.kappa = cfg.kappa_override.value_or(suite.kappa());
    in.initial_loss = trace.records.empty() ? 0.0 : trace.records.front().loss;
    in.loss_floor = cfg.loss_floor_override.value_or(suite.loss_lower_bound().value_or(0.0));
    in.eta = point.eta;
    in.iterations = cfg.iterations;
    in.tau = point.tau;
    in.fraction = trace.realized_fraction;
    in.clients = suite.clients();
    in.aux = cfg.algorithm == Algorithm::Easgd ? 1 : cfg.aux;
    in.delta = trace.max_delta;
    in.x1_frob_sq = trace.x1_frob_sq;
    in.x1_term_over_k = cfg.x1_term_over_k;
    return in;
}

}  // namespace

RunOutcome execute_run(const ExperimentConfig& cfg, const ObjectiveSuite& suite,
                       const SweepPoint& point, std::uint64_t seed) {
    RunOutcome out;
    out.point = point;
    out.seed = seed;
    const RunConfig rc = run_config_for(cfg, point, seed);
    const MixingSchedule schedule = build_schedule(cfg, point);
    try {
        out.trace = run(rc, suite, schedule);
    } catch (const TrainingDiverged& e) {
        out.diverged = true;
        out.diverged_at = e.iteration();
        out.trace = e.trace;
        double sum = 0.0;
        for (const TraceRecord& r : out.trace.records) sum += r.grad_norm_sq;
        if (!out.trace.records.empty())
            out.trace.running_mean_grad_sq = sum / static_cast<double>(out.trace.records.size());
    }
    out.bound_inputs = bound_inputs_for(cfg, suite, point, out.trace);
    if (!out.diverged && cfg.iterations >= point.tau) {
        out.bound_report = evaluate_bounds(out.bound_inputs);
        const bool logistic_without_kappa =
            cfg.objective.kind == ObjectiveSpec::Kind::Logistic && !cfg.kappa_override.has_value();
        out.bound_applicable = !logistic_without_kappa;
    }
    return out;
}

namespace {

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ConfigError("output", "cannot write " + path.string());
    out << text;
}

void write_run_outputs(const fs::path& out_dir, const ConfigMap& echo, const RunOutcome& outcome) {
    const fs::path dir = out_dir / outcome.point.hash() / std::to_string(outcome.seed);
    fs::create_directories(dir);
    write_text_file(dir / "trace.csv", outcome.trace.to_csv());

    nlohmann::json summary;
    summary["point"] = {{"tau", outcome.point.tau},
                        {"c", outcome.point.fraction},
                        {"init_scale", outcome.point.init_scale},
                        {"eta", outcome.point.eta}};
    summary["seed"] = outcome.seed;
    summary["diverged"] = outcome.diverged;
    if (outcome.diverged) summary["diverged_at"] = outcome.diverged_at;
    summary["running_mean_grad_sq"] = outcome.trace.running_mean_grad_sq;
    summary["final_loss"] = outcome.trace.final_loss;
    summary["max_delta"] = outcome.trace.max_delta;
    summary["x1_frob_sq"] = outcome.trace.x1_frob_sq;
    summary["max_avg_model_residual"] = outcome.trace.max_avg_model_residual;
    summary["config"] = config_echo_json(echo);
    write_text_file(dir / "summary.json", summary.dump(2) + "\n");

    write_text_file(dir / "bound_report.json",
                    bound_report_to_json(outcome.bound_inputs, outcome.bound_report) + "\n");
}

std::string comparison_csv(const std::vector<RunOutcome>& outcomes) {
    std::ostringstream out;
    out << "point_hash,tau,c,init_scale,eta,seed,status,measured_mean_grad_sq,epsilon,satisfied,"
           "lr_ok,p_ok,c_ok,k_ok,delta,final_loss\n";
    for (const RunOutcome& o : outcomes) {
        out << o.point.hash() << ',' << o.point.tau << ',' << format_double(o.point.fraction) << ','
            << format_double(o.point.init_scale) << ',' << format_double(o.point.eta) << ',' << o.seed
            << ',';
        out << (o.diverged ? "diverged" : "ok") << ',';
        out << format_double(o.trace.running_mean_grad_sq) << ',';
        if (o.bound_applicable) {
            const double epsilon =
                o.bound_inputs.kappa > 0.0 ? o.bound_report.epsilon_niid : o.bound_report.epsilon_iid;
            out << format_double(epsilon) << ',';
            const bool flags_ok = o.bound_report.lr_ok && o.bound_report.p_ok && o.bound_report.c_ok &&
                                  o.bound_report.k_ok;
            if (flags_ok) {
                out << (o.trace.running_mean_grad_sq <= epsilon ? "true" : "false");
            }
            out << ',';
            out << (o.bound_report.lr_ok ? 1 : 0) << ',' << (o.bound_report.p_ok ? 1 : 0) << ','
                << (o.bound_report.c_ok ? 1 : 0) << ',' << (o.bound_report.k_ok ? 1 : 0) << ',';
        } else {
            out << ",,,,,,";
        }
        out << format_double(o.trace.max_delta) << ',' << format_double(o.trace.final_loss) << '\n';
    }
    return out.str();
}

std::vector<RunOutcome> run_pool(const ExperimentConfig& cfg, const ObjectiveSuite& suite,
                                 const std::vector<SweepPoint>& points, std::size_t jobs) {
    struct Task {
        SweepPoint point;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (const SweepPoint& p : points)
        for (std::uint64_t s : cfg.seeds) tasks.push_back({p, s});

    std::vector<RunOutcome> outcomes(tasks.size());
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, tasks.size()));
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            try {
                outcomes[i] = execute_run(cfg, suite, tasks[i].point, tasks[i].seed);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    return outcomes;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const ConfigMap& echo,
                                const std::string& out_dir, std::size_t jobs) {
    const std::vector<SweepPoint> points = expand_sweep(cfg);
    const std::shared_ptr<const ObjectiveSuite> suite = build_suite(cfg.objective);

    ExperimentResult result;
    result.outcomes = run_pool(cfg, *suite, points, jobs);

    fs::create_directories(out_dir);
    for (const RunOutcome& o : result.outcomes) {
        write_run_outputs(out_dir, echo, o);
        if (o.diverged) {
            ++result.diverged;
        } else {
            ++result.completed;
        }
    }
    write_text_file(fs::path(out_dir) / "comparison.csv", comparison_csv(result.outcomes));
    return result;
}

void write_bound_reports(const ExperimentConfig& cfg, const std::string& out_path) {
    const std::shared_ptr<const ObjectiveSuite> suite = build_suite(cfg.objective);
    const std::vector<SweepPoint> points = expand_sweep(cfg);

    nlohmann::json reports = nlohmann::json::array();
    for (const SweepPoint& point : points) {
        for (std::uint64_t seed : cfg.seeds) {
            const RunConfig rc = run_config_for(cfg, point, seed);
            const std::size_t m = suite->clients();
            const std::size_t v = cfg.algorithm == Algorithm::Easgd ? 1 : cfg.aux;

            // Initial accounting state and its averaged model, no simulation.
            StateMatrix x1 = make_initial_state(rc, suite->dim(), m, v);
            const SelectionSet sel0 = select(rc.selection, 0, m);
            zero_unselected_columns(x1.columns, sel0);
            const std::vector<double> u1 = averaged_model(x1);

            BoundInputs in;
            in.smoothness = suite->smoothness();
            in.sigma = suite->noise_sigma();
            in.kappa = cfg.kappa_override.value_or(suite->kappa());
            in.initial_loss = suite->global_loss(u1);
            in.loss_floor = cfg.loss_floor_override.value_or(suite->loss_lower_bound().value_or(0.0));
            in.eta = point.eta;
            in.iterations = cfg.iterations;
            in.tau = point.tau;
            in.fraction =
                static_cast<double>(sel0.members.size()) / static_cast<double>(m);
            in.clients = m;
            in.aux = v;
            in.x1_frob_sq = frobenius_norm_sq(x1.columns);
            in.x1_term_over_k = cfg.x1_term_over_k;

            // Walk the schedule's aggregation rounds for the realized delta.
            if (cfg.algorithm != Algorithm::Easgd && cfg.iterations >= point.tau) {
                const MixingSchedule schedule = build_schedule(cfg, point);
                double max_delta = 0.0;
                const std::size_t rounds = cfg.iterations / point.tau;
                for (std::size_t r = 0; r < rounds; ++r) {
                    const SelectionSet sel = select(rc.selection, r, m);
                    const MixingMatrix w = schedule.matrix_at(r, sel);
                    if (w.dim() >= 2) max_delta = std::max(max_delta, delta_bound(w, in.fraction));
                }
                in.delta = max_delta;
            }

            nlohmann::json entry;
            entry["point"] = {{"tau", point.tau},
                              {"c", point.fraction},
                              {"init_scale", point.init_scale},
                              {"eta", point.eta}};
            entry["seed"] = seed;
            entry["report"] = nlohmann::json::parse(
                bound_report_to_json(in, cfg.iterations >= point.tau ? evaluate_bounds(in)
                                                                     : BoundReport{}));
            reports.push_back(std::move(entry));
        }
    }
    if (out_path.empty() || out_path == "-") {
        std::cout << reports.dump(2) << std::endl;
    } else {
        write_text_file(out_path, reports.dump(2) + "\n");
    }
}

SelectionComparison compare_selection_modes(const ExperimentConfig& cfg, const ConfigMap& echo,
                                            const std::string& out_dir, std::size_t jobs) {
    if (cfg.seeds.size() < 5)
        std::cerr << "warning: selection comparison over fewer than 5 seeds; medians will be noisy\n";

    const std::shared_ptr<const ObjectiveSuite> suite = build_suite(cfg.objective);
    const std::vector<SweepPoint> points = expand_sweep(cfg);
    if (points.size() != 1)
        throw ConfigError("sweep", "selection comparison expects a single sweep point");

    SelectionComparison cmp;
    for (int mode = 0; mode < 2; ++mode) {
        ExperimentConfig variant = cfg;
        variant.selection = mode == 0 ? SelectionKind::PerRoundRandom : SelectionKind::StaticRandom;
        const std::vector<RunOutcome> outcomes = run_pool(variant, *suite, points, jobs);
        for (const RunOutcome& o : outcomes) {
            if (o.diverged) continue;
            (mode == 0 ? cmp.per_round_final_losses : cmp.static_final_losses)
                .push_back(o.trace.final_loss);
        }
    }
    if (cmp.per_round_final_losses.empty() || cmp.static_final_losses.empty())
        throw NumericalError("compare_selection_modes: all runs diverged");
    cmp.per_round_median = median_of(cmp.per_round_final_losses);
    cmp.static_median = median_of(cmp.static_final_losses);

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        nlohmann::json doc;
        doc["per_round_random"] = {{"final_losses", cmp.per_round_final_losses},
                                   {"median_final_loss", cmp.per_round_median}};
        doc["static_random"] = {{"final_losses", cmp.static_final_losses},
                                {"median_final_loss", cmp.static_median}};
        doc["config"] = config_echo_json(echo);
        write_text_file(fs::path(out_dir) / "selection_comparison.json", doc.dump(2) + "\n");
    }
    return cmp;
}

}  // namespace coopsgd
