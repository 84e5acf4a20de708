#include "coopsgd/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "coopsgd/rng.hpp"

namespace coopsgd {

std::vector<double> averaged_model(const StateMatrix& x) {
    const std::size_t n = x.width();
    std::vector<double> u(x.d, 0.0);
    for (std::size_t r = 0; r < x.d; ++r) {
        const double* row = x.columns.row_ptr(r);
        double acc = 0.0;
        for (std::size_t c = 0; c < n; ++c) acc += row[c];
        u[r] = acc / static_cast<double>(n);
    }
    return u;
}

double consensus_error_sq(const StateMatrix& x) {
    // ||X(I-J)||_F^2 = sum_c ||x_c - mean||^2
    const std::size_t n = x.width();
    double acc = 0.0;
    for (std::size_t r = 0; r < x.d; ++r) {
        const double* row = x.columns.row_ptr(r);
        double mean = 0.0;
        for (std::size_t c = 0; c < n; ++c) mean += row[c];
        mean /= static_cast<double>(n);
        for (std::size_t c = 0; c < n; ++c) {
            const double d = row[c] - mean;
            acc += d * d;
        }
    }
    return acc;
}

StateMatrix step(const StateMatrix& x, const DenseMatrix& g, const MixingMatrix& w, double eta) {
    if (g.rows() != x.d || g.cols() != x.width())
        throw DimensionError("step: gradient shape does not match state");
    if (w.dim() != x.width()) throw DimensionError("step: mixing dimension does not match state");
    StateMatrix out(x.d, x.m, x.v);
    DenseMatrix y = x.columns;
    for (std::size_t i = 0; i < y.entries().size(); ++i) y.entries()[i] -= eta * g.entries()[i];
    out.columns = multiply_by_transpose(y, w.w);
    return out;
}

void easgd_update(DenseMatrix& x, std::vector<double>& z, const DenseMatrix& g, double eta, double alpha,
                  std::size_t k, std::size_t tau) {
    const std::size_t m = x.cols();
    const std::size_t d = x.rows();
    if (z.size() != d || g.rows() != d || g.cols() != m)
        throw DimensionError("easgd_update: shape mismatch");
    if (alpha < 0.0 || alpha * static_cast<double>(m) > 1.0)
        throw ConfigError("easgd.alpha", "need 0 <= m*alpha <= 1");
    if (tau == 0) throw ConfigError("run.tau", "communication period must be at least 1");
    const bool anchor_round = k % tau == 0;
    if (anchor_round) {
        const double m_alpha = alpha * static_cast<double>(m);
        for (std::size_t r = 0; r < d; ++r) {
            double* xrow = x.row_ptr(r);
            const double* grow = g.row_ptr(r);
            double mean = 0.0;
            for (std::size_t c = 0; c < m; ++c) mean += xrow[c];
            mean /= static_cast<double>(m);
            for (std::size_t c = 0; c < m; ++c)
                xrow[c] = xrow[c] - eta * grow[c] - alpha * (xrow[c] - z[r]);
            z[r] = (1.0 - m_alpha) * z[r] + m_alpha * mean;
        }
    } else {
        for (std::size_t r = 0; r < d; ++r) {
            double* xrow = x.row_ptr(r);
            const double* grow = g.row_ptr(r);
            for (std::size_t c = 0; c < m; ++c) xrow[c] -= eta * grow[c];
        }
    }
}

namespace {

double l2_norm_sq(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return acc;
}

bool entries_in_guard(const DenseMatrix& x) {
    for (double v : x.entries())
        if (!(std::abs(v) <= kDivergenceGuard)) return false;
    return true;
}

StateMatrix accounting_view(const StateMatrix& work, const SelectionSet& sel) {
    StateMatrix acc = work;
    zero_unselected_columns(acc.columns, sel);
    return acc;
}

struct EngineSetup {
    std::size_t tau;
    std::size_t aux;
    MixingSchedule schedule;
};

MixingMatrix fetch_mixing(const MixingSchedule& schedule, std::size_t round, const SelectionSet& sel,
                          RunTrace& trace) {
    MixingMatrix w = schedule.matrix_at(round, sel);
    if (w.dim() >= 2)
        trace.max_delta = std::max(trace.max_delta, delta_bound(w, trace.realized_fraction));
    return w;
}

EngineSetup resolve_algorithm(const RunConfig& config, std::size_t m, std::size_t aux_request,
                              const MixingSchedule& provided) {
    switch (config.algorithm) {
        case Algorithm::FullySync:
            return {1, 0, MixingSchedule::uniform_j(1, m, 0)};
        case Algorithm::Psasgd:
            return {config.tau, 0, MixingSchedule::uniform_j(config.tau, m, 0)};
        case Algorithm::Dpsgd: {
            if (provided.dim() != m) throw ConfigError("mixing", "dpsgd schedule must be m x m");
            return {1, 0, provided.with_tau(1)};
        }
        case Algorithm::Easgd:
            return {config.tau, 1, MixingSchedule::uniform_j(config.tau, m, 1)};  // unused at runtime
        case Algorithm::Unified:
            if (provided.dim() != m + aux_request)
                throw ConfigError("mixing", "schedule dimension does not match m + v");
            return {config.tau, aux_request, provided.with_tau(config.tau)};
    }
    throw ConfigError("algorithm", "unknown algorithm");
}

}  // namespace

StateMatrix make_initial_state(const RunConfig& config, std::size_t d, std::size_t m, std::size_t v) {
    StateMatrix state(d, m, v);
    if (config.init == InitKind::Scaled) {
        KeyedRng init_rng{config.seed, 0x1417ULL};
        std::vector<double> base(d);
        for (double& x : base) x = init_rng.next_gaussian();
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t c = 0; c < m + v; ++c) state.columns(r, c) = config.init_scale * base[r];
    }
    return state;
}

RunTrace run(const RunConfig& config, const ObjectiveSuite& suite, const MixingSchedule& schedule) {
    if (config.iterations == 0) throw ConfigError("run.k", "iteration count must be at least 1");
    if (!(config.eta > 0.0)) throw ConfigError("run.eta", "learning rate must be positive");
    if (config.tau == 0) throw ConfigError("run.tau", "communication period must be at least 1");

    const std::size_t m = suite.clients();
    const std::size_t d = suite.dim();
    const bool easgd = config.algorithm == Algorithm::Easgd;
    if (easgd) {
        if (config.selection.kind != SelectionKind::All)
            throw ConfigError("selection.kind", "easgd runs with all clients selected");
        const double m_alpha = config.easgd_alpha * static_cast<double>(m);
        if (!(m_alpha > 0.0) || m_alpha > 1.0)
            throw ConfigError("easgd.alpha", "need 0 < m*alpha <= 1");
    }

    std::size_t aux_request = easgd ? 1 : (schedule.dim() > m ? schedule.dim() - m : 0);
    const EngineSetup setup = resolve_algorithm(config, m, aux_request, schedule);
    const std::size_t n = m + setup.aux;
    const std::size_t tau = setup.tau;

    StateMatrix work = make_initial_state(config, d, m, setup.aux);

    GradientOracle oracle(suite, config.seed);
    RunTrace trace;
    trace.records.reserve(config.iterations);

    SelectionSet sel = select(config.selection, 0, m);
    trace.realized_fraction = static_cast<double>(sel.members.size()) / static_cast<double>(m);

    double running_sum = 0.0;
    double max_residual = 0.0;
    std::vector<double> grad_sum(d, 0.0);

    StateMatrix acc = accounting_view(work, sel);
    trace.x1_frob_sq = frobenius_norm_sq(acc.columns);
    std::vector<double> u = averaged_model(acc);

    for (std::size_t k = 1; k <= config.iterations; ++k) {
        const std::size_t round = (k - 1) / tau;

        TraceRecord rec;
        rec.k = k;
        rec.loss = suite.global_loss(u);
        rec.grad_norm_sq = l2_norm_sq(suite.global_grad(u));
        rec.consensus_sq = consensus_error_sq(acc);
        rec.aggregated = k % tau == 0;
        rec.selected = sel.members;
        running_sum += rec.grad_norm_sq;
        trace.records.push_back(std::move(rec));

        // Gradient columns for the selected clients; auxiliaries stay zero.
        DenseMatrix g(d, n);
        std::fill(grad_sum.begin(), grad_sum.end(), 0.0);
        for (std::size_t i : sel.members) {
            const std::vector<double> col = acc.columns.column(i);
            const std::vector<double> gi = oracle.grad(i, col, k);
            for (double v : gi)
                if (!std::isfinite(v)) throw TrainingDiverged(k, trace);
            for (std::size_t r = 0; r < d; ++r) {
                g(r, i) = gi[r];
                grad_sum[r] += gi[r];
            }
        }

        if (easgd) {
            // Anchor update on the client block; column m holds z.
            DenseMatrix clients(d, m);
            std::vector<double> z(d);
            for (std::size_t r = 0; r < d; ++r) {
                for (std::size_t c = 0; c < m; ++c) clients(r, c) = work.columns(r, c);
                z[r] = work.columns(r, m);
            }
            DenseMatrix gc(d, m);
            for (std::size_t r = 0; r < d; ++r)
                for (std::size_t c = 0; c < m; ++c) gc(r, c) = g(r, c);
            easgd_update(clients, z, gc, config.eta, config.easgd_alpha, k, tau);
            for (std::size_t r = 0; r < d; ++r) {
                for (std::size_t c = 0; c < m; ++c) work.columns(r, c) = clients(r, c);
                work.columns(r, m) = z[r];
            }
        } else if (k % tau == 0) {
            const MixingMatrix w = fetch_mixing(setup.schedule, round, sel, trace);
            const StateMatrix next = step(acc, g, w, config.eta);
            if (w.consensus && !sel.members.empty()) {
                const std::vector<double> aggregate = next.columns.column(sel.members.front());
                for (std::size_t r = 0; r < d; ++r) {
                    for (std::size_t c = 0; c < m; ++c) work.columns(r, c) = aggregate[r];
                    for (std::size_t c = m; c < n; ++c) work.columns(r, c) = next.columns(r, c);
                }
            } else {
                // Propagation is whatever the product gives; clients outside
                // the round keep their stale local model.
                for (std::size_t r = 0; r < d; ++r) {
                    const double* src = next.columns.row_ptr(r);
                    double* dst = work.columns.row_ptr(r);
                    for (std::size_t c = 0; c < n; ++c)
                        if (c >= m || sel.contains(c)) dst[c] = src[c];
                }
            }
        } else {
            for (std::size_t i : sel.members)
                for (std::size_t r = 0; r < d; ++r) work.columns(r, i) -= config.eta * g(r, i);
        }

        if (!entries_in_guard(work.columns)) throw TrainingDiverged(k, trace);

        // Residual of the averaged-model recursion, evaluated against the
        // accounting state the next iteration will see.
        const std::size_t next_round = k < config.iterations ? k / tau : round;
        SelectionSet next_sel = sel;
        if (next_round != round) {
            next_sel = select(config.selection, next_round, m);
            next_sel.round = next_round;
        }
        StateMatrix next_acc = accounting_view(work, next_sel);
        const std::vector<double> u_next = averaged_model(next_acc);
        double res_sq = 0.0;
        for (std::size_t r = 0; r < d; ++r) {
            const double expected = u[r] - config.eta * grad_sum[r] / static_cast<double>(n);
            const double diff = u_next[r] - expected;
            res_sq += diff * diff;
        }
        max_residual = std::max(max_residual, std::sqrt(res_sq));

        sel = next_sel;
        acc = std::move(next_acc);
        u = u_next;
    }

    trace.running_mean_grad_sq = running_sum / static_cast<double>(config.iterations);
    trace.max_avg_model_residual = max_residual;

    // Deployable model: plain mean over client columns of the working state.
    std::vector<double> deploy(d, 0.0);
    for (std::size_t r = 0; r < d; ++r) {
        double mean = 0.0;
        for (std::size_t c = 0; c < m; ++c) mean += work.columns(r, c);
        deploy[r] = mean / static_cast<double>(m);
    }
    trace.final_loss = suite.global_loss(deploy);
    trace.final_averaged_model = std::move(deploy);
    return trace;
}

std::string RunTrace::to_csv() const {
    std::ostringstream out;
    out << "k,loss,grad_norm_sq,consensus_sq,aggregated,selected\n";
    char buf[64];
    for (const TraceRecord& rec : records) {
        out << rec.k << ',';
        std::snprintf(buf, sizeof buf, "%.17g", rec.loss);
        out << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", rec.grad_norm_sq);
        out << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", rec.consensus_sq);
        out << buf << ',';
        out << (rec.aggregated ? 1 : 0) << ',';
        for (std::size_t i = 0; i < rec.selected.size(); ++i) {
            if (i > 0) out << ';';
            out << rec.selected[i];
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace coopsgd
