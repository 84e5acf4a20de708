#include "coopsgd/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "coopsgd/rng.hpp"

namespace coopsgd {

namespace {

// Auxiliary slots keep themselves across an aggregation unless an algorithm
// (EASGD) updates them explicitly.
void put_aux_identity(DenseMatrix& w, std::size_t m, std::size_t aux_count) {
    for (std::size_t a = 0; a < aux_count; ++a) w(m + a, m + a) = 1.0;
}

}  // namespace

MixingMatrix build_uniform(std::size_t mplusv, const SelectionSet& selected, std::size_t aux_count) {
    if (selected.members.empty()) throw ConfigError("selection", "empty selection for uniform mixing");
    if (aux_count >= mplusv) throw DimensionError("build_uniform: aux count exceeds dimension");
    const std::size_t m = mplusv - aux_count;
    MixingMatrix out{DenseMatrix(mplusv, mplusv), selected, aux_count, true};
    out.selected.client_count = m;
    const double weight = 1.0 / static_cast<double>(selected.members.size());
    for (std::size_t j : selected.members)
        for (std::size_t i : selected.members) out.w(i, j) = weight;
    put_aux_identity(out.w, m, aux_count);
    out.consensus = true;  // identical selected rows by construction
    return out;
}

MixingMatrix build_dataset_proportional(const std::vector<double>& sizes, const SelectionSet& selected,
                                        std::size_t aux_count) {
    if (selected.members.empty())
        throw ConfigError("selection", "empty selection for dataset-proportional mixing");
    const std::size_t m = sizes.size();
    const std::size_t n = m + aux_count;
    double total = 0.0;
    for (std::size_t i : selected.members) {
        if (i >= m) throw DimensionError("build_dataset_proportional: selected index out of range");
        if (sizes[i] < 0.0) throw ConfigError("mixing.sizes", "dataset sizes must be nonnegative");
        total += sizes[i];
    }
    if (total <= 0.0) throw ConfigError("mixing.sizes", "selected dataset sizes sum to zero");
    MixingMatrix out{DenseMatrix(n, n), selected, aux_count, false};
    out.selected.client_count = m;
    for (std::size_t j : selected.members)
        for (std::size_t i : selected.members) out.w(i, j) = sizes[i] / total;
    put_aux_identity(out.w, m, aux_count);
    out.consensus = is_consensus_matrix(out.w, out.selected, aux_count);
    return out;
}

MixingValidity validate(const MixingMatrix& w, double tol) {
    const std::size_t n = w.dim();
    if (w.w.cols() != n) return {false, "not-square"};
    if (!w.w.all_finite()) return {false, "non-finite-entry"};
    for (double v : w.w.entries())
        if (v < 0.0) return {false, "negative-entry"};
    for (std::size_t j = 0; j < n; ++j) {
        double sum = 0.0;
        bool any_nonzero = false;
        for (std::size_t i = 0; i < n; ++i) {
            sum += w.w(i, j);
            any_nonzero = any_nonzero || w.w(i, j) != 0.0;
        }
        const bool active = w.column_active(j);
        if (active) {
            if (std::abs(sum - 1.0) > tol) return {false, "column-sum"};
        } else {
            if (any_nonzero) return {false, "nonzero-unselected-column"};
        }
    }
    return {};
}

bool is_consensus_matrix(const DenseMatrix& w, const SelectionSet& selected, std::size_t aux_count) {
    // X W^T sends column j to sum_i W(j, i) x_i, so one aggregation step
    // collapses the selected clients onto a single point exactly when their
    // rows of W agree on every active column.
    if (selected.members.size() < 2) return true;
    const std::size_t m = w.rows() - aux_count;
    const std::size_t ref = selected.members.front();
    for (std::size_t j : selected.members) {
        for (std::size_t i = 0; i < w.cols(); ++i) {
            const bool active = i >= m || selected.contains(i);
            if (active && w(j, i) != w(ref, i)) return false;
        }
    }
    return true;
}

double delta_bound(const MixingMatrix& w, double selected_fraction, bool count_structural_zeros) {
    const std::size_t n = w.dim();
    if (n < 2) throw DimensionError("delta_bound: dimension must be at least 2");
    if (!(selected_fraction > 0.0) || selected_fraction > 1.0)
        throw ConfigError("selection.c", "fraction must be in (0, 1]");
    double min_product = std::numeric_limits<double>::infinity();
    std::vector<double> col(n);
    for (std::size_t j = 0; j < n; ++j) {
        bool any_nonzero = false;
        for (std::size_t i = 0; i < n; ++i) {
            col[i] = w.w(i, j);
            any_nonzero = any_nonzero || col[i] != 0.0;
        }
        if (!any_nonzero) continue;
        std::vector<double> pool;
        pool.reserve(n);
        for (double v : col)
            if (count_structural_zeros || v != 0.0) pool.push_back(v);
        if (pool.size() < 2) {
            // a single usable entry cannot form a pair; the column behaves
            // like one with a vanishing second-smallest entry
            min_product = 0.0;
            continue;
        }
        std::nth_element(pool.begin(), pool.begin() + 1, pool.end());
        const double t1 = std::min(pool[0], pool[1]);
        const double t2 = std::max(pool[0], pool[1]);
        min_product = std::min(min_product, t1 * t2);
    }
    if (!std::isfinite(min_product))
        throw ConfigError("mixing", "delta_bound: matrix has no nonzero column");
    const double nn = static_cast<double>(n);
    const double raw = selected_fraction * (nn - 1.0) * (1.0 - nn * nn * min_product);
    return std::max(0.0, raw);
}

double consensus_deviation_sq(const DenseMatrix& phi) {
    if (phi.rows() != phi.cols()) throw DimensionError("consensus_deviation_sq: matrix must be square");
    const std::size_t n = phi.rows();
    const DenseMatrix phi_t = phi.transposed();
    // Phi^T (I - J): subtract each row's mean from the row.
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = phi_t.row_ptr(i);
        double mean = 0.0;
        for (std::size_t j = 0; j < n; ++j) mean += row[j];
        mean /= static_cast<double>(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double d = row[j] - mean;
            acc += d * d;
        }
    }
    return acc;
}

// --- schedules ---------------------------------------------------------

MixingSchedule::MixingSchedule(MixingKind kind, std::size_t tau, std::size_t m, std::size_t v)
    : kind_(kind), tau_(tau), m_(m), v_(v) {
    if (tau == 0) throw ConfigError("run.tau", "communication period must be at least 1");
    if (m == 0) throw ConfigError("objective.m", "client count must be at least 1");
}

MixingSchedule MixingSchedule::static_matrix(DenseMatrix w, std::size_t tau, std::size_t m,
                                             std::size_t v) {
    MixingSchedule s(MixingKind::Static, tau, m, v);
    if (w.rows() != m + v || w.cols() != m + v)
        throw ConfigError("mixing.file", "static matrix dimension does not match m + v");
    s.fixed_.push_back(std::move(w));
    return s;
}

MixingSchedule MixingSchedule::periodic_list(std::vector<DenseMatrix> ws, std::size_t tau, std::size_t m,
                                             std::size_t v) {
    MixingSchedule s(MixingKind::PeriodicList, tau, m, v);
    if (ws.empty()) throw ConfigError("mixing.files", "periodic list must not be empty");
    for (const DenseMatrix& w : ws)
        if (w.rows() != m + v || w.cols() != m + v)
            throw ConfigError("mixing.files", "matrix dimension does not match m + v");
    s.fixed_ = std::move(ws);
    return s;
}

MixingSchedule MixingSchedule::seeded_random_family(std::uint64_t seed, double concentration,
                                                    std::size_t tau, std::size_t m, std::size_t v) {
    MixingSchedule s(MixingKind::SeededRandomFamily, tau, m, v);
    if (!(concentration > 0.0))
        throw ConfigError("mixing.concentration", "Dirichlet concentration must be positive");
    s.seed_ = seed;
    s.concentration_ = concentration;
    return s;
}

MixingSchedule MixingSchedule::uniform_j(std::size_t tau, std::size_t m, std::size_t v) {
    return MixingSchedule(MixingKind::UniformJ, tau, m, v);
}

MixingSchedule MixingSchedule::dataset_proportional(std::vector<double> sizes, std::size_t tau,
                                                    std::size_t m, std::size_t v) {
    MixingSchedule s(MixingKind::UniformJ, tau, m, v);
    if (sizes.size() != m) throw ConfigError("mixing.sizes", "need one dataset size per client");
    s.sizes_ = std::move(sizes);
    s.proportional_ = true;
    return s;
}

MixingMatrix MixingSchedule::matrix_at(std::size_t round, const SelectionSet& selected) const {
    const std::size_t n = m_ + v_;
    switch (kind_) {
        case MixingKind::Static:
        case MixingKind::PeriodicList: {
            const DenseMatrix& w = fixed_[kind_ == MixingKind::Static ? 0 : round % fixed_.size()];
            MixingMatrix out{w, selected, v_, false};
            out.selected.client_count = m_;
            out.consensus = is_consensus_matrix(w, out.selected, v_);
            const MixingValidity verdict = validate(out);
            if (!verdict.ok)
                throw ConfigError("mixing", "matrix invalid for round " + std::to_string(round) + ": " +
                                                verdict.violation);
            return out;
        }
        case MixingKind::SeededRandomFamily: {
            MixingMatrix out{DenseMatrix(n, n), selected, v_, false};
            out.selected.client_count = m_;
            KeyedRng rng{seed_, 0x6d69784dULL, static_cast<std::uint64_t>(round)};
            // One Dirichlet column per selected client, supported on the
            // selected rows; unselected clients neither give nor receive.
            const auto& members = selected.members;
            for (std::size_t j : members) {
                const std::vector<double> weights = rng.next_dirichlet(members.size(), concentration_);
                for (std::size_t r = 0; r < members.size(); ++r) out.w(members[r], j) = weights[r];
            }
            put_aux_identity(out.w, m_, v_);
            return out;
        }
        case MixingKind::UniformJ: {
            if (proportional_) return build_dataset_proportional(sizes_, selected, v_);
            return build_uniform(n, selected, v_);
        }
    }
    throw NumericalError("matrix_at: unreachable");
}

// --- JSON wire format ---------------------------------------------------

std::string mixing_to_json(const MixingMatrix& w) {
    nlohmann::json doc;
    const std::size_t n = w.dim();
    doc["dim"] = n;
    nlohmann::json cols = nlohmann::json::array();
    for (std::size_t j = 0; j < n; ++j) {
        nlohmann::json col = nlohmann::json::array();
        for (std::size_t i = 0; i < n; ++i) col.push_back(w.w(i, j));
        cols.push_back(std::move(col));
    }
    doc["columns"] = std::move(cols);
    return doc.dump(2);
}

MixingMatrix mixing_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("mixing", std::string("invalid JSON: ") + e.what());
    }
    if (!doc.contains("dim") || !doc["dim"].is_number_unsigned())
        throw ConfigError("mixing.dim", "missing or non-integer dimension");
    const std::size_t n = doc["dim"].get<std::size_t>();
    if (n == 0) throw ConfigError("mixing.dim", "dimension must be at least 1");
    if (!doc.contains("columns") || !doc["columns"].is_array() || doc["columns"].size() != n)
        throw ConfigError("mixing.columns", "expected exactly dim columns");
    MixingMatrix out{DenseMatrix(n, n), SelectionSet{}, 0, false};
    out.selected.client_count = n;
    for (std::size_t j = 0; j < n; ++j) {
        const auto& col = doc["columns"][j];
        if (!col.is_array() || col.size() != n)
            throw ConfigError("mixing.columns", "column " + std::to_string(j) + " has wrong length");
        bool any_nonzero = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (!col[i].is_number())
                throw ConfigError("mixing.columns", "column " + std::to_string(j) + " has a non-number");
            out.w(i, j) = col[i].get<double>();
            any_nonzero = any_nonzero || out.w(i, j) != 0.0;
        }
        if (any_nonzero) out.selected.members.push_back(j);
    }
    out.consensus = is_consensus_matrix(out.w, out.selected, 0);
    const MixingValidity verdict = validate(out);
    if (!verdict.ok) throw ConfigError("mixing", "loaded matrix invalid: " + verdict.violation);
    return out;
}

MixingMatrix mixing_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("mixing.file", "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return mixing_from_json(buf.str());
}

void mixing_to_json_file(const MixingMatrix& w, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("mixing.file", "cannot write " + path);
    out << mixing_to_json(w) << "\n";
}

}  // namespace coopsgd
