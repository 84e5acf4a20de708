#include "coopsgd/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "coopsgd/errors.hpp"
#include "coopsgd/rng.hpp"

namespace coopsgd {

namespace {

void check_finite(std::span<const double> x, const char* who) {
    for (double v : x)
        if (!std::isfinite(v)) throw NumericalError(std::string(who) + ": non-finite input");
}

double log1p_exp(double t) {
    // log(1 + e^t) without overflow.
    return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

}  // namespace

double ObjectiveSuite::global_loss(std::span<const double> x) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < clients(); ++i) acc += client_loss(i, x);
    return acc / static_cast<double>(clients());
}

std::vector<double> ObjectiveSuite::global_grad(std::span<const double> x) const {
    std::vector<double> acc(dim(), 0.0);
    for (std::size_t i = 0; i < clients(); ++i) {
        const std::vector<double> g = client_grad(i, x);
        for (std::size_t k = 0; k < dim(); ++k) acc[k] += g[k];
    }
    for (double& v : acc) v /= static_cast<double>(clients());
    return acc;
}

// --- QuadraticSuite ------------------------------------------------------

QuadraticSuite::QuadraticSuite(std::size_t d, std::size_t m, std::vector<double> spectrum,
                               double kappa_target, double sigma, std::uint64_t seed)
    : d_(d), m_(m), sigma_(sigma), a_(DenseMatrix::identity(std::max<std::size_t>(d, 1))) {
    if (d == 0) throw ConfigError("objective.d", "dimension must be at least 1");
    if (m == 0) throw ConfigError("objective.m", "client count must be at least 1");
    if (spectrum.size() != d) throw ConfigError("objective.spectrum", "need one eigenvalue per dimension");
    for (double lambda : spectrum)
        if (lambda < 0.0) throw ConfigError("objective.spectrum", "eigenvalues must be nonnegative");
    if (kappa_target < 0.0) throw ConfigError("objective.kappa", "kappa target must be nonnegative");
    if (kappa_target > 0.0 && m == 1)
        throw ConfigError("objective.kappa", "a single client cannot be heterogeneous");
    if (sigma < 0.0) throw ConfigError("objective.sigma", "sigma must be nonnegative");

    smoothness_ = *std::max_element(spectrum.begin(), spectrum.end());
    kappa_ = kappa_target;

    // Seeded orthogonal Q by modified Gram-Schmidt on a Gaussian matrix.
    KeyedRng qrng{seed, 0x0aULL};
    DenseMatrix q(d, d);
    for (double& v : q.entries()) v = qrng.next_gaussian();
    for (std::size_t i = 0; i < d; ++i) {
        double* qi = q.row_ptr(i);
        for (std::size_t j = 0; j < i; ++j) {
            const double* qj = q.row_ptr(j);
            double dot = 0.0;
            for (std::size_t k = 0; k < d; ++k) dot += qi[k] * qj[k];
            for (std::size_t k = 0; k < d; ++k) qi[k] -= dot * qj[k];
        }
        double norm = 0.0;
        for (std::size_t k = 0; k < d; ++k) norm += qi[k] * qi[k];
        norm = std::sqrt(norm);
        if (norm < 1e-12) throw NumericalError("QuadraticSuite: degenerate random basis");
        for (std::size_t k = 0; k < d; ++k) qi[k] /= norm;
    }

    // A = Q^T diag(spectrum) Q, symmetrized to kill round-off drift.
    a_ = DenseMatrix(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < d; ++k) acc += q(k, i) * spectrum[k] * q(k, j);
            a_(i, j) = acc;
        }
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j) {
            const double s = 0.5 * (a_(i, j) + a_(j, i));
            a_(i, j) = s;
            a_(j, i) = s;
        }

    KeyedRng brng{seed, 0x0bULL};
    b_bar_.resize(d);
    for (double& v : b_bar_) v = brng.next_gaussian();

    b_.assign(m * d, 0.0);
    if (kappa_target > 0.0) {
        std::vector<double> r(m * d);
        for (double& v : r) v = brng.next_gaussian();
        // Exact mean-zero across clients, then exact second-moment scale.
        for (std::size_t k = 0; k < d; ++k) {
            double mean = 0.0;
            for (std::size_t i = 0; i < m; ++i) mean += r[i * d + k];
            mean /= static_cast<double>(m);
            for (std::size_t i = 0; i < m; ++i) r[i * d + k] -= mean;
        }
        double ms = 0.0;
        for (double v : r) ms += v * v;
        ms /= static_cast<double>(m);
        if (ms <= 0.0) throw NumericalError("QuadraticSuite: degenerate heterogeneity draw");
        const double scale = kappa_target / std::sqrt(ms);
        for (std::size_t i = 0; i < m * d; ++i) b_[i] = r[i] * scale;
    }
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < d; ++k) b_[i * d + k] += b_bar_[k];

    // Closed-form minimum when A is positive definite: x* = Q^T L^-1 Q b_bar.
    const double lambda_min = *std::min_element(spectrum.begin(), spectrum.end());
    if (lambda_min > 0.0) {
        std::vector<double> qb(d, 0.0);
        for (std::size_t k = 0; k < d; ++k) {
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) acc += q(k, j) * b_bar_[j];
            qb[k] = acc / spectrum[k];
        }
        std::vector<double> xs(d, 0.0);
        for (std::size_t j = 0; j < d; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < d; ++k) acc += q(k, j) * qb[k];
            xs[j] = acc;
        }
        double fmin = 0.0;  // F(x*) = -b_bar' x* / 2 for F = x'Ax/2 - b_bar'x
        for (std::size_t j = 0; j < d; ++j) fmin -= 0.5 * b_bar_[j] * xs[j];
        x_star_ = std::move(xs);
        f_inf_ = fmin;
    }
}

std::span<const double> QuadraticSuite::linear_term(std::size_t client) const {
    return {b_.data() + client * d_, d_};
}

double QuadraticSuite::client_loss(std::size_t client, std::span<const double> x) const {
    check_finite(x, "client_loss");
    const double* b = b_.data() + client * d_;
    double quad = 0.0, lin = 0.0;
    for (std::size_t i = 0; i < d_; ++i) {
        const double* arow = a_.row_ptr(i);
        double ax = 0.0;
        for (std::size_t j = 0; j < d_; ++j) ax += arow[j] * x[j];
        quad += x[i] * ax;
        lin += b[i] * x[i];
    }
    return 0.5 * quad - lin;
}

std::vector<double> QuadraticSuite::client_grad(std::size_t client, std::span<const double> x) const {
    check_finite(x, "client_grad");
    const double* b = b_.data() + client * d_;
    std::vector<double> g(d_);
    for (std::size_t i = 0; i < d_; ++i) {
        const double* arow = a_.row_ptr(i);
        double ax = 0.0;
        for (std::size_t j = 0; j < d_; ++j) ax += arow[j] * x[j];
        g[i] = ax - b[i];
    }
    return g;
}

// --- partitioning --------------------------------------------------------

std::vector<std::vector<std::size_t>> partition_dirichlet(const std::vector<int>& labels, std::size_t m,
                                                          double alpha, std::uint64_t seed) {
    if (!(alpha > 0.0)) throw ConfigError("objective.alpha", "Dirichlet alpha must be positive");
    if (m == 0) throw ConfigError("objective.m", "client count must be at least 1");
    if (labels.size() < m) throw ConfigError("objective.samples", "fewer samples than clients");

    const int max_label = *std::max_element(labels.begin(), labels.end());
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(max_label) + 1);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0) throw ConfigError("objective.labels", "labels must be nonnegative");
        by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    }

    std::vector<std::vector<std::size_t>> out(m);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& pool = by_class[c];
        if (pool.empty()) continue;
        KeyedRng rng{seed, 0xd17ULL, static_cast<std::uint64_t>(c)};
        // Shuffle the class pool, then cut it by the Dirichlet proportions.
        for (std::size_t i = 0; i + 1 < pool.size(); ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.next_below(pool.size() - i));
            std::swap(pool[i], pool[j]);
        }
        const std::vector<double> props = rng.next_dirichlet(m, alpha);
        std::size_t cursor = 0;
        double cum = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            cum += props[i];
            const auto upto = i + 1 == m ? pool.size()
                                         : std::min(pool.size(), static_cast<std::size_t>(std::llround(
                                                                     cum * static_cast<double>(pool.size()))));
            for (; cursor < upto; ++cursor) out[i].push_back(pool[cursor]);
        }
    }
    for (auto& idx : out) std::sort(idx.begin(), idx.end());
    return out;
}

// --- LogisticSuite -------------------------------------------------------

LogisticSuite::LogisticSuite(std::size_t d, std::size_t m, std::size_t samples, PartitionKind partition,
                             double alpha, std::size_t batch, std::uint64_t seed)
    : d_(d), m_(m), batch_(batch) {
    if (d < 2) throw ConfigError("objective.d", "logistic dimension must be at least 2 (bias included)");
    if (m == 0) throw ConfigError("objective.m", "client count must be at least 1");
    if (samples < m) throw ConfigError("objective.samples", "fewer samples than clients");
    if (batch == 0) throw ConfigError("objective.batch", "batch size must be at least 1");

    KeyedRng wrng{seed, 0x10ULL};
    std::vector<double> w_true(d);
    for (double& v : w_true) v = wrng.next_gaussian();
    const double wnorm = std::sqrt(
        std::inner_product(w_true.begin(), w_true.end(), w_true.begin(), 0.0));
    for (double& v : w_true) v *= 2.0 / std::max(wnorm, 1e-12);

    features_.resize(samples * d);
    labels_.resize(samples);
    for (std::size_t s = 0; s < samples; ++s) {
        KeyedRng srng{seed, 0x11ULL, static_cast<std::uint64_t>(s)};
        double z = 0.0;
        for (std::size_t k = 0; k + 1 < d; ++k) {
            const double v = srng.next_gaussian();
            features_[s * d + k] = v;
            z += w_true[k] * v;
        }
        features_[s * d + (d - 1)] = 1.0;  // bias feature
        z += w_true[d - 1];
        labels_[s] = srng.next_double() < sigmoid(z) ? 1 : 0;
    }

    if (partition == PartitionKind::Dirichlet) {
        partition_ = partition_dirichlet(labels_, m, alpha, seed);
    } else {
        partition_.assign(m, {});
        for (std::size_t s = 0; s < samples; ++s) partition_[s % m].push_back(s);
    }
    finalize();
}

LogisticSuite::LogisticSuite(std::size_t d, std::size_t m, std::vector<double> features,
                             std::vector<int> labels, PartitionKind partition, double alpha,
                             std::size_t batch, std::uint64_t seed)
    : d_(d), m_(m), batch_(batch), features_(std::move(features)), labels_(std::move(labels)) {
    if (d == 0) throw ConfigError("objective.d", "dimension must be at least 1");
    if (labels_.empty() || features_.size() != labels_.size() * d)
        throw ConfigError("objective.dataset", "feature array does not match labels x dim");
    if (labels_.size() < m) throw ConfigError("objective.samples", "fewer samples than clients");
    for (int y : labels_)
        if (y != 0 && y != 1) throw ConfigError("objective.dataset", "labels must be 0 or 1");
    for (double v : features_)
        if (!std::isfinite(v)) throw ConfigError("objective.dataset", "non-finite feature");
    if (partition == PartitionKind::Dirichlet) {
        partition_ = partition_dirichlet(labels_, m, alpha, seed);
    } else {
        partition_.assign(m, {});
        for (std::size_t s = 0; s < labels_.size(); ++s) partition_[s % m].push_back(s);
    }
    finalize();
}

void LogisticSuite::finalize() {
    for (std::size_t i = 0; i < m_; ++i)
        if (partition_[i].empty())
            throw ConfigError("objective.partition", "client " + std::to_string(i) + " received no samples");
    // Conservative smoothness: max over clients of lambda_max(X'X/n) / 4.
    double worst = 0.0;
    for (const auto& idx : partition_) {
        DenseMatrix gram(d_, d_);
        for (std::size_t s : idx) {
            const double* f = features_.data() + s * d_;
            for (std::size_t a = 0; a < d_; ++a)
                for (std::size_t b = 0; b < d_; ++b) gram(a, b) += f[a] * f[b];
        }
        for (double& v : gram.entries()) v /= static_cast<double>(idx.size());
        worst = std::max(worst, operator_norm(gram, 1e-8));
    }
    smoothness_ = 0.25 * worst;
}

double LogisticSuite::sample_margin(std::size_t sample, std::span<const double> x) const {
    const double* f = features_.data() + sample * d_;
    double z = 0.0;
    for (std::size_t k = 0; k < d_; ++k) z += f[k] * x[k];
    return z;
}

double LogisticSuite::client_loss(std::size_t client, std::span<const double> x) const {
    check_finite(x, "client_loss");
    const auto& idx = partition_[client];
    double acc = 0.0;
    for (std::size_t s : idx) {
        const double z = sample_margin(s, x);
        acc += log1p_exp(z) - static_cast<double>(labels_[s]) * z;
    }
    return acc / static_cast<double>(idx.size());
}

std::vector<double> LogisticSuite::client_grad(std::size_t client, std::span<const double> x) const {
    check_finite(x, "client_grad");
    const auto& idx = partition_[client];
    std::vector<double> g(d_, 0.0);
    for (std::size_t s : idx) {
        const double resid = sigmoid(sample_margin(s, x)) - static_cast<double>(labels_[s]);
        const double* f = features_.data() + s * d_;
        for (std::size_t k = 0; k < d_; ++k) g[k] += resid * f[k];
    }
    for (double& v : g) v /= static_cast<double>(idx.size());
    return g;
}

std::vector<double> LogisticSuite::minibatch_grad(std::size_t client, std::span<const double> x,
                                                  std::uint64_t seed, std::size_t iteration) const {
    check_finite(x, "minibatch_grad");
    const auto& idx = partition_[client];
    KeyedRng rng{seed, 0x9bULL, static_cast<std::uint64_t>(client), static_cast<std::uint64_t>(iteration)};
    std::vector<double> g(d_, 0.0);
    // Sampling with replacement keeps the oracle exactly unbiased.
    for (std::size_t b = 0; b < batch_; ++b) {
        const std::size_t s = idx[static_cast<std::size_t>(rng.next_below(idx.size()))];
        const double resid = sigmoid(sample_margin(s, x)) - static_cast<double>(labels_[s]);
        const double* f = features_.data() + s * d_;
        for (std::size_t k = 0; k < d_; ++k) g[k] += resid * f[k];
    }
    for (double& v : g) v /= static_cast<double>(batch_);
    return g;
}

// --- GradientOracle ------------------------------------------------------

GradientOracle::GradientOracle(const ObjectiveSuite& suite, std::uint64_t seed)
    : suite_(suite), logistic_(dynamic_cast<const LogisticSuite*>(&suite)), seed_(seed) {}

std::vector<double> GradientOracle::grad(std::size_t client, std::span<const double> x,
                                         std::size_t iteration) const {
    if (logistic_) return logistic_->minibatch_grad(client, x, seed_, iteration);
    std::vector<double> g = suite_.client_grad(client, x);
    const double sigma = suite_.noise_sigma();
    if (sigma > 0.0) {
        KeyedRng rng{seed_, 0x9bULL, static_cast<std::uint64_t>(client),
                     static_cast<std::uint64_t>(iteration)};
        const double scale = sigma / std::sqrt(static_cast<double>(g.size()));
        for (double& v : g) v += scale * rng.next_gaussian();
    }
    return g;
}

}  // namespace coopsgd
