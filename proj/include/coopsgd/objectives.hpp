#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "coopsgd/matrix.hpp"

namespace coopsgd {

// Abstract synthetic objective: per-client losses F_i with a global
// F = (1/m) sum_i F_i, plus the constants the convergence bounds consume.
class ObjectiveSuite {
public:
    virtual ~ObjectiveSuite() = default;

    virtual std::size_t dim() const = 0;
    virtual std::size_t clients() const = 0;

    virtual double client_loss(std::size_t client, std::span<const double> x) const = 0;
    virtual std::vector<double> client_grad(std::size_t client, std::span<const double> x) const = 0;

    double global_loss(std::span<const double> x) const;
    std::vector<double> global_grad(std::span<const double> x) const;

    // Smoothness constant (exact for quadratics, conservative for logistic).
    virtual double smoothness() const = 0;
    // Gradient-noise standard deviation of the stochastic oracle.
    virtual double noise_sigma() const = 0;
    // Bounded-dissimilarity constant; exact for shared-Hessian quadratics.
    virtual double kappa() const = 0;
    // Known lower bound on the global loss, when available.
    virtual std::optional<double> loss_lower_bound() const = 0;
};

// Shared-Hessian quadratic family: F_i(x) = x'Ax/2 - b_i'x with A = Q' diag(spectrum) Q.
// Every assumption constant is available in closed form, which makes the
// bound comparisons sharp.
class QuadraticSuite final : public ObjectiveSuite {
public:
    // b_i = b_bar + r_i with seeded mean-zero r_i rescaled so that
    // (1/m) sum ||r_i||^2 equals kappa_target^2 exactly.
    QuadraticSuite(std::size_t d, std::size_t m, std::vector<double> spectrum, double kappa_target,
                   double sigma, std::uint64_t seed);

    std::size_t dim() const override { return d_; }
    std::size_t clients() const override { return m_; }

    double client_loss(std::size_t client, std::span<const double> x) const override;
    std::vector<double> client_grad(std::size_t client, std::span<const double> x) const override;

    double smoothness() const override { return smoothness_; }
    double noise_sigma() const override { return sigma_; }
    double kappa() const override { return kappa_; }
    std::optional<double> loss_lower_bound() const override { return f_inf_; }

    const DenseMatrix& hessian() const { return a_; }
    std::span<const double> linear_term(std::size_t client) const;
    std::span<const double> mean_linear_term() const { return b_bar_; }
    // argmin of the global loss; empty when the Hessian is singular.
    const std::optional<std::vector<double>>& minimizer() const { return x_star_; }

private:
    std::size_t d_;
    std::size_t m_;
    double sigma_;
    double smoothness_ = 0.0;
    double kappa_ = 0.0;
    std::optional<double> f_inf_;
    std::optional<std::vector<double>> x_star_;
    DenseMatrix a_;
    std::vector<double> b_;      // m x d row-major
    std::vector<double> b_bar_;  // d
};

enum class PartitionKind { Iid, Dirichlet };

// Binary logistic regression on a seeded synthetic classifier. Labels are
// Bernoulli(sigmoid(w*'x)); the sample pool is split across clients either
// evenly or by a Dirichlet(alpha) draw per class.
class LogisticSuite final : public ObjectiveSuite {
public:
    LogisticSuite(std::size_t d, std::size_t m, std::size_t samples, PartitionKind partition,
                  double alpha, std::size_t batch, std::uint64_t seed);

    // Import path: rows of (features..., label); partitioning as above.
    LogisticSuite(std::size_t d, std::size_t m, std::vector<double> features, std::vector<int> labels,
                  PartitionKind partition, double alpha, std::size_t batch, std::uint64_t seed);

    std::size_t dim() const override { return d_; }
    std::size_t clients() const override { return m_; }

    double client_loss(std::size_t client, std::span<const double> x) const override;
    std::vector<double> client_grad(std::size_t client, std::span<const double> x) const override;

    double smoothness() const override { return smoothness_; }
    double noise_sigma() const override { return 0.0; }  // minibatch noise has no closed form
    double kappa() const override { return 0.0; }        // unknown; bounds take a user-supplied value
    std::optional<double> loss_lower_bound() const override { return 0.0; }  // cross-entropy >= 0

    std::size_t batch() const { return batch_; }
    const std::vector<std::vector<std::size_t>>& partition() const { return partition_; }

    // Minibatch gradient drawn from the stream keyed by (seed, client, iteration).
    std::vector<double> minibatch_grad(std::size_t client, std::span<const double> x,
                                       std::uint64_t seed, std::size_t iteration) const;

private:
    void finalize();
    double sample_margin(std::size_t sample, std::span<const double> x) const;

    std::size_t d_;
    std::size_t m_;
    std::size_t batch_;
    double smoothness_ = 0.0;
    std::vector<double> features_;  // n x d row-major
    std::vector<int> labels_;       // n, in {0, 1}
    std::vector<std::vector<std::size_t>> partition_;
};

// Splits sample indices across m clients with per-class Dirichlet(alpha)
// proportions; every index is assigned exactly once.
std::vector<std::vector<std::size_t>> partition_dirichlet(const std::vector<int>& labels, std::size_t m,
                                                          double alpha, std::uint64_t seed);

// Stochastic gradient oracle. For quadratics the noise is additive Gaussian
// N(0, sigma^2/d I), so the variance assumption holds with equality; for
// logistic suites the draw is a minibatch subsample. Streams are keyed by
// (seed, client, iteration) and are pure functions of the key.
class GradientOracle {
public:
    GradientOracle(const ObjectiveSuite& suite, std::uint64_t seed);

    std::vector<double> grad(std::size_t client, std::span<const double> x, std::size_t iteration) const;

    const ObjectiveSuite& suite() const { return suite_; }
    std::uint64_t seed() const { return seed_; }

private:
    const ObjectiveSuite& suite_;
    const LogisticSuite* logistic_;  // non-null when minibatch mode applies
    std::uint64_t seed_;
};

}  // namespace coopsgd
