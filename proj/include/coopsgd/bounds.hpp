#pragma once

#include <cstddef>
#include <string>

namespace coopsgd {

// Everything the convergence-error calculator consumes. All quantities refer
// to one run: smoothness L, gradient-noise sigma, dissimilarity kappa,
// initial loss gap, learning rate, horizon K, period tau, selected fraction
// c, client/auxiliary counts, the mixing deviation bound delta, and the
// squared Frobenius norm of the initial state.
struct BoundInputs {
    double smoothness = 1.0;   // L
    double sigma = 0.0;
    double kappa = 0.0;
    double initial_loss = 0.0;  // F(u_1)
    double loss_floor = 0.0;    // F_inf
    double eta = 0.1;
    std::size_t iterations = 1;  // K
    std::size_t tau = 1;
    double fraction = 1.0;  // c
    std::size_t clients = 1;     // m
    std::size_t aux = 0;         // v
    double delta = 0.0;
    double x1_frob_sq = 0.0;
    // Variant that divides the initialization-error term by K as well.
    bool x1_term_over_k = false;
};

struct BoundReport {
    double eta_eff = 0.0;
    double s_series = 0.0;
    double p_value = 0.0;
    double epsilon_iid = 0.0;
    double epsilon_niid = 0.0;
    bool lr_ok = false;    // eta_eff * L <= 1
    bool p_ok = false;     // P <= min(1/6, 1/(6L^2+3), c/(6L^2))
    bool c_ok = false;     // c >= 6 P L^2
    bool k_ok = false;     // K large enough for the P condition to bind
    bool k_truncated = false;  // K was rounded down to a whole number of periods
    std::size_t k_effective = 0;
};

// Effective learning rate of the averaged-model recursion: (c m / (m+v)) eta.
double eta_eff(double eta, double fraction, std::size_t clients, std::size_t aux);

// (R - 1)(2 + R/2) with R = floor(K / tau) communication rounds.
double s_series(std::size_t iterations, std::size_t tau);

// eta^2 delta tau [ 2 tau S_series + (tau - 1)(1 + R) ].
double p_value(double eta, double delta, std::size_t tau, std::size_t iterations);

double epsilon_iid(const BoundInputs& in);
double epsilon_niid(const BoundInputs& in);

// Full report: values plus the validity flags. Values are always computed,
// even when a flag fails, so sweeps can chart the validity frontier.
BoundReport evaluate_bounds(const BoundInputs& in);

struct CorollaryRate {
    double eta = 0.0;
    bool horizon_ok = false;       // K >= sqrt(c m)
    double horizon_floor = 0.0;    // sqrt(c m)
    double stat_term = 0.0;        // 1 / sqrt(c m)
    double delta_term_coeff = 0.0; // m / (c K), multiplies delta
};

// Learning-rate recipe eta = (m+v)/(L c m) * sqrt(c m / K^2) and the scale of
// the two terms in the resulting rate.
CorollaryRate corollary1_lr(double smoothness, double fraction, std::size_t clients, std::size_t aux,
                            std::size_t iterations);

struct SigmaComparison {
    double term = 0.0;       // ((1 + s^2)/(1 - s^2)) tau - 1
    double threshold = 0.0;  // (1 - s^2) / (2 s^2); +inf at s = 0
    bool tau_above_threshold = false;
};

// Spectral-gap constant of the symmetric-mixing framework this bound is
// compared against; only used for reporting which bound is tighter.
SigmaComparison sigma_comparison_term(double varsigma, std::size_t tau);

std::string bound_report_to_json(const BoundInputs& in, const BoundReport& rep);

}  // namespace coopsgd
