#include "coopsgd/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "coopsgd/errors.hpp"

namespace coopsgd {

double eta_eff(double eta, double fraction, std::size_t clients, std::size_t aux) {
    if (clients == 0) throw ConfigError("objective.m", "client count must be at least 1");
    return fraction * static_cast<double>(clients) /
           static_cast<double>(clients + aux) * eta;
}

double s_series(std::size_t iterations, std::size_t tau) {
    if (tau == 0) throw ConfigError("run.tau", "communication period must be at least 1");
    if (iterations < tau) throw ConfigError("run.k", "horizon shorter than one communication period");
    const double rounds = static_cast<double>(iterations / tau);
    return (rounds - 1.0) * (2.0 + rounds / 2.0);
}

double p_value(double eta, double delta, std::size_t tau, std::size_t iterations) {
    if (eta < 0.0 || delta < 0.0) throw ConfigError("bounds", "inputs must be nonnegative");
    const double rounds = static_cast<double>(iterations / tau);
    const double series = s_series(iterations, tau);
    const double t = static_cast<double>(tau);
    return eta * eta * delta * t * (2.0 * t * series + (t - 1.0) * (1.0 + rounds));
}

namespace {

double x1_term(const BoundInputs& in) {
    const double cm = in.fraction * static_cast<double>(in.clients);
    double term = in.delta * in.smoothness * in.smoothness * in.x1_frob_sq / cm;
    if (in.x1_term_over_k) term /= static_cast<double>(in.iterations);
    return term;
}

}  // namespace

double epsilon_iid(const BoundInputs& in) {
    const double cm = in.fraction * static_cast<double>(in.clients);
    const double k = static_cast<double>(in.iterations);
    const double e_eff = eta_eff(in.eta, in.fraction, in.clients, in.aux);
    const double l = in.smoothness;
    const double opt = 2.0 * (in.initial_loss - in.loss_floor) / (e_eff * k);
    const double noise = e_eff * l * in.sigma * in.sigma / cm;
    const double drift = in.eta * in.eta * in.sigma * in.sigma * l * l * in.delta * (k - 1.0);
    return 4.0 * (opt + noise + x1_term(in) + drift);
}

double epsilon_niid(const BoundInputs& in) {
    const double p = p_value(in.eta, in.delta, in.tau, in.iterations);
    return epsilon_iid(in) + 12.0 * p * in.smoothness * in.smoothness * in.kappa * in.kappa;
}

BoundReport evaluate_bounds(const BoundInputs& in) {
    if (!(in.fraction > 0.0) || in.fraction > 1.0)
        throw ConfigError("selection.c", "fraction must be in (0, 1]");
    if (in.iterations < in.tau)
        throw ConfigError("run.k", "horizon shorter than one communication period");

    BoundReport rep;
    rep.k_effective = in.iterations / in.tau * in.tau;
    rep.k_truncated = rep.k_effective != in.iterations;

    rep.eta_eff = eta_eff(in.eta, in.fraction, in.clients, in.aux);
    rep.s_series = s_series(in.iterations, in.tau);
    rep.p_value = p_value(in.eta, in.delta, in.tau, in.iterations);
    rep.epsilon_iid = epsilon_iid(in);
    rep.epsilon_niid = epsilon_niid(in);

    const double l2 = in.smoothness * in.smoothness;
    rep.lr_ok = rep.eta_eff * in.smoothness <= 1.0;
    const double p_cap = std::min({1.0 / 6.0, 1.0 / (6.0 * l2 + 3.0), in.fraction / (6.0 * l2)});
    rep.p_ok = rep.p_value >= 0.0 && rep.p_value <= p_cap;
    rep.c_ok = in.fraction >= 6.0 * rep.p_value * l2;
    const double t = static_cast<double>(in.tau);
    const double k = static_cast<double>(in.iterations);
    rep.k_ok = in.delta > 1.0 ? k >= 2.0 * (2.0 * t - 1.0) : k >= in.delta * (2.0 * t - 0.5);
    return rep;
}

CorollaryRate corollary1_lr(double smoothness, double fraction, std::size_t clients, std::size_t aux,
                            std::size_t iterations) {
    if (!(smoothness > 0.0)) throw ConfigError("bounds.L", "smoothness must be positive");
    if (!(fraction > 0.0) || fraction > 1.0)
        throw ConfigError("selection.c", "fraction must be in (0, 1]");
    const double cm = fraction * static_cast<double>(clients);
    const double k = static_cast<double>(iterations);
    CorollaryRate out;
    out.eta = static_cast<double>(clients + aux) / (smoothness * cm) * std::sqrt(cm / (k * k));
    out.horizon_floor = std::sqrt(cm);
    out.horizon_ok = k >= out.horizon_floor;
    out.stat_term = 1.0 / std::sqrt(cm);
    out.delta_term_coeff = static_cast<double>(clients) / (fraction * k);
    return out;
}

SigmaComparison sigma_comparison_term(double varsigma, std::size_t tau) {
    if (varsigma < 0.0 || varsigma >= 1.0)
        throw ConfigError("bounds.varsigma", "need 0 <= varsigma < 1");
    SigmaComparison out;
    const double s2 = varsigma * varsigma;
    out.term = (1.0 + s2) / (1.0 - s2) * static_cast<double>(tau) - 1.0;
    out.threshold =
        varsigma == 0.0 ? std::numeric_limits<double>::infinity() : (1.0 - s2) / (2.0 * s2);
    out.tau_above_threshold = static_cast<double>(tau) > out.threshold;
    return out;
}

std::string bound_report_to_json(const BoundInputs& in, const BoundReport& rep) {
    nlohmann::json doc;
    doc["inputs"] = {{"L", in.smoothness},
                     {"sigma", in.sigma},
                     {"kappa", in.kappa},
                     {"F_u1", in.initial_loss},
                     {"F_inf", in.loss_floor},
                     {"eta", in.eta},
                     {"K", in.iterations},
                     {"tau", in.tau},
                     {"c", in.fraction},
                     {"m", in.clients},
                     {"v", in.aux},
                     {"delta", in.delta},
                     {"X1_frob_sq", in.x1_frob_sq},
                     {"x1_term_over_k", in.x1_term_over_k}};
    doc["eta_eff"] = rep.eta_eff;
    doc["s_series"] = rep.s_series;
    doc["p_value"] = rep.p_value;
    doc["epsilon_iid"] = rep.epsilon_iid;
    doc["epsilon_niid"] = rep.epsilon_niid;
    doc["lr_ok"] = rep.lr_ok;
    doc["p_ok"] = rep.p_ok;
    doc["c_ok"] = rep.c_ok;
    doc["k_ok"] = rep.k_ok;
    doc["k_truncated"] = rep.k_truncated;
    doc["k_effective"] = rep.k_effective;
    return doc.dump(2);
}

}  // namespace coopsgd
