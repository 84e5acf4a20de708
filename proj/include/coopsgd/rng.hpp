#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <vector>

#include "coopsgd/errors.hpp"

namespace coopsgd {

// Counter-based deterministic random streams. A stream is keyed by a tuple of
// integers (seed, client, iteration, ...); the same key always yields the same
// draw sequence, independent of call order or thread schedule.
class KeyedRng {
public:
    explicit KeyedRng(std::initializer_list<std::uint64_t> key) : state_(0x9E3779B97F4A7C15ULL) {
        for (std::uint64_t part : key) {
            state_ = mix(state_ ^ mix(part + 0x632BE59BD9B4E019ULL));
        }
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    // Uniform in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1]; safe as a log() argument.
    double next_double_open() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    // Standard normal via Box-Muller; the spare draw is cached.
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_double_open();
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        if (n == 0) throw NumericalError("next_below: empty range");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

    // Gamma(alpha, 1) via Marsaglia-Tsang squeeze; alpha < 1 handled by boosting.
    double next_gamma(double alpha) {
        if (!(alpha > 0.0)) throw NumericalError("next_gamma: alpha must be positive");
        if (alpha < 1.0) {
            const double u = next_double_open();
            return next_gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
        }
        const double d = alpha - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = next_gaussian();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            const double u = next_double_open();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // Dirichlet(alpha * 1_n): normalized gamma draws.
    std::vector<double> next_dirichlet(std::size_t n, double alpha) {
        std::vector<double> out(n);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = next_gamma(alpha);
            sum += out[i];
        }
        for (double& v : out) v /= sum;
        return out;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace coopsgd
