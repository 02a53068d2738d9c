#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace nsmm::rng {

/// mt19937_64 bit stream with hand-rolled variate transforms, so that a
/// given seed produces the same doubles on every standard library.
class Engine {
  public:
    explicit Engine(std::uint64_t seed) : gen_(seed) {}

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double exponential() { return -std::log1p(-uniform01()); }

    /// Standard normal by the polar method.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double factor = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * factor;
        has_spare_ = true;
        return u * factor;
    }

    /// Marsaglia-Tsang; shapes below one use the boost by a uniform power.
    double gamma(double shape) {
        if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be positive");
        if (shape < 1.0) {
            double u;
            do { u = uniform01(); } while (u == 0.0);
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform01();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    double beta(double p, double q) {
        const double g1 = gamma(p);
        const double g2 = gamma(q);
        return g1 / (g1 + g2);
    }

  private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace nsmm::rng
