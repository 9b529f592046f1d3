#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "phaseseg/errors.hpp"

namespace phaseseg {

// splitmix64 finalizer; used to derive independent streams from (seed, index).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic RNG. std::mt19937_64 output is fully specified by the
// standard; all samplers are hand-rolled so sequences do not depend on the
// standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t bits() { return engine_(); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n == 0) throw ParameterError("uniform_int: n must be positive");
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t r = engine_();
        while (r >= limit) r = engine_();
        return r % n;
    }

    // standard normal, Box-Muller with cached spare
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Marsaglia-Tsang for shape >= 1; boost via uniform power for shape < 1.
    double gamma(double shape) {
        if (shape <= 0.0) throw ParameterError("gamma: shape must be positive");
        if (shape < 1.0) {
            const double u = uniform();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // Knuth's product method; fine for the desk-scale means used here.
    long poisson(double lambda) {
        if (lambda < 0.0) throw ParameterError("poisson: lambda must be >= 0");
        if (lambda == 0.0) return 0;
        long chunks = 0;
        // split large means so exp(-lambda) stays representable
        while (lambda > 500.0) {
            chunks += poisson(500.0);
            lambda -= 500.0;
        }
        const double l = std::exp(-lambda);
        long k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform();
        } while (p > l);
        return chunks + k - 1;
    }

    // Negative binomial with given mean and dispersion (gamma-Poisson mixture).
    long negative_binomial(double mean, double dispersion) {
        if (mean <= 0.0) throw ParameterError("negative_binomial: mean must be positive");
        if (dispersion <= 0.0) throw ParameterError("negative_binomial: dispersion must be positive");
        const double rate = gamma(dispersion) * (mean / dispersion);
        return poisson(rate);
    }

    // index sampled proportionally to non-negative weights
    std::size_t categorical(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) {
            if (w < 0.0) throw ParameterError("categorical: negative weight");
            total += w;
        }
        if (total <= 0.0) throw ParameterError("categorical: weights sum to zero");
        const double r = uniform() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (r < acc) return i;
        }
        return weights.size() - 1;
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace phaseseg
