// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "mpsts/errors.hpp"

namespace mpsts {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace detail

// Deterministic random source: mt19937_64 with fixed, hand-rolled variate
// transforms so that streams are reproducible across platforms and standard
// library versions (std::normal_distribution et al. are not pinned by the
// standard).  The identifier string is stored in dataset metadata.
class Rng {
  public:
    static constexpr const char* kIdentifier = "mt19937_64/splitmix64-streams/v1";

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Decorrelated substream: both seed and stream index pass through
    // splitmix64 before seeding the engine.
    static Rng substream(std::uint64_t seed, std::uint64_t stream) {
        return Rng(derive_seed(seed, stream));
    }

    static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
        return detail::splitmix64(detail::splitmix64(seed) ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
    }

    // Uniform on (0, 1]: (k + 1) * 2^-53 with k drawn from 53 random bits.
    // Never returns 0, so log(uniform()) is always finite.
    double uniform() { return (double(engine_() >> 11) + 1.0) * 0x1.0p-53; }

    // Uniform integer in [0, n) via 128-bit multiply-shift.
    std::uint64_t uniform_index(std::uint64_t n) {
        require(n > 0, errc::parameter_domain, "uniform_index needs n > 0");
        return std::uint64_t((static_cast<unsigned __int128>(engine_()) * n) >> 64);
    }

    // Standard normal, Box-Muller with pair caching.
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586 * u2;
        cached_ = r * std::sin(angle);
        have_cached_ = true;
        return r * std::cos(angle);
    }

    // Gamma(shape, scale), Marsaglia-Tsang squeeze with the power boost for
    // shape < 1.
    double gamma(double shape, double scale) {
        require(std::isfinite(shape) && shape > 0.0, errc::parameter_domain,
                "gamma shape must be positive");
        require(std::isfinite(scale) && scale >= 0.0, errc::parameter_domain,
                "gamma scale must be nonnegative");
        if (scale == 0.0) return 0.0;
        if (shape < 1.0) {
            const double u = uniform();
            return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / (3.0 * std::sqrt(d));
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
        }
    }

    // Poisson(lambda) by multiplicative counting, chunked through the
    // additivity Poisson(a+b) = Poisson(a) + Poisson(b) to keep the
    // product above the underflow floor for large lambda.
    std::uint64_t poisson(double lambda) {
        require(std::isfinite(lambda) && lambda >= 0.0, errc::parameter_domain,
                "poisson rate must be finite and nonnegative");
        std::uint64_t count = 0;
        while (lambda > 30.0) {
            count += poisson_small(30.0);
            lambda -= 30.0;
        }
        return count + poisson_small(lambda);
    }

    std::uint64_t binomial(std::uint64_t trials, double p) {
        require(std::isfinite(p) && p >= 0.0 && p <= 1.0, errc::parameter_domain,
                "binomial probability must lie in [0, 1]");
        std::uint64_t count = 0;
        for (std::uint64_t i = 0; i < trials; ++i) count += (uniform() <= p) ? 1 : 0;
        return count;
    }

    std::mt19937_64& engine() { return engine_; }

  private:
    std::uint64_t poisson_small(double lambda) {
        if (lambda <= 0.0) return 0;
        const double floor = std::exp(-lambda);
        double product = 1.0;
        std::uint64_t k = 0;
        do {
            ++k;
            product *= uniform();
        } while (product > floor);
        return k - 1;
    }

    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace mpsts
