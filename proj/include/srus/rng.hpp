#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "srus/errors.hpp"

namespace srus {

// Deterministic generator used everywhere randomness is needed (phantom
// synthesis, noise injection, test data). splitmix64 core so streams are
// reproducible bit-for-bit across platforms and standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; the second variate of each pair is cached.
    double gauss() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u = 1.0 - uniform(); // (0, 1], keeps log finite
        double r = std::sqrt(-2.0 * std::log(u));
        double theta = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Knuth's product method; fine for the modest means used here.
    int poisson(double mean) {
        if (mean < 0) throw ConfigError("poisson: mean must be >= 0");
        if (mean == 0) return 0;
        double limit = std::exp(-mean);
        int k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform();
        } while (p > limit);
        return k - 1;
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace srus
