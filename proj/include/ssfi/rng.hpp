#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace ssfi {

// Deterministic random source. std::mt19937_64 is fully specified by the
// standard, but the std distributions are not, so the mappings to uniform,
// normal and bernoulli variates are spelled out here. Same seed => same
// stream on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1), 53 mantissa bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), n > 0. Rejection-free modulo is fine here;
    // n is always tiny relative to 2^64 so the bias is negligible and,
    // more importantly, deterministic.
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(engine_() % n);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Box-Muller, one variate per call (the cosine branch; the sine branch
    // is discarded to keep the stream a pure function of call count).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[index(i)]);
        }
    }

private:
    static constexpr double kPi = 3.14159265358979323846;
    std::mt19937_64 engine_;
};

}  // namespace ssfi
