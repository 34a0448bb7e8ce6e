#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace cmdp {

/// Seeded generator with platform-independent derived draws (the standard
/// distributions are implementation-defined, so they are avoided here).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Index in [0, n).
    int index(int n) { return int(uniform() * n); }

    double exponential() { return -std::log1p(-uniform()); }

    /// Inverse-CDF draw from a probability vector.
    int categorical(std::span<const double> probs) {
        const double u = uniform();
        double acc = 0.0;
        int last_positive = 0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (probs[i] <= 0.0) continue;
            acc += probs[i];
            last_positive = int(i);
            if (u < acc) return int(i);
        }
        return last_positive;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace cmdp
