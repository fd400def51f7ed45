#ifndef CCLHMM_RNG_HPP
#define CCLHMM_RNG_HPP

#include <cstdint>
#include <random>

#include "cclhmm/table.hpp"

namespace cclhmm {

// Seeded generator wrapper. Sampling goes through explicit inverse-CDF
// draws on raw 53-bit uniforms instead of std::discrete_distribution,
// whose algorithm is implementation-defined; this keeps outputs
// reproducible for a fixed seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Uniform double in [0, 1).
    double uniform() { return double(gen_() >> 11) * 0x1.0p-53; }

    // Index i with probability p[i] / sum(p). p need not be normalized.
    int categorical(const double* p, int n) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) total += p[i];
        double u = uniform() * total;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            acc += p[i];
            if (u < acc) return i;
        }
        return n - 1;  // u landed on accumulated roundoff
    }

    int categorical(const Vec& p) { return categorical(p.data(), int(p.size())); }

    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
};

}  // namespace cclhmm

#endif
