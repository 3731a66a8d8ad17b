#pragma once

#include <cstdint>

namespace keyatm {

// Seeded counter-based generator (SplitMix64). The full state is one
// 64-bit counter, so a stream can be saved and restored bit-exactly.
// All variate generators below are written out explicitly; none of them
// keeps cached values between calls.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed = 0) : seed_(seed), counter_(seed) {}

    static RandomStream restore(std::uint64_t seed, std::uint64_t counter)
    {
        RandomStream r(seed);
        r.counter_ = counter;
        return r;
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

    std::uint64_t next_u64();

    // Uniform on the open interval (0, 1).
    double uniform();
    // Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n);
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }
    // Gamma with shape a and rate b (mean a / b).
    double gamma(double shape, double rate = 1.0);
    // log of a Gamma(shape, 1) variate; stays finite for very small shapes.
    double log_gamma_variate(double shape);
    double beta(double a, double b);
    bool bernoulli(double p) { return uniform() < p; }

    bool operator==(const RandomStream&) const = default;

private:
    std::uint64_t seed_;
    std::uint64_t counter_;
};

} // namespace keyatm
