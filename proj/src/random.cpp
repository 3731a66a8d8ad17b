#include "keyatm/random.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace keyatm {

std::uint64_t RandomStream::next_u64()
{
    std::uint64_t z = (counter_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double RandomStream::uniform()
{
    // 53 random bits, shifted to the cell midpoint so 0 is never returned
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t RandomStream::uniform_int(std::uint64_t n)
{
    if (n == 0)
        throw std::invalid_argument("uniform_int: empty range");
    // rejection to remove modulo bias
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % n;
}

double RandomStream::normal()
{
    // Marsaglia polar method; the second variate is discarded.
    for (;;) {
        const double u = 2.0 * uniform() - 1.0;
        const double v = 2.0 * uniform() - 1.0;
        const double s = u * u + v * v;
        if (s > 0.0 && s < 1.0)
            return u * std::sqrt(-2.0 * std::log(s) / s);
    }
}

double RandomStream::log_gamma_variate(double shape)
{
    if (!(shape > 0.0))
        throw std::invalid_argument("gamma: shape must be positive");
    if (shape < 1.0) {
        // G(a) = G(a + 1) * U^(1/a)
        const double lg = log_gamma_variate(shape + 1.0);
        return lg + std::log(uniform()) / shape;
    }
    // Marsaglia & Tsang
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x)
            return std::log(d * v);
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
            return std::log(d * v);
    }
}

double RandomStream::gamma(double shape, double rate)
{
    if (!(rate > 0.0))
        throw std::invalid_argument("gamma: rate must be positive");
    return std::exp(log_gamma_variate(shape)) / rate;
}

double RandomStream::beta(double a, double b)
{
    const double lx = log_gamma_variate(a);
    const double ly = log_gamma_variate(b);
    // x / (x + y) computed stably in log space
    const double m = std::max(lx, ly);
    const double ex = std::exp(lx - m);
    const double ey = std::exp(ly - m);
    return ex / (ex + ey);
}

} // namespace keyatm
