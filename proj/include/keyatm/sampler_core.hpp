#pragma once

#include "keyatm/corpus.hpp"
#include "keyatm/errors.hpp"
#include "keyatm/random.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace keyatm {

// Returns i with probability weights[i] / sum(weights).
// Throws SamplerFault when the weights are all zero or not finite.
std::size_t draw_categorical(std::span<const double> weights, RandomStream& rng);

// Symmetric or asymmetric Dirichlet draw, generated in log space so that
// tiny concentration parameters do not underflow to an all-zero vector.
std::vector<double> draw_dirichlet(std::span<const double> concentration, RandomStream& rng);

double log_sum_exp(std::span<const double> xs);

struct SliceOptions {
    double width = 1.0;      // initial bracket width (log scale for positive targets)
    int max_steps_out = 100; // per side
    int max_shrinks = 100;
};

struct SliceDraw {
    double x;     // new point on the original scale
    double level; // slice level on the sampling axis
};

namespace detail {

template <class G>
SliceDraw slice_on_axis(G&& g, double u0, const SliceOptions& opts, RandomStream& rng,
                        double (*to_x)(double))
{
    const double g0 = g(u0);
    if (!std::isfinite(g0))
        throw SamplerFault("slice sampler: log density not finite at the current point");
    const double level = g0 + std::log(rng.uniform());

    double left = u0 - opts.width * rng.uniform();
    double right = left + opts.width;
    for (int steps = 0; g(left) > level; left -= opts.width)
        if (++steps > opts.max_steps_out)
            throw SamplerFault("slice sampler: bracket expansion exceeded the step limit");
    for (int steps = 0; g(right) > level; right += opts.width)
        if (++steps > opts.max_steps_out)
            throw SamplerFault("slice sampler: bracket expansion exceeded the step limit");

    for (int shrinks = 0; shrinks <= opts.max_shrinks; ++shrinks) {
        const double u1 = left + rng.uniform() * (right - left);
        if (g(u1) > level)
            return {to_x(u1), level};
        if (u1 < u0)
            left = u1;
        else
            right = u1;
    }
    throw SamplerFault("slice sampler: shrinkage exceeded the step limit");
}

inline double identity(double u) { return u; }
inline double exponential(double u) { return std::exp(u); }

} // namespace detail

// One stepping-out/shrinkage slice transition for a target on (0, inf),
// run on u = log(x) with the Jacobian folded into the density.
// `level` is reported on the log axis: log_density(x) + log(x) > level.
template <class LogDensity>
SliceDraw slice_transition_positive(LogDensity&& log_density, double x0, const SliceOptions& opts,
                                    RandomStream& rng)
{
    auto g = [&](double u) -> double {
        const double x = std::exp(u);
        if (!(x > 0.0) || !std::isfinite(x))
            return -std::numeric_limits<double>::infinity();
        return log_density(x) + u;
    };
    return detail::slice_on_axis(g, std::log(x0), opts, rng, &detail::exponential);
}

template <class LogDensity>
double slice_sample_positive(LogDensity&& log_density, double x0, const SliceOptions& opts,
                             RandomStream& rng)
{
    return slice_transition_positive(std::forward<LogDensity>(log_density), x0, opts, rng).x;
}

// Slice transition for a target on the whole real line.
template <class LogDensity>
SliceDraw slice_transition_real(LogDensity&& log_density, double x0, const SliceOptions& opts,
                                RandomStream& rng)
{
    return detail::slice_on_axis(log_density, x0, opts, rng, &detail::identity);
}

template <class LogDensity>
double slice_sample_real(LogDensity&& log_density, double x0, const SliceOptions& opts,
                         RandomStream& rng)
{
    return slice_transition_real(std::forward<LogDensity>(log_density), x0, opts, rng).x;
}

// Weighted count tables of the collapsed sampler. Values are held in
// fixed point (TermWeights::kUnit), so adding and removing a token is exact
// and tables rebuilt from scratch compare equal to incrementally kept ones.
class CountTables {
public:
    CountTables() = default;
    CountTables(int num_topics, int keyword_topics, int num_docs, int vocab_size);

    void add(int d, WordId v, int k, bool keyword, std::int64_t units);
    void remove(int d, WordId v, int k, bool keyword, std::int64_t units);

    int num_topics() const { return K_; }
    int keyword_topics() const { return Kt_; }
    int num_docs() const { return D_; }
    int vocab_size() const { return V_; }

    double n_kv(int k, WordId v) const { return real(n_kv_[idx(k, v)]); }
    double n_k(int k) const { return real(n_k_[k]); }
    double nt_kv(int k, WordId v) const { return real(nt_kv_[idx(k, v)]); }
    double nt_k(int k) const { return real(nt_k_[k]); }
    double n_dk(int d, int k) const { return real(n_dk_[static_cast<std::size_t>(d) * K_ + k]); }
    double n_d(int d) const { return real(n_d_[d]); }

    bool operator==(const CountTables&) const = default;

private:
    static double real(std::int64_t u) { return static_cast<double>(u) * TermWeights::kUnit; }
    std::size_t idx(int k, WordId v) const { return static_cast<std::size_t>(k) * V_ + v; }

    int K_ = 0, Kt_ = 0, D_ = 0, V_ = 0;
    std::vector<std::int64_t> n_kv_, nt_kv_, n_dk_, n_k_, nt_k_, n_d_;
};

// Tables computed directly from the count definitions.
CountTables rebuild_counts(const std::vector<std::vector<int>>& z,
                           const std::vector<std::vector<std::uint8_t>>& s, const Corpus& corpus,
                           const TermWeights& weights, int num_topics, int keyword_topics);

} // namespace keyatm
