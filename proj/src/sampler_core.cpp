#include "keyatm/sampler_core.hpp"

#include <algorithm>
#include <limits>

namespace keyatm {

std::size_t draw_categorical(std::span<const double> weights, RandomStream& rng)
{
    double total = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0)
            throw SamplerFault("categorical draw: non-finite or negative weight");
        total += w;
    }
    if (!(total > 0.0))
        throw SamplerFault("categorical draw: all weights are zero");

    const double u = rng.uniform() * total;
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0)
            continue;
        acc += weights[i];
        last = i;
        if (u < acc)
            return i;
    }
    return last; // round-off in the running sum
}

double log_sum_exp(std::span<const double> xs)
{
    double m = -std::numeric_limits<double>::infinity();
    for (double x : xs)
        m = std::max(m, x);
    if (!std::isfinite(m))
        return m;
    double s = 0.0;
    for (double x : xs)
        s += std::exp(x - m);
    return m + std::log(s);
}

std::vector<double> draw_dirichlet(std::span<const double> concentration, RandomStream& rng)
{
    std::vector<double> logs(concentration.size());
    for (std::size_t i = 0; i < logs.size(); ++i)
        logs[i] = rng.log_gamma_variate(concentration[i]);
    const double norm = log_sum_exp(logs);
    for (double& x : logs)
        x = std::exp(x - norm);
    return logs;
}

CountTables::CountTables(int num_topics, int keyword_topics, int num_docs, int vocab_size)
    : K_(num_topics), Kt_(keyword_topics), D_(num_docs), V_(vocab_size),
      n_kv_(static_cast<std::size_t>(num_topics) * vocab_size, 0),
      nt_kv_(static_cast<std::size_t>(keyword_topics) * vocab_size, 0),
      n_dk_(static_cast<std::size_t>(num_docs) * num_topics, 0), n_k_(num_topics, 0),
      nt_k_(keyword_topics, 0), n_d_(num_docs, 0)
{
}

void CountTables::add(int d, WordId v, int k, bool keyword, std::int64_t units)
{
    if (keyword) {
        nt_kv_[idx(k, v)] += units;
        nt_k_[k] += units;
    } else {
        n_kv_[idx(k, v)] += units;
        n_k_[k] += units;
    }
    n_dk_[static_cast<std::size_t>(d) * K_ + k] += units;
    n_d_[d] += units;
}

void CountTables::remove(int d, WordId v, int k, bool keyword, std::int64_t units)
{
    add(d, v, k, keyword, -units);
}

CountTables rebuild_counts(const std::vector<std::vector<int>>& z,
                           const std::vector<std::vector<std::uint8_t>>& s, const Corpus& corpus,
                           const TermWeights& weights, int num_topics, int keyword_topics)
{
    CountTables t(num_topics, keyword_topics, corpus.num_docs(), corpus.vocab_size());
    for (int d = 0; d < corpus.num_docs(); ++d) {
        const auto& doc = corpus.documents[d];
        for (std::size_t i = 0; i < doc.size(); ++i)
            t.add(d, doc[i], z[d][i], s[d][i] != 0, weights.units[doc[i]]);
    }
    return t;
}

} // namespace keyatm
