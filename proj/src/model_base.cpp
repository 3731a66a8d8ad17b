#include "keyatm/model_base.hpp"

#include "keyatm/errors.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace keyatm {

void HyperParams::validate() const
{
    const std::pair<const char*, double> positive[] = {
        {"gamma1", gamma1},         {"gamma2", gamma2}, {"beta", beta},
        {"beta_tilde", beta_tilde}, {"eta1", eta1},     {"eta2", eta2},
        {"eta1_tilde", eta1_tilde}, {"eta2_tilde", eta2_tilde}, {"sigma", sigma}};
    for (const auto& [name, value] : positive)
        if (!(value > 0.0) || !std::isfinite(value))
            throw ConfigError(std::string("hyperparameter ") + name + " must be positive");
    if (!std::isfinite(mu))
        throw ConfigError("hyperparameter mu must be finite");
}

double log_gamma(double x)
{
#if defined(__GLIBC__)
    int sign;
    return ::lgamma_r(x, &sign);
#else
    return std::lgamma(x);
#endif
}

ModelData::ModelData(const Corpus& corpus, const KeywordDictionary& dict,
                     const TermWeights& weights, HyperParams hp, Mode mode, InitMode init)
    : corpus_(&corpus), dict_(&dict), weights_(&weights), hp_(hp), mode_(mode), init_(init),
      K_(dict.num_topics()), Kt_(mode == Mode::wlda ? 0 : dict.keyword_topics()),
      V_(corpus.vocab_size())
{
    hp_.validate();
    if (K_ <= 0)
        throw ConfigError("model needs at least one topic");
    if (static_cast<int>(weights.units.size()) != V_)
        throw ConfigError("term weights do not match the corpus vocabulary");
    keyword_mask_.assign(static_cast<std::size_t>(Kt_) * V_, 0);
    for (int k = 0; k < Kt_; ++k)
        for (WordId v : dict.topics[k].keywords) {
            if (v < 0 || v >= V_)
                throw ConfigError("keyword id outside the vocabulary");
            keyword_mask_[static_cast<std::size_t>(k) * V_ + v] = 1;
        }
}

DocPriors DocPriors::shared(std::span<const double> alpha)
{
    DocPriors p;
    p.K_ = static_cast<int>(alpha.size());
    p.shared_ = true;
    p.values_.assign(alpha.begin(), alpha.end());
    return p;
}

DocPriors DocPriors::per_document(const Eigen::MatrixXd& rows)
{
    DocPriors p;
    p.K_ = static_cast<int>(rows.cols());
    p.shared_ = false;
    p.values_.resize(static_cast<std::size_t>(rows.rows()) * rows.cols());
    for (Eigen::Index d = 0; d < rows.rows(); ++d)
        for (Eigen::Index k = 0; k < rows.cols(); ++k)
            p.values_[static_cast<std::size_t>(d) * p.K_ + k] = rows(d, k);
    return p;
}

Eigen::MatrixXd DocPriors::as_matrix(int num_docs) const
{
    Eigen::MatrixXd m(num_docs, K_);
    for (int d = 0; d < num_docs; ++d) {
        auto r = row(d);
        for (int k = 0; k < K_; ++k)
            m(d, k) = r[k];
    }
    return m;
}

std::vector<int> all_documents(int num_docs)
{
    std::vector<int> docs(num_docs);
    std::iota(docs.begin(), docs.end(), 0);
    return docs;
}

TokenState init_tokens(const ModelData& data, RandomStream& rng)
{
    const Corpus& corpus = data.corpus();
    const int K = data.num_topics();
    TokenState t;
    t.z.resize(corpus.num_docs());
    t.s.resize(corpus.num_docs());
    std::vector<int> owners;
    for (int d = 0; d < corpus.num_docs(); ++d) {
        const auto& doc = corpus.documents[d];
        t.z[d].resize(doc.size());
        t.s[d].assign(doc.size(), 0);
        for (std::size_t i = 0; i < doc.size(); ++i) {
            owners.clear();
            if (data.init_mode() == InitMode::keywords)
                for (int k = 0; k < data.keyword_topics(); ++k)
                    if (data.is_keyword(k, doc[i]))
                        owners.push_back(k);
            const int k = owners.empty() ? static_cast<int>(rng.uniform_int(K))
                                         : owners[rng.uniform_int(owners.size())];
            t.z[d][i] = k;
            if (data.is_keyword(k, doc[i]))
                t.s[d][i] = rng.bernoulli(0.5) ? 1 : 0;
        }
    }
    t.counts = rebuild_counts(t.z, t.s, corpus, data.weights(), K, data.keyword_topics());
    return t;
}

void conditional_z(const ModelData& data, const TokenState& tokens, int d, int i,
                   std::span<const double> doc_prior, std::span<double> out)
{
    const HyperParams& hp = data.hp();
    const CountTables& c = tokens.counts;
    const WordId v = data.corpus().documents[d][i];
    const int K = data.num_topics();
    const double Vbeta = data.vocab_size() * hp.beta;

    if (data.mode() == Mode::wlda) {
        for (int k = 0; k < K; ++k)
            out[k] = (hp.beta + c.n_kv(k, v)) / (Vbeta + c.n_k(k)) * (c.n_dk(d, k) + doc_prior[k]);
        return;
    }

    if (tokens.s[d][i] == 0) {
        for (int k = 0; k < K; ++k) {
            const double nk = c.n_k(k);
            const double ntk = k < data.keyword_topics() ? c.nt_k(k) : 0.0;
            out[k] = (hp.beta + c.n_kv(k, v)) / (Vbeta + nk) *
                     (nk + hp.gamma2) / (ntk + hp.gamma1 + nk + hp.gamma2) *
                     (c.n_dk(d, k) + doc_prior[k]);
        }
    } else {
        for (int k = 0; k < K; ++k) {
            if (!data.is_keyword(k, v)) {
                out[k] = 0.0;
                continue;
            }
            const double nk = c.n_k(k);
            const double ntk = c.nt_k(k);
            out[k] = (hp.beta_tilde + c.nt_kv(k, v)) / (data.keyword_count(k) * hp.beta_tilde + ntk) *
                     (ntk + hp.gamma1) / (ntk + hp.gamma1 + nk + hp.gamma2) *
                     (c.n_dk(d, k) + doc_prior[k]);
        }
    }
}

std::array<double, 2> conditional_s(const ModelData& data, const TokenState& tokens, int d, int i)
{
    const HyperParams& hp = data.hp();
    const CountTables& c = tokens.counts;
    const WordId v = data.corpus().documents[d][i];
    const int k = tokens.z[d][i];
    const double nk = c.n_k(k);
    std::array<double, 2> w{};
    w[0] = (hp.beta + c.n_kv(k, v)) / (data.vocab_size() * hp.beta + nk) * (nk + hp.gamma2);
    if (data.mode() == Mode::keyatm && data.is_keyword(k, v)) {
        const double ntk = c.nt_k(k);
        w[1] = (hp.beta_tilde + c.nt_kv(k, v)) / (data.keyword_count(k) * hp.beta_tilde + ntk) *
               (ntk + hp.gamma1);
    }
    return w;
}

void remove_token(const ModelData& data, TokenState& tokens, int d, int i)
{
    const WordId v = data.corpus().documents[d][i];
    tokens.counts.remove(d, v, tokens.z[d][i], tokens.s[d][i] != 0, data.weights().units[v]);
}

void add_token(const ModelData& data, TokenState& tokens, int d, int i)
{
    const WordId v = data.corpus().documents[d][i];
    tokens.counts.add(d, v, tokens.z[d][i], tokens.s[d][i] != 0, data.weights().units[v]);
}

void sweep_tokens(const ModelData& data, TokenState& tokens, const DocPriors& priors,
                  RandomStream& rng)
{
    const Corpus& corpus = data.corpus();
    std::vector<double> weights(data.num_topics());
    for (int d = 0; d < corpus.num_docs(); ++d) {
        const auto prior = priors.row(d);
        const auto& doc = corpus.documents[d];
        for (int i = 0; i < static_cast<int>(doc.size()); ++i) {
            remove_token(data, tokens, d, i);
            try {
                conditional_z(data, tokens, d, i, prior, weights);
                const int k = static_cast<int>(draw_categorical(weights, rng));
                tokens.z[d][i] = k;
                if (data.is_keyword(k, doc[i])) {
                    const auto ws = conditional_s(data, tokens, d, i);
                    tokens.s[d][i] = static_cast<std::uint8_t>(draw_categorical(ws, rng));
                } else {
                    tokens.s[d][i] = 0;
                }
            } catch (const SamplerFault& e) {
                throw SamplerFault(std::string(e.what()) + " (document '" + corpus.doc_ids[d] +
                                   "', token " + std::to_string(i) + ")");
            }
            add_token(data, tokens, d, i);
        }
    }
}

double alpha_log_target(const CountTables& counts, std::span<const int> docs,
                        std::span<const double> alpha, int k, double value, double shape,
                        double rate)
{
    double rest = 0.0;
    for (std::size_t j = 0; j < alpha.size(); ++j)
        if (static_cast<int>(j) != k)
            rest += alpha[j];
    const double total = rest + value;
    double lp = (shape - 1.0) * std::log(value) - rate * value;
    const double per_doc = log_gamma(total) - log_gamma(value);
    lp += per_doc * static_cast<double>(docs.size());
    for (int d : docs)
        lp += log_gamma(counts.n_dk(d, k) + value) - log_gamma(counts.n_d(d) + total);
    return lp;
}

BaseChainState init_state(const ModelData& data, RandomStream& rng)
{
    BaseChainState st;
    const int K = data.num_topics();
    st.alpha.resize(K);
    for (int k = 0; k < K; ++k)
        st.alpha(k) = rng.gamma(data.alpha_shape(k), data.alpha_rate(k));
    st.tokens = init_tokens(data, rng);
    return st;
}

std::vector<double> conditional_z(const ModelData& data, const BaseChainState& state, int d, int i)
{
    std::vector<double> out(data.num_topics());
    conditional_z(data, state.tokens, d, i,
                  std::span<const double>(state.alpha.data(), state.alpha.size()), out);
    return out;
}

void sample_alpha(const ModelData& data, BaseChainState& state, RandomStream& rng,
                  const SliceOptions& opts)
{
    const auto docs = all_documents(data.num_docs());
    std::span<const double> alpha(state.alpha.data(), state.alpha.size());
    for (int k = 0; k < data.num_topics(); ++k) {
        auto target = [&](double a) {
            return alpha_log_target(state.tokens.counts, docs, alpha, k, a, data.alpha_shape(k),
                                    data.alpha_rate(k));
        };
        try {
            state.alpha(k) = slice_sample_positive(target, state.alpha(k), opts, rng);
        } catch (const SamplerFault& e) {
            throw SamplerFault(std::string(e.what()) + " (alpha of topic " + std::to_string(k) + ")");
        }
    }
}

void sweep(const ModelData& data, BaseChainState& state, RandomStream& rng,
           const SliceOptions& opts)
{
    sweep_tokens(data, state.tokens,
                 DocPriors::shared(std::span<const double>(state.alpha.data(), state.alpha.size())),
                 rng);
    sample_alpha(data, state, rng, opts);
    ++state.iteration;
}

} // namespace keyatm
