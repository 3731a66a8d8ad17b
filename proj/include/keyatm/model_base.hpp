#pragma once

#include "keyatm/corpus.hpp"
#include "keyatm/random.hpp"
#include "keyatm/sampler_core.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace keyatm {

enum class Mode { keyatm, wlda };

// Starting topic assignments. `random`: z uniform over all topics.
// `keywords`: a token whose word is a keyword starts in one of the keyword
// topics listing it (uniformly); other tokens as in `random`.
enum class InitMode { random, keywords };

struct HyperParams {
    double gamma1 = 1.0;
    double gamma2 = 1.0;
    double beta = 0.01;
    double beta_tilde = 0.1;
    double eta1 = 2.0;
    double eta2 = 1.0;
    double eta1_tilde = 1.0;
    double eta2_tilde = 1.0;
    double mu = 0.0;
    double sigma = 1.0; // standard deviation of the lambda prior

    void validate() const;
};

double log_gamma(double x);

// Immutable inputs shared by every chain of one fit. Holds non-owning
// references; the corpus, dictionary and weights must outlive it.
class ModelData {
public:
    ModelData(const Corpus& corpus, const KeywordDictionary& dict, const TermWeights& weights,
              HyperParams hp, Mode mode, InitMode init = InitMode::random);

    const Corpus& corpus() const { return *corpus_; }
    const KeywordDictionary& dict() const { return *dict_; }
    const TermWeights& weights() const { return *weights_; }
    const HyperParams& hp() const { return hp_; }
    Mode mode() const { return mode_; }
    InitMode init_mode() const { return init_; }

    int num_topics() const { return K_; }
    // Keyword topics active in the sampler; zero in wlda mode.
    int keyword_topics() const { return Kt_; }
    int num_docs() const { return corpus_->num_docs(); }
    int vocab_size() const { return V_; }

    bool is_keyword(int k, WordId v) const
    {
        return k < Kt_ && keyword_mask_[static_cast<std::size_t>(k) * V_ + v] != 0;
    }
    // L_k
    int keyword_count(int k) const { return static_cast<int>(dict_->topics[k].keywords.size()); }

    // Gamma prior of the topic's Dirichlet parameter (keyword topics use eta~).
    double alpha_shape(int k) const { return k < Kt_ ? hp_.eta1_tilde : hp_.eta1; }
    double alpha_rate(int k) const { return k < Kt_ ? hp_.eta2_tilde : hp_.eta2; }

private:
    const Corpus* corpus_;
    const KeywordDictionary* dict_;
    const TermWeights* weights_;
    HyperParams hp_;
    Mode mode_;
    InitMode init_;
    int K_, Kt_, V_;
    std::vector<char> keyword_mask_;
};

// Per-token latent variables and the count tables they induce.
struct TokenState {
    std::vector<std::vector<int>> z;
    std::vector<std::vector<std::uint8_t>> s;
    CountTables counts;
};

// Per-document Dirichlet parameters of theta_d: either one vector shared
// by every document or one row per document.
class DocPriors {
public:
    static DocPriors shared(std::span<const double> alpha);
    static DocPriors per_document(const Eigen::MatrixXd& rows);

    int num_topics() const { return K_; }
    std::span<const double> row(int d) const
    {
        const std::size_t off = shared_ ? 0 : static_cast<std::size_t>(d) * K_;
        return {values_.data() + off, static_cast<std::size_t>(K_)};
    }
    Eigen::MatrixXd as_matrix(int num_docs) const;

private:
    int K_ = 0;
    bool shared_ = true;
    std::vector<double> values_;
};

// z drawn per data.init_mode(); s ~ Bernoulli(0.5) on tokens that may be
// keywords of their topic (keyatm mode only).
TokenState init_tokens(const ModelData& data, RandomStream& rng);

// Token (d, i) must already be removed from the counts. Fills `out` (size K)
// with unnormalized weights for z_di given the current s_di.
void conditional_z(const ModelData& data, const TokenState& tokens, int d, int i,
                   std::span<const double> doc_prior, std::span<double> out);

// Unnormalized (s = 0, s = 1) weights for token (d, i), excluded from counts,
// given its current z.
std::array<double, 2> conditional_s(const ModelData& data, const TokenState& tokens, int d, int i);

void remove_token(const ModelData& data, TokenState& tokens, int d, int i);
void add_token(const ModelData& data, TokenState& tokens, int d, int i);

// One pass over every token in document order: z then s.
void sweep_tokens(const ModelData& data, TokenState& tokens, const DocPriors& priors,
                  RandomStream& rng);

// log of the collapsed conditional of alpha_k (up to a constant) over the
// documents `docs`, evaluated at alpha_k = value.
double alpha_log_target(const CountTables& counts, std::span<const int> docs,
                        std::span<const double> alpha, int k, double value, double shape,
                        double rate);

struct BaseChainState {
    TokenState tokens;
    Eigen::VectorXd alpha;
    long iteration = 0;
};

BaseChainState init_state(const ModelData& data, RandomStream& rng);

std::vector<double> conditional_z(const ModelData& data, const BaseChainState& state, int d, int i);

void sample_alpha(const ModelData& data, BaseChainState& state, RandomStream& rng,
                  const SliceOptions& opts = {});

void sweep(const ModelData& data, BaseChainState& state, RandomStream& rng,
           const SliceOptions& opts = {});

std::vector<int> all_documents(int num_docs);

} // namespace keyatm
