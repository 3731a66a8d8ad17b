#include "keyatm/estimators.hpp"

#include "keyatm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace keyatm {

Eigen::MatrixXd phi_single(const ModelData& data, const CountTables& counts,
                           Eigen::VectorXd* raw_row_sums)
{
    const HyperParams& hp = data.hp();
    const int K = data.num_topics();
    const int V = data.vocab_size();
    const int Kt = data.keyword_topics();
    const bool mixture = data.mode() == Mode::keyatm;

    Eigen::MatrixXd phi(K, V);
    if (raw_row_sums)
        raw_row_sums->resize(K);
    for (int k = 0; k < K; ++k) {
        const double nk = counts.n_k(k);
        const double ntk = k < Kt ? counts.nt_k(k) : 0.0;
        const double denom = ntk + hp.gamma1 + nk + hp.gamma2;
        const double w_general = mixture ? (nk + hp.gamma2) / denom : 1.0;
        for (int v = 0; v < V; ++v)
            phi(k, v) = w_general * (hp.beta + counts.n_kv(k, v)) / (V * hp.beta + nk);
        if (k < Kt) {
            const double w_keyword = (ntk + hp.gamma1) / denom;
            const double Lbeta = data.keyword_count(k) * hp.beta_tilde;
            for (WordId v : data.dict().topics[k].keywords)
                phi(k, v) += w_keyword * (hp.beta_tilde + counts.nt_kv(k, v)) / (Lbeta + ntk);
        }
        const double sum = phi.row(k).sum();
        if (raw_row_sums)
            (*raw_row_sums)(k) = sum;
        phi.row(k) /= sum;
    }
    return phi;
}

PhiEstimate estimate_phi(const ChainTrace& trace, const ModelData& data)
{
    const auto kept = trace.kept();
    if (kept.empty())
        throw ConfigError("estimate_phi: no draws after burn-in");
    PhiEstimate est;
    est.phi = Eigen::MatrixXd::Zero(data.num_topics(), data.vocab_size());
    est.raw_row_sums = Eigen::VectorXd::Zero(data.num_topics());
    Eigen::VectorXd sums;
    for (const Draw* d : kept) {
        est.phi += phi_single(data, d->counts, &sums);
        est.raw_row_sums += sums;
    }
    est.phi /= static_cast<double>(kept.size());
    est.raw_row_sums /= static_cast<double>(kept.size());
    return est;
}

Eigen::MatrixXd theta_single(const CountTables& counts, const Eigen::MatrixXd& doc_prior)
{
    const Eigen::Index D = doc_prior.rows();
    const Eigen::Index K = doc_prior.cols();
    Eigen::MatrixXd theta(D, K);
    for (Eigen::Index d = 0; d < D; ++d) {
        for (Eigen::Index k = 0; k < K; ++k)
            theta(d, k) = doc_prior(d, k) + counts.n_dk(static_cast<int>(d), static_cast<int>(k));
        theta.row(d) /= theta.row(d).sum();
    }
    return theta;
}

Eigen::MatrixXd estimate_theta(const ChainTrace& trace)
{
    const auto kept = trace.kept();
    if (kept.empty())
        throw ConfigError("estimate_theta: no draws after burn-in");
    Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(kept.front()->doc_prior.rows(),
                                                  kept.front()->doc_prior.cols());
    for (const Draw* d : kept)
        theta += theta_single(d->counts, d->doc_prior);
    return theta / static_cast<double>(kept.size());
}

TimeTrend time_trend(const Eigen::MatrixXd& theta_hat, const Corpus& corpus)
{
    if (!corpus.has_time())
        throw SchemaError("time_trend: the corpus has no time index");
    const int T = corpus.num_periods();
    const Eigen::Index K = theta_hat.cols();
    TimeTrend trend;
    trend.mean = Eigen::MatrixXd::Zero(T, K);
    std::vector<int> n(T, 0);
    for (int d = 0; d < corpus.num_docs(); ++d) {
        trend.mean.row(corpus.time_index[d]) += theta_hat.row(d);
        ++n[corpus.time_index[d]];
    }
    for (int t = 0; t < T; ++t)
        trend.mean.row(t) /= n[t];

    trend.standardized = Eigen::MatrixXd::Zero(T, K);
    for (Eigen::Index k = 0; k < K; ++k) {
        const double mean = trend.mean.col(k).mean();
        const double sd = std::sqrt((trend.mean.col(k).array() - mean).square().mean());
        if (!(sd > 1e-14)) {
            trend.warnings.push_back("topic " + std::to_string(k) +
                                     " has a constant trend; standardized values set to 0");
            continue;
        }
        trend.standardized.col(k) = (trend.mean.col(k).array() - mean) / sd;
    }
    return trend;
}

double collapsed_log_likelihood(const ModelData& data, const TokenState& tokens,
                                const DocPriors& priors)
{
    const HyperParams& hp = data.hp();
    const CountTables& c = tokens.counts;
    const int K = data.num_topics();
    const int V = data.vocab_size();
    const int Kt = data.keyword_topics();

    double lp = 0.0;
    const double Vbeta = V * hp.beta;
    for (int k = 0; k < K; ++k) {
        lp += log_gamma(Vbeta) - V * log_gamma(hp.beta) - log_gamma(Vbeta + c.n_k(k));
        for (int v = 0; v < V; ++v)
            lp += log_gamma(hp.beta + c.n_kv(k, v));
    }
    for (int k = 0; k < Kt; ++k) {
        const auto& kw = data.dict().topics[k].keywords;
        const double L = static_cast<double>(kw.size());
        lp += log_gamma(L * hp.beta_tilde) - L * log_gamma(hp.beta_tilde) -
              log_gamma(L * hp.beta_tilde + c.nt_k(k));
        for (WordId v : kw)
            lp += log_gamma(hp.beta_tilde + c.nt_kv(k, v));
    }
    if (data.mode() == Mode::keyatm) {
        const double norm = log_gamma(hp.gamma1 + hp.gamma2) - log_gamma(hp.gamma1) -
                            log_gamma(hp.gamma2);
        for (int k = 0; k < K; ++k) {
            const double ntk = k < Kt ? c.nt_k(k) : 0.0;
            lp += norm + log_gamma(ntk + hp.gamma1) + log_gamma(c.n_k(k) + hp.gamma2) -
                  log_gamma(ntk + hp.gamma1 + c.n_k(k) + hp.gamma2);
        }
    }
    for (int d = 0; d < data.num_docs(); ++d) {
        const auto a = priors.row(d);
        double total = 0.0;
        for (int k = 0; k < K; ++k) {
            total += a[k];
            lp += log_gamma(c.n_dk(d, k) + a[k]) - log_gamma(a[k]);
        }
        lp += log_gamma(total) - log_gamma(c.n_d(d) + total);
    }
    return lp;
}

namespace {

double log_gamma_pdf(double x, double shape, double rate)
{
    return shape * std::log(rate) - log_gamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

} // namespace

double collapsed_log_posterior(const ModelData& data, const BaseChainState& state)
{
    const std::span<const double> alpha(state.alpha.data(), state.alpha.size());
    double lp = collapsed_log_likelihood(data, state.tokens, DocPriors::shared(alpha));
    for (int k = 0; k < data.num_topics(); ++k)
        lp += log_gamma_pdf(state.alpha(k), data.alpha_shape(k), data.alpha_rate(k));
    return lp;
}

double collapsed_log_posterior(const ModelData& data, const CovariateDesign& design,
                               const CovChainState& state)
{
    const HyperParams& hp = data.hp();
    double lp = collapsed_log_likelihood(
        data, state.tokens, DocPriors::per_document(covariate_doc_alpha(design, state.lambda_std)));
    const double norm = -0.5 * std::log(2.0 * M_PI) - std::log(hp.sigma);
    for (Eigen::Index i = 0; i < state.lambda_std.size(); ++i) {
        const double z = (state.lambda_std.data()[i] - hp.mu) / hp.sigma;
        lp += norm - 0.5 * z * z;
    }
    return lp;
}

double collapsed_log_posterior(const ModelData& data, const DynamicDesign& design,
                               const DynChainState& state)
{
    double lp = collapsed_log_likelihood(data, state.tokens,
                                         dynamic_doc_priors(data.corpus(), state));
    for (int r = 0; r < design.num_states; ++r)
        for (int k = 0; k < data.num_topics(); ++k)
            lp += log_gamma_pdf(state.alpha(r, k), data.alpha_shape(k), data.alpha_rate(k));
    // path probability under P; the uniform prior on p_rr contributes 0
    for (std::size_t t = 1; t < state.h.size(); ++t) {
        const int from = state.h[t - 1];
        lp += state.h[t] == from ? std::log(state.p_stay(from)) : std::log1p(-state.p_stay(from));
    }
    return lp;
}

double perplexity(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& theta, const Corpus& corpus)
{
    double ll = 0.0;
    for (int d = 0; d < corpus.num_docs(); ++d)
        for (WordId v : corpus.documents[d]) {
            const double p = theta.row(d).dot(phi.col(v));
            if (!(p > 0.0))
                throw SamplerFault("perplexity: token with zero probability");
            ll += std::log(p);
        }
    return std::exp(-ll / static_cast<double>(corpus.total_tokens()));
}

std::vector<std::vector<RankedWord>> top_words(const Eigen::MatrixXd& phi, int n,
                                               const KeywordDictionary& dict)
{
    if (n < 1)
        throw ConfigError("top_words: n must be at least 1");
    const int K = static_cast<int>(phi.rows());
    const int V = static_cast<int>(phi.cols());
    n = std::min(n, V);

    std::vector<std::vector<char>> member(dict.keyword_topics(), std::vector<char>(V, 0));
    for (int k = 0; k < dict.keyword_topics(); ++k)
        for (WordId v : dict.topics[k].keywords)
            member[k][v] = 1;

    std::vector<std::vector<RankedWord>> out(K);
    std::vector<int> order(V);
    for (int k = 0; k < K; ++k) {
        std::iota(order.begin(), order.end(), 0);
        std::partial_sort(order.begin(), order.begin() + n, order.end(), [&](int a, int b) {
            if (phi(k, a) != phi(k, b))
                return phi(k, a) > phi(k, b);
            return a < b;
        });
        for (int j = 0; j < n; ++j) {
            const WordId v = order[j];
            WordMarker marker = WordMarker::plain;
            if (k < dict.keyword_topics() && member[k][v]) {
                marker = WordMarker::own_keyword;
            } else {
                for (int other = 0; other < dict.keyword_topics(); ++other)
                    if (member[other][v])
                        marker = WordMarker::other_keyword;
            }
            out[k].push_back({v, phi(k, v), marker});
        }
    }
    return out;
}

} // namespace keyatm
