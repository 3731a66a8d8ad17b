#include "keyatm/model_dynamic.hpp"

#include "keyatm/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace keyatm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b)
{
    if (a == kNegInf)
        return b;
    if (b == kNegInf)
        return a;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// log Pr(h_{t+1} = to | h_t = from)
double log_transition(const Eigen::VectorXd& p_stay, int from, int to)
{
    if (to == from)
        return std::log(p_stay(from));
    if (to == from + 1)
        return std::log1p(-p_stay(from));
    return kNegInf;
}

} // namespace

DynamicDesign::DynamicDesign(const Corpus& corpus, int states) : num_states(states)
{
    if (!corpus.has_time())
        throw SchemaError("dynamic model: the corpus has no time index");
    num_periods = corpus.num_periods();
    if (num_states < 1)
        throw ConfigError("dynamic model: the number of states must be at least 1");
    if (num_states > num_periods)
        throw ConfigError("dynamic model: number of states R = " + std::to_string(num_states) +
                          " exceeds the number of time periods T = " +
                          std::to_string(num_periods) + " (R <= T required)");
    docs_at.resize(num_periods);
    for (int d = 0; d < corpus.num_docs(); ++d)
        docs_at[corpus.time_index[d]].push_back(d);
}

bool valid_state_path(const std::vector<int>& h, int num_states)
{
    if (h.empty() || h.front() != 0 || h.back() != num_states - 1)
        return false;
    for (std::size_t t = 1; t < h.size(); ++t)
        if (h[t] - h[t - 1] != 0 && h[t] - h[t - 1] != 1)
            return false;
    return true;
}

DynChainState init_dynamic_state(const ModelData& data, const DynamicDesign& design,
                                 RandomStream& rng)
{
    const int T = design.num_periods;
    const int R = design.num_states;
    const int K = data.num_topics();
    DynChainState st;
    st.h.resize(T);
    for (int t = 0; t < T; ++t)
        st.h[t] = static_cast<int>(static_cast<long>(t) * R / T);
    st.p_stay = Eigen::VectorXd::Ones(R);
    for (int r = 0; r + 1 < R; ++r)
        st.p_stay(r) = rng.beta(1.0, 1.0);
    st.alpha.resize(R, K);
    for (int r = 0; r < R; ++r)
        for (int k = 0; k < K; ++k)
            st.alpha(r, k) = rng.gamma(data.alpha_shape(k), data.alpha_rate(k));
    st.tokens = init_tokens(data, rng);
    return st;
}

DocPriors dynamic_doc_priors(const Corpus& corpus, const DynChainState& state)
{
    Eigen::MatrixXd rows(corpus.num_docs(), state.alpha.cols());
    for (int d = 0; d < corpus.num_docs(); ++d)
        rows.row(d) = state.alpha.row(state.h[corpus.time_index[d]]);
    return DocPriors::per_document(rows);
}

double doc_state_loglik(const CountTables& counts, int d, std::span<const double> alpha_r)
{
    double total = 0.0;
    double lp = 0.0;
    for (std::size_t k = 0; k < alpha_r.size(); ++k) {
        total += alpha_r[k];
        lp += log_gamma(counts.n_dk(d, static_cast<int>(k)) + alpha_r[k]) - log_gamma(alpha_r[k]);
    }
    return lp + log_gamma(total) - log_gamma(counts.n_d(d) + total);
}

Eigen::MatrixXd forward_filter(const DynamicDesign& design, const DynChainState& state)
{
    const int T = design.num_periods;
    const int R = design.num_states;
    if (R > T)
        throw ConfigError("forward_filter: R > T");
    const CountTables& counts = state.tokens.counts;

    Eigen::MatrixXd logf = Eigen::MatrixXd::Constant(T, R, kNegInf);
    logf(0, 0) = 0.0;
    std::vector<double> row(R);
    for (int t = 1; t < T; ++t) {
        const int lo = std::max(0, t - (T - R));
        const int hi = std::min(t, R - 1);
        for (int r = 0; r < R; ++r) {
            row[r] = kNegInf;
            if (r < lo || r > hi)
                continue;
            double pred = logf(t - 1, r) + log_transition(state.p_stay, r, r);
            if (r > 0)
                pred = log_add(pred, logf(t - 1, r - 1) + log_transition(state.p_stay, r - 1, r));
            if (pred == kNegInf)
                continue;
            const Eigen::RowVectorXd alpha_r = state.alpha.row(r);
            double lik = 0.0;
            for (int d : design.docs_at[t])
                lik += doc_state_loglik(counts, d,
                                        std::span<const double>(alpha_r.data(), alpha_r.size()));
            row[r] = pred + lik;
        }
        const double norm = log_sum_exp(row);
        if (!std::isfinite(norm))
            throw SamplerFault("forward filter: no feasible state at period " + std::to_string(t));
        for (int r = 0; r < R; ++r)
            logf(t, r) = row[r] - norm;
    }
    return logf.array().exp().matrix();
}

void backward_sample_states(const Eigen::MatrixXd& filtered, DynChainState& state,
                            RandomStream& rng)
{
    const int T = static_cast<int>(filtered.rows());
    const int R = static_cast<int>(filtered.cols());
    state.h.assign(T, 0);
    state.h[T - 1] = R - 1;
    for (int t = T - 2; t >= 0; --t) {
        const int next = state.h[t + 1];
        std::array<double, 2> w{0.0, 0.0}; // candidates next - 1, next
        if (next >= 1)
            w[0] = filtered(t, next - 1) * (1.0 - state.p_stay(next - 1));
        w[1] = filtered(t, next) * state.p_stay(next);
        std::size_t pick;
        try {
            pick = draw_categorical(w, rng);
        } catch (const SamplerFault& e) {
            throw SamplerFault(std::string(e.what()) + " (state of period " + std::to_string(t) + ")");
        }
        state.h[t] = pick == 0 ? next - 1 : next;
    }
    if (state.h[0] != 0)
        throw SamplerFault("backward sampling: path does not start in the first state");
}

void sample_transition(DynChainState& state, RandomStream& rng)
{
    const int R = static_cast<int>(state.p_stay.size());
    std::vector<int> stays(R, 0);
    for (std::size_t t = 1; t < state.h.size(); ++t)
        if (state.h[t] == state.h[t - 1])
            ++stays[state.h[t]];
    for (int r = 0; r + 1 < R; ++r)
        state.p_stay(r) = rng.beta(1.0 + stays[r], 2.0);
    state.p_stay(R - 1) = 1.0;
}

void sample_alpha_dynamic(const ModelData& data, const DynamicDesign& design,
                          DynChainState& state, RandomStream& rng, const SliceOptions& opts)
{
    const int R = design.num_states;
    const int K = data.num_topics();
    std::vector<std::vector<int>> docs_in(R);
    for (int t = 0; t < design.num_periods; ++t)
        for (int d : design.docs_at[t])
            docs_in[state.h[t]].push_back(d);

    std::vector<double> row(K);
    for (int r = 0; r < R; ++r) {
        for (int k = 0; k < K; ++k)
            row[k] = state.alpha(r, k);
        for (int k = 0; k < K; ++k) {
            auto target = [&](double a) {
                return alpha_log_target(state.tokens.counts, docs_in[r], row, k, a,
                                        data.alpha_shape(k), data.alpha_rate(k));
            };
            try {
                row[k] = slice_sample_positive(target, row[k], opts, rng);
            } catch (const SamplerFault& e) {
                throw SamplerFault(std::string(e.what()) + " (alpha[" + std::to_string(r) + "," +
                                   std::to_string(k) + "])");
            }
            state.alpha(r, k) = row[k];
        }
    }
}

void sweep_dynamic(const ModelData& data, const DynamicDesign& design, DynChainState& state,
                   RandomStream& rng, const SliceOptions& opts)
{
    sweep_tokens(data, state.tokens, dynamic_doc_priors(data.corpus(), state), rng);
    const Eigen::MatrixXd filtered = forward_filter(design, state);
    backward_sample_states(filtered, state, rng);
    sample_transition(state, rng);
    sample_alpha_dynamic(data, design, state, rng, opts);
    ++state.iteration;
}

} // namespace keyatm
