#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "keyatm/model_base.hpp"
#include "oracles.hpp"

#include <cmath>
#include <numeric>
#include <set>

using namespace keyatm;

namespace {

struct Setup {
    Corpus corpus;
    KeywordDictionary dict;
    TermWeights weights;
    ModelData data;

    Setup(std::vector<std::vector<WordId>> docs, int V, std::vector<std::vector<WordId>> keywords,
          int k_extra, HyperParams hp = {}, Mode mode = Mode::keyatm, bool weighting = false,
          InitMode init = InitMode::random)
        : corpus(Corpus::from_ids(std::move(docs), V)),
          dict(make_dict(std::move(keywords), k_extra)),
          weights(compute_term_weights(corpus, weighting)),
          data(corpus, dict, weights, hp, mode, init)
    {
    }

    static KeywordDictionary make_dict(std::vector<std::vector<WordId>> keywords, int k_extra)
    {
        KeywordDictionary d;
        for (std::size_t k = 0; k < keywords.size(); ++k)
            d.topics.push_back({"K" + std::to_string(k), keywords[k]});
        d.k_extra = k_extra;
        return d;
    }

    oracle::Fixture fixture() const
    {
        oracle::Fixture f;
        for (const auto& doc : corpus.documents)
            f.docs.emplace_back(doc.begin(), doc.end());
        f.V = corpus.vocab_size();
        f.K = dict.num_topics();
        for (const auto& t : dict.topics)
            f.keywords.emplace_back(t.keywords.begin(), t.keywords.end());
        for (int v = 0; v < f.V; ++v)
            f.m.push_back(weights.effective(v));
        return f;
    }
};

std::vector<std::vector<int>> to_int(const std::vector<std::vector<std::uint8_t>>& s)
{
    std::vector<std::vector<int>> out;
    for (const auto& row : s)
        out.emplace_back(row.begin(), row.end());
    return out;
}

std::vector<double> normalized(std::vector<double> w)
{
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& x : w)
        x /= total;
    return w;
}

} // namespace

TEST_CASE("init_state")
{
    SUBCASE("wlda mode keeps every s at zero")
    {
        Setup m({{0, 1, 0, 1}, {1, 0}}, 2, {{0, 1}}, 1, {}, Mode::wlda);
        RandomStream rng(1);
        const auto st = init_state(m.data, rng);
        for (const auto& row : st.tokens.s)
            for (auto v : row)
                CHECK(v == 0);
    }
    SUBCASE("no keyword topics keeps every s at zero")
    {
        Setup m({{0, 1, 0, 1}}, 2, {}, 2);
        RandomStream rng(1);
        const auto st = init_state(m.data, rng);
        for (auto v : st.tokens.s[0])
            CHECK(v == 0);
    }
    SUBCASE("fixed seed is deterministic")
    {
        Setup m({{0, 1, 2, 1}, {2, 2, 0}}, 3, {{0}, {2}}, 1);
        RandomStream a(8), b(8);
        const auto x = init_state(m.data, a);
        const auto y = init_state(m.data, b);
        CHECK(x.tokens.z == y.tokens.z);
        CHECK(x.tokens.s == y.tokens.s);
        CHECK(x.tokens.counts == y.tokens.counts);
        CHECK(x.alpha == y.alpha);
    }
    SUBCASE("zero topics is a configuration error")
    {
        CHECK_THROWS_AS(Setup({{0}}, 1, {}, 0), ConfigError);
    }
    SUBCASE("keyword init places keyword tokens in owning topics")
    {
        Setup m({{0, 1, 2, 0, 2}}, 3, {{0}, {0, 2}}, 1, {}, Mode::keyatm, false, InitMode::keywords);
        RandomStream rng(4);
        for (int rep = 0; rep < 20; ++rep) {
            const auto st = init_state(m.data, rng);
            const auto& z = st.tokens.z[0];
            CHECK((z[0] == 0 || z[0] == 1));
            CHECK(z[2] == 1);
            CHECK(z[4] == 1);
        }
    }
}

TEST_CASE("conditional_z")
{
    SUBCASE("symmetric empty counts")
    {
        Setup m({{0}}, 2, {}, 2);
        RandomStream rng(1);
        auto st = init_state(m.data, rng);
        st.alpha.setOnes();
        remove_token(m.data, st.tokens, 0, 0);
        const auto p = normalized(conditional_z(m.data, st, 0, 0));
        CHECK(p[0] == doctest::Approx(0.5));
        CHECK(p[1] == doctest::Approx(0.5));
    }
    SUBCASE("single topic")
    {
        Setup m({{0, 1}}, 2, {}, 1);
        RandomStream rng(1);
        auto st = init_state(m.data, rng);
        remove_token(m.data, st.tokens, 0, 1);
        const auto p = normalized(conditional_z(m.data, st, 0, 1));
        CHECK(p.size() == 1);
        CHECK(p[0] == doctest::Approx(1.0));
    }
    SUBCASE("hand-computed two-token case agrees with the joint")
    {
        HyperParams hp;
        hp.beta = 0.1;
        Setup m({{0, 0}}, 2, {}, 2, hp);
        RandomStream rng(1);
        auto st = init_state(m.data, rng);
        st.alpha = Eigen::Vector2d(1.0, 2.0);
        st.tokens.z = {{0, 0}};
        st.tokens.s = {{0, 0}};
        st.tokens.counts = rebuild_counts(st.tokens.z, st.tokens.s, m.corpus, m.weights, 2, 0);
        remove_token(m.data, st.tokens, 0, 1);
        const auto w = conditional_z(m.data, st, 0, 1);
        const double w0 = (0.1 + 1) / (0.2 + 1) * (1 + 1.0) / (1 + 1.0 + 1.0) * (1 + 1);
        const double w1 = (0.1 + 0) / (0.2 + 0) * (0 + 1.0) / (0 + 1.0 + 1.0) * (0 + 2);
        CHECK(w[1] / w[0] == doctest::Approx(w1 / w0).epsilon(1e-12));

        const auto f = m.fixture();
        oracle::Priors pr{0.1, 0.1, 1.0, 1.0};
        const std::vector<std::vector<double>> alpha{{1.0, 2.0}};
        const double l0 = oracle::log_joint(f, {{0, 0}}, {{0, 0}}, alpha, pr);
        const double l1 = oracle::log_joint(f, {{0, 1}}, {{0, 0}}, alpha, pr);
        CHECK(w[1] / w[0] == doctest::Approx(std::exp(l1 - l0)).epsilon(1e-10));
    }
    SUBCASE("wlda weights are the textbook LDA conditional")
    {
        HyperParams hp;
        hp.beta = 0.2;
        Setup m({{0, 1, 1, 2}, {2, 0}}, 3, {{1}}, 1, hp, Mode::wlda);
        RandomStream rng(6);
        auto st = init_state(m.data, rng);
        remove_token(m.data, st.tokens, 0, 2);
        const auto w = conditional_z(m.data, st, 0, 2);
        const auto& c = st.tokens.counts;
        for (int k = 0; k < 2; ++k) {
            const double expect = (0.2 + c.n_kv(k, 1)) / (3 * 0.2 + c.n_k(k)) *
                                  (c.n_dk(0, k) + st.alpha[k]);
            CHECK(w[k] == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("conditional_s")
{
    Setup m({{0, 1, 0}, {1, 0}}, 2, {{0}}, 1);
    RandomStream rng(2);
    auto st = init_state(m.data, rng);

    SUBCASE("support rule")
    {
        st.tokens.z[0][1] = 0; // word 1 is not a keyword of topic 0
        st.tokens.s[0][1] = 0;
        st.tokens.counts = rebuild_counts(st.tokens.z, st.tokens.s, m.corpus, m.weights, 2, 1);
        remove_token(m.data, st.tokens, 0, 1);
        const auto w = conditional_s(m.data, st.tokens, 0, 1);
        CHECK(w[0] > 0.0);
        CHECK(w[1] == 0.0);
    }
    SUBCASE("ratio matches the joint with s flipped")
    {
        st.tokens.z = {{0, 1, 0}, {0, 0}};
        st.tokens.s = {{1, 0, 0}, {0, 1}};
        st.tokens.counts = rebuild_counts(st.tokens.z, st.tokens.s, m.corpus, m.weights, 2, 1);
        const auto f = m.fixture();
        const HyperParams& hp = m.data.hp();
        oracle::Priors pr{hp.beta, hp.beta_tilde, hp.gamma1, hp.gamma2};
        std::vector<std::vector<double>> alpha(2, {st.alpha[0], st.alpha[1]});
        auto s0 = to_int(st.tokens.s), s1 = s0;
        s0[0][2] = 0;
        s1[0][2] = 1;
        remove_token(m.data, st.tokens, 0, 2);
        const auto w = conditional_s(m.data, st.tokens, 0, 2);
        const double ratio = std::exp(oracle::log_joint(f, st.tokens.z, s1, alpha, pr) -
                                      oracle::log_joint(f, st.tokens.z, s0, alpha, pr));
        CHECK(w[1] / w[0] == doctest::Approx(ratio).epsilon(1e-10));
    }
}

TEST_CASE("alpha conditional")
{
    SUBCASE("log target differences match the joint")
    {
        Setup m({{0, 1, 2}, {2, 2, 1, 0}}, 3, {{0}}, 1, {}, Mode::keyatm, true);
        RandomStream rng(3);
        const auto st = init_state(m.data, rng);
        const auto docs = all_documents(2);
        std::vector<double> alpha{st.alpha[0], st.alpha[1]};
        const int k = 1;
        const double a = 0.7, b = 1.9;
        const double shape = m.data.alpha_shape(k), rate = m.data.alpha_rate(k);
        const double lib = alpha_log_target(st.tokens.counts, docs, alpha, k, b, shape, rate) -
                           alpha_log_target(st.tokens.counts, docs, alpha, k, a, shape, rate);

        const auto f = m.fixture();
        const HyperParams& hp = m.data.hp();
        oracle::Priors pr{hp.beta, hp.beta_tilde, hp.gamma1, hp.gamma2};
        auto with = [&](double value) {
            std::vector<double> row = alpha;
            row[k] = value;
            const std::vector<std::vector<double>> per_doc(2, row);
            return oracle::log_joint(f, st.tokens.z, to_int(st.tokens.s), per_doc, pr) +
                   (shape - 1) * std::log(value) - rate * value;
        };
        CHECK(std::abs(lib - (with(b) - with(a))) < 1e-8);
    }
    SUBCASE("empty corpus recovers the gamma prior")
    {
        Setup m({}, 2, {{0}}, 1);
        RandomStream rng(10);
        auto st = init_state(m.data, rng);
        const int n = 10000;
        double sum = 0.0, sumsq = 0.0;
        for (int i = 0; i < n; ++i) {
            sample_alpha(m.data, st, rng);
            REQUIRE(st.alpha[1] > 0.0);
            sum += st.alpha[1];
            sumsq += st.alpha[1] * st.alpha[1];
        }
        const double mean = sum / n;
        // Gamma(2, 1) has mean 2 and variance 2; allow for autocorrelation
        const double se = std::sqrt(2.0 / n);
        CHECK(std::abs(mean - 2.0) < 3 * se * 2);
        CHECK(std::abs(sumsq / n - mean * mean - 2.0) < 0.3);
    }
}

TEST_CASE("sweep keeps counts and the s support consistent")
{
    Setup m({{0, 1, 2, 3, 0}, {3, 2, 2, 1}, {0, 0, 4}}, 5, {{0, 1}, {2}}, 1, {}, Mode::keyatm, true);
    RandomStream rng(12);
    auto st = init_state(m.data, rng);
    for (int it = 0; it < 30; ++it) {
        sweep(m.data, st, rng);
        REQUIRE(st.tokens.counts == rebuild_counts(st.tokens.z, st.tokens.s, m.corpus, m.weights,
                                                   m.data.num_topics(),
                                                   m.data.keyword_topics()));
        for (int d = 0; d < m.corpus.num_docs(); ++d)
            for (std::size_t i = 0; i < m.corpus.documents[d].size(); ++i)
                if (st.tokens.s[d][i])
                    REQUIRE(m.data.is_keyword(st.tokens.z[d][i], m.corpus.documents[d][i]));
    }
    CHECK(st.iteration == 30);
}

TEST_CASE("identical documents are exchangeable")
{
    Setup m({{0, 1, 2}, {0, 1, 2}}, 3, {{0}}, 1);
    RandomStream rng(77);
    auto sa = init_state(m.data, rng);
    for (int it = 0; it < 5; ++it)
        sweep(m.data, sa, rng);
    auto sb = sa;
    std::swap(sb.tokens.z[0], sb.tokens.z[1]);
    std::swap(sb.tokens.s[0], sb.tokens.s[1]);
    sb.tokens.counts = rebuild_counts(sb.tokens.z, sb.tokens.s, m.corpus, m.weights, 2, 1);
    for (int v = 0; v < 3; ++v) {
        CHECK(sa.tokens.counts.n_kv(0, v) == sb.tokens.counts.n_kv(0, v));
        CHECK(sa.tokens.counts.n_kv(1, v) == sb.tokens.counts.n_kv(1, v));
        CHECK(sa.tokens.counts.nt_kv(0, v) == sb.tokens.counts.nt_kv(0, v));
    }
    // token i of document 0 in one state plays the role of token i of
    // document 1 in the other
    for (int i = 0; i < 3; ++i) {
        auto ta = sa, tb = sb;
        remove_token(m.data, ta.tokens, 0, i);
        remove_token(m.data, tb.tokens, 1, i);
        CHECK(conditional_z(m.data, ta, 0, i) == conditional_z(m.data, tb, 1, i));
        CHECK(conditional_s(m.data, ta.tokens, 0, i) == conditional_s(m.data, tb.tokens, 1, i));
    }
}
