#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "keyatm/estimators.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace keyatm;

namespace {

KeywordDictionary dict_of(std::vector<std::vector<WordId>> kws, int k_extra)
{
    KeywordDictionary d;
    for (std::size_t k = 0; k < kws.size(); ++k)
        d.topics.push_back({"T" + std::to_string(k), kws[k]});
    d.k_extra = k_extra;
    return d;
}

Draw base_draw(long it, CountTables counts, Eigen::VectorXd alpha, int D)
{
    Draw d;
    d.iteration = it;
    d.counts = std::move(counts);
    d.alpha = alpha;
    d.doc_prior = alpha.transpose().replicate(D, 1);
    return d;
}

} // namespace

TEST_CASE("phi at empty counts")
{
    const Corpus c = Corpus::from_ids({{0, 1, 2, 3}}, 4);
    const auto w = compute_term_weights(c, false);

    SUBCASE("wlda is uniform")
    {
        const auto dict = dict_of({{0}}, 1);
        const ModelData data(c, dict, w, {}, Mode::wlda);
        const Eigen::MatrixXd phi = phi_single(data, CountTables(2, 0, 1, 4));
        CHECK((phi.array() - 0.25).abs().maxCoeff() < 1e-15);
    }
    SUBCASE("keyword topic mixes the two branches")
    {
        const auto dict = dict_of({{0, 2}}, 1);
        const ModelData data(c, dict, w, {}, Mode::keyatm);
        Eigen::VectorXd sums;
        const Eigen::MatrixXd phi = phi_single(data, CountTables(2, 1, 1, 4), &sums);
        CHECK(phi(0, 0) == doctest::Approx(0.5 / 4 + 0.5 / 2));
        CHECK(phi(0, 1) == doctest::Approx(0.5 / 4));
        CHECK(phi(1, 3) == doctest::Approx(0.25));
        CHECK(sums(0) == doctest::Approx(1.0));
        // the keyword-free topic carries only the gamma2 share before renormalizing
        CHECK(sums(1) == doctest::Approx(0.5));
    }
}

TEST_CASE("estimators average per-draw values")
{
    const Corpus c = Corpus::from_ids({{0, 0, 0, 1}, {1, 2}}, 3);
    const auto w = compute_term_weights(c, true);
    const auto dict = dict_of({{0}}, 1);
    const ModelData data(c, dict, w, {}, Mode::keyatm);
    const int K = 2, Kt = 1;
    const auto c1 = rebuild_counts({{0, 0, 1, 1}, {1, 0}}, {{1, 0, 0, 0}, {0, 0}}, c, w, K, Kt);
    const auto c2 = rebuild_counts({{0, 1, 0, 1}, {0, 1}}, {{0, 0, 0, 0}, {0, 0}}, c, w, K, Kt);
    const Eigen::Vector2d a1(1.0, 2.0), a2(0.5, 0.7);

    ChainTrace t(Variant::base, 5, 0);
    t.record(base_draw(5, c1, a1, 2));
    t.record(base_draw(10, c2, a2, 2));
    const auto phi = estimate_phi(t, data);
    const Eigen::MatrixXd expect_phi = 0.5 * (phi_single(data, c1) + phi_single(data, c2));
    CHECK((phi.phi - expect_phi).cwiseAbs().maxCoeff() < 1e-14);
    for (int k = 0; k < K; ++k)
        CHECK(phi.phi.row(k).sum() == doctest::Approx(1.0).epsilon(1e-12));

    const Eigen::MatrixXd theta = estimate_theta(t);
    const Eigen::MatrixXd expect_theta =
        0.5 * (theta_single(c1, t.draws()[0].doc_prior) + theta_single(c2, t.draws()[1].doc_prior));
    CHECK((theta - expect_theta).cwiseAbs().maxCoeff() < 1e-14);
    for (int d = 0; d < 2; ++d)
        CHECK(theta.row(d).sum() == doctest::Approx(1.0).epsilon(1e-12));

    // burn-in drops the first draw
    t.set_burn_in(5);
    CHECK((estimate_theta(t) - theta_single(c2, t.draws()[1].doc_prior)).cwiseAbs().maxCoeff() <
          1e-15);

    CHECK_THROWS(estimate_theta(ChainTrace(Variant::base, 1, 0)));
}

TEST_CASE("theta substitution")
{
    const Corpus c = Corpus::from_ids({{0, 0, 0, 1}}, 2);
    const auto w = compute_term_weights(c, false);
    const auto counts = rebuild_counts({{0, 0, 0, 1}}, {{0, 0, 0, 0}}, c, w, 2, 0);
    const Eigen::MatrixXd th = theta_single(counts, Eigen::MatrixXd::Ones(1, 2));
    CHECK(th(0, 0) == doctest::Approx(2.0 / 3.0));
    CHECK(th(0, 1) == doctest::Approx(1.0 / 3.0));

    const auto one = rebuild_counts({{0, 0, 0, 0}}, {{0, 0, 0, 0}}, c, w, 1, 0);
    CHECK(theta_single(one, Eigen::MatrixXd::Constant(1, 1, 0.3))(0, 0) == 1.0);
}

TEST_CASE("time trend")
{
    Corpus c = Corpus::from_ids({{0}, {0}, {0}}, 1);
    c.time_index = {0, 1, 2};
    Eigen::MatrixXd theta(3, 2);
    theta << 0.2, 0.8, 0.5, 0.5, 0.9, 0.1;
    const auto tr = time_trend(theta, c);
    CHECK(tr.mean == theta);
    for (int k = 0; k < 2; ++k) {
        CHECK(std::abs(tr.standardized.col(k).mean()) < 1e-12);
        CHECK(std::sqrt(tr.standardized.col(k).array().square().mean()) ==
              doctest::Approx(1.0).epsilon(1e-10));
    }

    const auto flat = time_trend(Eigen::MatrixXd::Constant(3, 2, 0.5), c);
    CHECK((flat.mean.array() == 0.5).all());
    CHECK((flat.standardized.array() == 0.0).all());
    CHECK_FALSE(flat.warnings.empty());

    CHECK_THROWS(time_trend(theta, Corpus::from_ids({{0}, {0}, {0}}, 1)));
}

TEST_CASE("collapsed log posterior")
{
    SUBCASE("empty corpus keeps only the alpha prior")
    {
        const Corpus c = Corpus::from_ids({}, 2);
        const auto w = compute_term_weights(c, false);
        const auto dict = dict_of({{0}}, 1);
        HyperParams hp;
        hp.eta1 = 3.0;
        hp.eta2 = 2.0;
        const ModelData data(c, dict, w, hp, Mode::keyatm);
        BaseChainState st;
        st.tokens.counts = CountTables(2, 1, 0, 2);
        st.alpha = Eigen::Vector2d(0.7, 1.4);
        auto log_gamma_pdf = [](double x, double a, double b) {
            return a * std::log(b) - std::lgamma(a) + (a - 1) * std::log(x) - b * x;
        };
        const double expect = log_gamma_pdf(0.7, 1.0, 1.0) + log_gamma_pdf(1.4, 3.0, 2.0);
        CHECK(collapsed_log_posterior(data, st) == doctest::Approx(expect).epsilon(1e-12));
    }
    SUBCASE("z flips agree with the conditional weights")
    {
        // exact only for unit weights, where Gamma(x + 1) / Gamma(x) = x
        const Corpus c = Corpus::from_ids({{0, 1, 2}, {2, 3, 0}, {1, 1}}, 4);
        const auto w = compute_term_weights(c, false);
        const auto dict = dict_of({{0, 1}}, 2);
        const ModelData data(c, dict, w, {}, Mode::keyatm);
        RandomStream rng(2);
        auto st = init_state(data, rng);
        for (int d = 0; d < 3; ++d)
            for (int i = 0; i < static_cast<int>(c.documents[d].size()); ++i) {
                if (st.tokens.s[d][i])
                    continue;
                auto removed = st;
                remove_token(data, removed.tokens, d, i);
                const auto wz = conditional_z(data, removed, d, i);
                for (int k = 1; k < 3; ++k) {
                    auto a = st, b = st;
                    a.tokens.z[d][i] = 0;
                    b.tokens.z[d][i] = k;
                    a.tokens.counts = rebuild_counts(a.tokens.z, a.tokens.s, c, w, 3, 1);
                    b.tokens.counts = rebuild_counts(b.tokens.z, b.tokens.s, c, w, 3, 1);
                    const double delta =
                        collapsed_log_posterior(data, b) - collapsed_log_posterior(data, a);
                    CHECK(std::abs(std::log(wz[k] / wz[0]) - delta) < 1e-8);
                }
            }
    }
}

TEST_CASE("perplexity")
{
    const Corpus c = Corpus::from_ids({{0, 1, 2}, {3, 4}}, 5);
    const Eigen::MatrixXd phi = Eigen::MatrixXd::Constant(1, 5, 0.2);
    CHECK(perplexity(phi, Eigen::MatrixXd::Ones(2, 1), c) == doctest::Approx(5.0));

    // two clean topics: the true mixture beats a uniform one
    Eigen::MatrixXd phi2(2, 5);
    phi2 << 0.3, 0.3, 0.3, 0.05, 0.05, 0.05, 0.05, 0.05, 0.45, 0.4;
    Eigen::MatrixXd truth(2, 2), flat = Eigen::MatrixXd::Constant(2, 2, 0.5);
    truth << 1, 0, 0, 1;
    const double good = perplexity(phi2, truth, c), poor = perplexity(phi2, flat, c);
    CHECK(good < poor);
    CHECK(good >= 1.0);
}

TEST_CASE("top words")
{
    const auto dict = dict_of({{3}, {1}}, 0);
    Eigen::MatrixXd phi(2, 8);
    phi << 0.1, 0.1, 0.1, 0.2, 0.1, 0.1, 0.1, 0.2, //
        0.05, 0.6, 0.05, 0.05, 0.05, 0.1, 0.05, 0.05;
    const auto top = top_words(phi, 3, dict);
    REQUIRE(top.size() == 2);
    CHECK(top[0][0].word == 3);
    CHECK(top[0][0].marker == WordMarker::own_keyword);
    CHECK(top[0][1].word == 7);
    CHECK(top[0][1].marker == WordMarker::plain);
    CHECK(top[0][2].word == 0);
    CHECK(top[1][0].word == 1);
    CHECK(top[1][0].marker == WordMarker::own_keyword);
    CHECK(top[1][1].word == 5);
    CHECK(top[1][2].word == 0);

    const auto all = top_words(phi, 100, dict);
    CHECK(all[0].size() == 8);
    // word 1 is topic 1's keyword
    for (const auto& r : all[0])
        if (r.word == 1)
            CHECK(r.marker == WordMarker::other_keyword);
}
