#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "keyatm/model_dynamic.hpp"
#include "oracles.hpp"

#include <cmath>
#include <numeric>

using namespace keyatm;

namespace {

Corpus timed(std::vector<std::vector<WordId>> docs, int V, std::vector<int> t)
{
    Corpus c = Corpus::from_ids(std::move(docs), V);
    c.time_index = std::move(t);
    return c;
}

KeywordDictionary dict_of(int k_extra)
{
    KeywordDictionary d;
    d.topics.push_back({"A", {0}});
    d.k_extra = k_extra;
    return d;
}

} // namespace

TEST_CASE("doc_state_loglik")
{
    const Corpus c = Corpus::from_ids({{0, 1}}, 2);
    const auto w = compute_term_weights(c, false);
    const std::vector<double> a{1.0, 1.0};

    const CountTables empty(2, 0, 1, 2);
    CHECK(doc_state_loglik(empty, 0, a) == 0.0);

    const auto split = rebuild_counts({{0, 1}}, {{0, 0}}, c, w, 2, 0);
    CHECK(doc_state_loglik(split, 0, a) == doctest::Approx(std::log(1.0 / 6.0)).epsilon(1e-12));

    const auto single = rebuild_counts({{0, 0}}, {{0, 0}}, c, w, 1, 0);
    const std::vector<double> a1{2.5};
    CHECK(doc_state_loglik(single, 0, a1) == doctest::Approx(0.0));

    const auto other = rebuild_counts({{0, 0}}, {{0, 0}}, c, w, 2, 0);
    const std::vector<double> a2{0.4, 1.3};
    CHECK(doc_state_loglik(other, 0, a2) ==
          doctest::Approx(oracle::dm_loglik({2.0, 0.0}, {0.4, 1.3})).epsilon(1e-12));
}

TEST_CASE("filter and backward sampling at the boundaries")
{
    const Corpus c = timed({{0, 1}, {1, 0}, {0}}, 2, {0, 1, 2});
    const auto dict = dict_of(1);
    const auto w = compute_term_weights(c, false);
    const ModelData data(c, dict, w, {}, Mode::keyatm);
    RandomStream rng(3);

    SUBCASE("single state")
    {
        const DynamicDesign design(c, 1);
        auto st = init_dynamic_state(data, design, rng);
        const auto f = forward_filter(design, st);
        CHECK(f.rows() == 3);
        CHECK((f.array() == 1.0).all());
        backward_sample_states(f, st, rng);
        CHECK(st.h == std::vector<int>{0, 0, 0});
    }
    SUBCASE("as many states as periods")
    {
        const DynamicDesign design(c, 3);
        auto st = init_dynamic_state(data, design, rng);
        const auto f = forward_filter(design, st);
        for (int t = 0; t < 3; ++t)
            for (int r = 0; r < 3; ++r)
                CHECK(f(t, r) == doctest::Approx(t == r ? 1.0 : 0.0));
        for (int i = 0; i < 20; ++i) {
            backward_sample_states(f, st, rng);
            CHECK(st.h == std::vector<int>{0, 1, 2});
        }
    }
    SUBCASE("two periods two states")
    {
        const Corpus c2 = timed({{0}, {1}}, 2, {0, 1});
        const auto w2 = compute_term_weights(c2, false);
        const ModelData d2(c2, dict, w2, {}, Mode::keyatm);
        const DynamicDesign design(c2, 2);
        auto st = init_dynamic_state(d2, design, rng);
        const auto f = forward_filter(design, st);
        CHECK(f(0, 0) == doctest::Approx(1.0));
        CHECK(f(1, 1) == doctest::Approx(1.0));
        CHECK(f(0, 1) == doctest::Approx(0.0));
        CHECK(f(1, 0) == doctest::Approx(0.0));
    }
    SUBCASE("more states than periods is rejected")
    {
        try {
            DynamicDesign design(c, 4);
            FAIL("expected an error");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("R <= T") != std::string::npos);
        }
    }
}

TEST_CASE("sample_transition moments")
{
    RandomStream rng(19);
    DynChainState st;
    st.p_stay = Eigen::VectorXd::Constant(2, 0.5);
    const int n = 100000;

    st.h = {0, 1};
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        sample_transition(st, rng);
        sum += st.p_stay(0);
        REQUIRE(st.p_stay(1) == 1.0);
    }
    CHECK(std::abs(sum / n - 1.0 / 3.0) < 0.005);

    st.h = {0, 0, 1};
    sum = 0.0;
    for (int i = 0; i < n; ++i) {
        sample_transition(st, rng);
        sum += st.p_stay(0);
    }
    CHECK(std::abs(sum / n - 0.5) < 0.005);
}

TEST_CASE("state alpha recovers its prior without documents")
{
    const Corpus c = timed({{0, 1}, {1}}, 2, {0, 1});
    const auto dict = dict_of(1);
    const auto w = compute_term_weights(c, false);
    HyperParams hp;
    hp.eta1 = 3.0;
    hp.eta2 = 2.0;
    const ModelData data(c, dict, w, hp, Mode::keyatm);
    const DynamicDesign design(c, 2);
    RandomStream rng(23);
    auto st = init_dynamic_state(data, design, rng);
    st.tokens.counts = CountTables(2, 1, 2, 2);
    const int n = 10000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        sample_alpha_dynamic(data, design, st, rng);
        REQUIRE((st.alpha.array() > 0.0).all());
        sum += st.alpha(1, 1);
    }
    // Gamma(3, 2): mean 1.5, sd 0.866; allow a factor 2 for autocorrelation
    CHECK(std::abs(sum / n - 1.5) < 3 * 2 * 0.866 / std::sqrt(double(n)));
}

TEST_CASE("one period one state reduces to the base conditional")
{
    const Corpus c = timed({{0, 1, 2}, {2, 2, 0}}, 3, {0, 0});
    const auto dict = dict_of(1);
    const auto w = compute_term_weights(c, true);
    const ModelData data(c, dict, w, {}, Mode::keyatm);
    const DynamicDesign design(c, 1);
    RandomStream rng(29);
    auto st = init_dynamic_state(data, design, rng);
    for (int it = 0; it < 5; ++it) {
        sweep_dynamic(data, design, st, rng);
        CHECK(st.h == std::vector<int>{0});
        CHECK(valid_state_path(st.h, 1));
        BaseChainState base;
        base.tokens = st.tokens;
        base.alpha = st.alpha.row(0).transpose();
        const DocPriors priors = dynamic_doc_priors(c, st);
        for (int d = 0; d < 2; ++d) {
            auto tk = st.tokens;
            remove_token(data, tk, d, 1);
            remove_token(data, base.tokens, d, 1);
            std::vector<double> dyn(2);
            conditional_z(data, tk, d, 1, priors.row(d), dyn);
            CHECK(dyn == conditional_z(data, base, d, 1));
            add_token(data, base.tokens, d, 1);
        }
    }
}

TEST_CASE("dynamic sweep keeps a valid path")
{
    std::vector<std::vector<WordId>> docs;
    std::vector<int> t;
    for (int d = 0; d < 12; ++d) {
        docs.push_back({WordId(d % 4), WordId((d + 1) % 4), 0});
        t.push_back(d / 2);
    }
    const Corpus c = timed(docs, 4, t);
    const auto dict = dict_of(1);
    const auto w = compute_term_weights(c, true);
    const ModelData data(c, dict, w, {}, Mode::keyatm);
    const DynamicDesign design(c, 3);
    RandomStream rng(31);
    auto st = init_dynamic_state(data, design, rng);
    CHECK(st.h == std::vector<int>{0, 0, 1, 1, 2, 2});
    for (int it = 0; it < 30; ++it) {
        sweep_dynamic(data, design, st, rng);
        REQUIRE(valid_state_path(st.h, 3));
        REQUIRE(st.tokens.counts == rebuild_counts(st.tokens.z, st.tokens.s, c, w, 2, 1));
    }
    CHECK_FALSE(valid_state_path({0, 2, 2}, 3));
    CHECK_FALSE(valid_state_path({1, 1, 2}, 3));
    CHECK_FALSE(valid_state_path({0, 1, 1}, 3));
}
