#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "keyatm/evaluation.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace keyatm;

TEST_CASE("roc")
{
    const std::vector<int> labels{1, 1, 0, 0};
    const std::vector<double> perfect{0.9, 0.8, 0.3, 0.2};
    CHECK(roc(perfect, labels).auroc == 1.0);

    const std::vector<double> mixed{0.9, 0.3, 0.8, 0.2};
    const auto r = roc(mixed, labels);
    CHECK(r.auroc == doctest::Approx(oracle::pairwise_auroc(mixed, labels)));
    CHECK(r.auroc == doctest::Approx(0.75));
    CHECK(trapezoid_area(r.points) == doctest::Approx(0.75));
    CHECK(r.points.front().fpr == 0.0);
    CHECK(r.points.back().tpr == 1.0);
    CHECK(r.positives == 2);
    CHECK(r.negatives == 2);

    const std::vector<double> flat(4, 0.4);
    CHECK(roc(flat, labels).auroc == 0.5);

    const std::vector<int> one_class(4, 1);
    CHECK_THROWS(roc(perfect, one_class));
}

TEST_CASE("roc agrees with pairwise counting on tied scores")
{
    std::mt19937_64 gen(5);
    std::uniform_int_distribution<int> score(0, 4), label(0, 1);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> s(30);
        std::vector<int> l(30);
        for (int i = 0; i < 30; ++i) {
            s[i] = score(gen) / 4.0;
            l[i] = label(gen);
        }
        l[0] = 1;
        l[1] = 0;
        const auto r = roc(s, l);
        CHECK(r.auroc == doctest::Approx(oracle::pairwise_auroc(s, l)).epsilon(1e-12));
        CHECK(trapezoid_area(r.points) == doctest::Approx(r.auroc).epsilon(1e-12));
    }
}

TEST_CASE("aggregate_auroc")
{
    const std::vector<double> a{0.5, 0.5}, b{1.0, 0.5}, z{0.9, 0.0};
    CHECK(aggregate_auroc(a) == doctest::Approx(0.5));
    CHECK(aggregate_auroc(b) == doctest::Approx(2.0 / 3.0));
    CHECK_THROWS(aggregate_auroc(z));
}

TEST_CASE("hungarian_match")
{
    Eigen::MatrixXd m(2, 2);
    m << 0.9, 0.1, 0.1, 0.9;
    const auto a = hungarian_match(m);
    CHECK(a.assignment == std::vector<int>{0, 1});
    CHECK(a.objective == doctest::Approx(1.8));

    const auto tied = hungarian_match(Eigen::MatrixXd::Constant(3, 3, 0.4));
    CHECK(tied.assignment == std::vector<int>{0, 1, 2});

    Eigen::MatrixXd cost(2, 2);
    cost << 1.0, 5.0, 2.0, 1.0;
    CHECK(hungarian_match(cost, Sense::minimize).assignment == std::vector<int>{0, 1});

    std::mt19937_64 gen(13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 30; ++rep) {
        const int rows = 2 + rep % 3, cols = 2 + (rep / 3) % 3;
        Eigen::MatrixXd w(rows, cols);
        std::vector<std::vector<double>> ww(rows, std::vector<double>(cols));
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
                ww[r][c] = w(r, c) = std::round(u(gen) * 4) / 4; // ties are common
        const auto got = hungarian_match(w);
        const auto best = oracle::brute_assignment(ww);
        CHECK(got.objective == doctest::Approx(best.value));
        CHECK(got.assignment == best.cols);
    }
}

TEST_CASE("evaluate_against_labels")
{
    const std::vector<int> gold{0, 0, 1, 1, 2, 2};
    Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(6, 3);
    for (int d = 0; d < 6; ++d)
        onehot(d, gold[d]) = 1.0;

    const auto fixed = evaluate_against_labels(onehot, gold, 3, MatchMode::fixed);
    for (double a : fixed.auroc)
        CHECK(a == 1.0);
    CHECK(fixed.aggregate == 1.0);

    const auto flat =
        evaluate_against_labels(Eigen::MatrixXd::Constant(6, 3, 1.0 / 3), gold, 3, MatchMode::fixed);
    for (double a : flat.auroc)
        CHECK(a == 0.5);

    SUBCASE("hungarian recovers a planted permutation")
    {
        const std::vector<int> perm{2, 0, 1}; // topic k carries label perm[k]
        Eigen::MatrixXd theta = Eigen::MatrixXd::Constant(6, 3, 0.1);
        for (int d = 0; d < 6; ++d)
            for (int k = 0; k < 3; ++k)
                if (perm[k] == gold[d])
                    theta(d, k) = 0.8;
        const auto rep = evaluate_against_labels(theta, gold, 3, MatchMode::hungarian);
        CHECK(rep.assignment.assignment == perm);
        CHECK(rep.matched_label == perm);
        CHECK(rep.aggregate == 1.0);
    }
    SUBCASE("explicit pairing in fixed mode")
    {
        const auto rep = evaluate_against_labels(onehot, gold, 3, MatchMode::fixed, {}, {0, -1, 2});
        CHECK(rep.matched_label == std::vector<int>{0, -1, 2});
        CHECK(std::isnan(rep.auroc[1]));
        CHECK(rep.aggregate == 1.0);
    }
    SUBCASE("labels without positives are unavailable")
    {
        const std::vector<int> sparse{0, 0, 1, 1, 0, 1};
        const auto rep = evaluate_against_labels(onehot, sparse, 3, MatchMode::fixed);
        CHECK_FALSE(rep.roc[2].has_value());
        CHECK(std::isnan(rep.auroc[2]));
        CHECK_FALSE(rep.warnings.empty());
    }
}
