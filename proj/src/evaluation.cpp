#include "keyatm/evaluation.hpp"

#include "keyatm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

namespace keyatm {

RocResult roc(std::span<const double> scores, std::span<const int> labels)
{
    if (scores.size() != labels.size())
        throw ConfigError("roc: scores and labels differ in length");
    RocResult res;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!std::isfinite(scores[i]))
            throw ConfigError("roc: non-finite score");
        (labels[i] ? res.positives : res.negatives) += 1;
    }
    if (res.positives == 0 || res.negatives == 0)
        throw ConfigError("roc: labels must contain both classes");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    // Walk tie groups from the highest score down. A positive beats every
    // negative in later (lower) groups and ties with negatives in its own.
    std::int64_t twice_u = 0;
    std::int64_t tp = 0, fp = 0;
    res.points.push_back({0.0, 0.0});
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        std::int64_t gp = 0, gn = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            (labels[order[j]] ? gp : gn) += 1;
            ++j;
        }
        const std::int64_t neg_below = res.negatives - fp - gn;
        twice_u += 2 * gp * neg_below + gp * gn;
        tp += gp;
        fp += gn;
        res.points.push_back({static_cast<double>(fp) / static_cast<double>(res.negatives),
                              static_cast<double>(tp) / static_cast<double>(res.positives)});
        i = j;
    }
    res.auroc = static_cast<double>(twice_u) /
                (2.0 * static_cast<double>(res.positives) * static_cast<double>(res.negatives));
    return res;
}

double trapezoid_area(const std::vector<RocPoint>& points)
{
    double area = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i)
        area += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) / 2.0;
    return area;
}

double aggregate_auroc(std::span<const double> per_topic)
{
    if (per_topic.empty())
        throw ConfigError("aggregate_auroc: no values");
    double inv = 0.0;
    for (double x : per_topic) {
        if (!(x > 0.0) || x > 1.0)
            throw ConfigError("aggregate_auroc: values must lie in (0, 1]");
        inv += 1.0 / x;
    }
    return static_cast<double>(per_topic.size()) / inv;
}

namespace {

// Minimum-cost perfect matching on a square matrix (potentials method).
// Returns row -> column.
std::vector<int> solve_min_assignment(const Eigen::MatrixXd& cost)
{
    const int n = static_cast<int>(cost.rows());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j])
                    continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(n);
    for (int j = 1; j <= n; ++j)
        row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

double assignment_cost(const Eigen::MatrixXd& cost, const std::vector<int>& a)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += cost(static_cast<Eigen::Index>(i), a[i]);
    return s;
}

} // namespace

TopicAssignment hungarian_match(const Eigen::MatrixXd& objective, Sense sense)
{
    if (!objective.allFinite())
        throw ConfigError("hungarian_match: objective has non-finite entries");
    const int K = static_cast<int>(objective.rows());
    const int L = static_cast<int>(objective.cols());
    const int n = std::max(K, L);
    TopicAssignment out;
    out.assignment.assign(K, -1);
    if (n == 0)
        return out;

    Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(n, n);
    cost.topLeftCorner(K, L) = sense == Sense::maximize ? (-objective).eval() : objective;
    const double best = assignment_cost(cost, solve_min_assignment(cost));
    const double tol = 1e-9 * (1.0 + std::abs(best));

    // Fix rows one at a time to the smallest column that keeps the optimum.
    std::vector<int> fixed(n, -1);
    std::vector<char> col_used(n, 0);
    double fixed_cost = 0.0;
    for (int i = 0; i < n; ++i) {
        std::vector<int> rows, cols;
        for (int r = i + 1; r < n; ++r)
            rows.push_back(r);
        for (int c = 0; c < n; ++c)
            if (!col_used[c])
                cols.push_back(c);
        for (int c : cols) {
            std::vector<int> rest_cols;
            for (int cc : cols)
                if (cc != c)
                    rest_cols.push_back(cc);
            double rest = 0.0;
            if (!rows.empty()) {
                Eigen::MatrixXd sub(rows.size(), rest_cols.size());
                for (std::size_t a = 0; a < rows.size(); ++a)
                    for (std::size_t b = 0; b < rest_cols.size(); ++b)
                        sub(a, b) = cost(rows[a], rest_cols[b]);
                rest = assignment_cost(sub, solve_min_assignment(sub));
            }
            if (fixed_cost + cost(i, c) + rest <= best + tol) {
                fixed[i] = c;
                col_used[c] = 1;
                fixed_cost += cost(i, c);
                break;
            }
        }
    }
    for (int i = 0; i < K; ++i)
        if (fixed[i] < L) {
            out.assignment[i] = fixed[i];
            out.objective += objective(i, fixed[i]);
        }
    return out;
}

EvaluationReport evaluate_against_labels(const Eigen::MatrixXd& theta, std::span<const int> gold,
                                         int num_labels, MatchMode mode,
                                         const std::vector<std::string>& label_names,
                                         const std::vector<int>& pairing)
{
    const int D = static_cast<int>(theta.rows());
    const int K = static_cast<int>(theta.cols());
    if (static_cast<int>(gold.size()) != D)
        throw ConfigError("evaluate: gold labels do not match the number of documents");
    for (int g : gold)
        if (g < 0 || g >= num_labels)
            throw ConfigError("evaluate: gold label index out of range");
    auto name = [&](int l) {
        return l < static_cast<int>(label_names.size()) ? label_names[l] : std::to_string(l);
    };

    std::vector<long> positives(num_labels, 0);
    for (int g : gold)
        ++positives[g];
    std::vector<char> available(num_labels);
    for (int l = 0; l < num_labels; ++l)
        available[l] = positives[l] > 0 && positives[l] < D;

    auto curve = [&](int k, int l) {
        std::vector<double> s(D);
        std::vector<int> y(D);
        for (int d = 0; d < D; ++d) {
            s[d] = theta(d, k);
            y[d] = gold[d] == l;
        }
        return roc(s, y);
    };

    EvaluationReport rep;
    if (mode == MatchMode::fixed) {
        rep.assignment.assignment.assign(K, -1);
        if (!pairing.empty()) {
            if (static_cast<int>(pairing.size()) != K)
                throw ConfigError("evaluate: pairing must list one label per topic");
            for (int k = 0; k < K; ++k) {
                if (pairing[k] >= num_labels)
                    throw ConfigError("evaluate: pairing label index out of range");
                rep.assignment.assignment[k] = pairing[k] < 0 ? -1 : pairing[k];
            }
        } else {
            for (int k = 0; k < std::min(K, num_labels); ++k)
                rep.assignment.assignment[k] = k;
        }
    } else {
        Eigen::MatrixXd auc = Eigen::MatrixXd::Zero(K, num_labels);
        for (int k = 0; k < K; ++k)
            for (int l = 0; l < num_labels; ++l)
                if (available[l])
                    auc(k, l) = curve(k, l).auroc;
        rep.assignment = hungarian_match(auc, Sense::maximize);
    }

    rep.matched_label = rep.assignment.assignment;
    rep.roc.resize(K);
    rep.auroc.assign(K, std::numeric_limits<double>::quiet_NaN());
    std::vector<double> usable;
    double objective = 0.0;
    for (int k = 0; k < K; ++k) {
        const int l = rep.matched_label[k];
        if (l < 0)
            continue;
        if (!available[l]) {
            rep.warnings.push_back("label '" + name(l) + "' has " +
                                   (positives[l] == 0 ? "no positive" : "no negative") +
                                   " documents; topic " + std::to_string(k) +
                                   " excluded from the aggregate");
            continue;
        }
        rep.roc[k] = curve(k, l);
        rep.auroc[k] = rep.roc[k]->auroc;
        objective += rep.auroc[k];
        usable.push_back(rep.auroc[k]);
    }
    rep.assignment.objective = objective;
    if (usable.empty()) {
        rep.aggregate = std::numeric_limits<double>::quiet_NaN();
        rep.warnings.push_back("no topic has an available ROC curve");
    } else if (std::find(usable.begin(), usable.end(), 0.0) != usable.end()) {
        rep.aggregate = 0.0;
        rep.warnings.push_back("a matched AUROC is 0; harmonic mean reported as 0");
    } else {
        rep.aggregate = aggregate_auroc(usable);
    }
    return rep;
}

} // namespace keyatm
