#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace keyatm {

struct RocPoint {
    double fpr;
    double tpr;
};

struct RocResult {
    std::vector<RocPoint> points; // (0,0) ... (1,1), one point per distinct score
    double auroc = 0.0;
    long positives = 0;
    long negatives = 0;
};

// Labels are 0/1. AUROC is the Mann-Whitney probability that a random
// positive outscores a random negative, ties counting one half.
RocResult roc(std::span<const double> scores, std::span<const int> labels);

// Trapezoidal area under the curve's points.
double trapezoid_area(const std::vector<RocPoint>& points);

// Harmonic mean of per-topic AUROCs, each in (0, 1].
double aggregate_auroc(std::span<const double> per_topic);

enum class Sense { maximize, minimize };

struct TopicAssignment {
    std::vector<int> assignment; // row (model topic) -> column (label), -1 if unmatched
    double objective = 0.0;
};

// Optimal one-to-one assignment between rows and columns. Among optimal
// assignments the lexicographically smallest vector is returned, with
// unmatched rows ordered after every real column.
TopicAssignment hungarian_match(const Eigen::MatrixXd& objective, Sense sense = Sense::maximize);

enum class MatchMode { fixed, hungarian };

struct EvaluationReport {
    std::vector<int> matched_label;             // per topic, -1 if none
    std::vector<std::optional<RocResult>> roc;  // per topic; empty when unavailable
    std::vector<double> auroc;                  // per topic; NaN when unavailable
    TopicAssignment assignment;
    double aggregate = 0.0;                     // harmonic mean over available topics
    std::vector<std::string> warnings;
};

// One-vs-rest ROC of theta's columns against single gold labels in
// [0, num_labels). Fixed mode pairs topic k with `pairing[k]` when given,
// otherwise with label k.
EvaluationReport evaluate_against_labels(const Eigen::MatrixXd& theta, std::span<const int> gold,
                                         int num_labels, MatchMode mode,
                                         const std::vector<std::string>& label_names = {},
                                         const std::vector<int>& pairing = {});

} // namespace keyatm
