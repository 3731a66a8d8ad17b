#pragma once

#include "keyatm/sampler_core.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace keyatm {

enum class Variant { base, covariate, dynamic };

const char* variant_name(Variant v);

// One stored iteration of a chain.
struct Draw {
    long iteration = 0;
    CountTables counts;
    // D x K Dirichlet parameters of theta_d at this iteration.
    Eigen::MatrixXd doc_prior;
    double log_posterior = 0.0;

    Eigen::VectorXd alpha;      // base
    Eigen::MatrixXd lambda_std; // covariate, M x K
    std::vector<int> h;         // dynamic
    Eigen::VectorXd p_stay;     // dynamic
    Eigen::MatrixXd alpha_mat;  // dynamic, R x K
};

// Thinned draws of one chain. Every thinned iteration is stored; the
// burn-in boundary only selects which draws the estimators average.
class ChainTrace {
public:
    ChainTrace(Variant variant, long thinning, long burn_in);

    Variant variant() const { return variant_; }
    long thinning() const { return thinning_; }
    long burn_in() const { return burn_in_; }
    void set_burn_in(long burn_in) { burn_in_ = burn_in; }

    // Throws std::logic_error unless iterations are increasing multiples of the thinning interval.
    void record(Draw draw);

    const std::vector<Draw>& draws() const { return draws_; }
    // Draws after the burn-in boundary.
    std::vector<const Draw*> kept() const;

private:
    Variant variant_;
    long thinning_;
    long burn_in_;
    std::vector<Draw> draws_;
};

} // namespace keyatm
