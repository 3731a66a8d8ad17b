#pragma once

#include "keyatm/model_base.hpp"

#include <Eigen/Dense>

#include <vector>

namespace keyatm {

// Time periods and the documents that belong to each.
struct DynamicDesign {
    int num_periods = 0;
    int num_states = 0;
    std::vector<std::vector<int>> docs_at;

    DynamicDesign(const Corpus& corpus, int num_states);
};

struct DynChainState {
    TokenState tokens;
    std::vector<int> h;      // state of each period, 0-based
    Eigen::VectorXd p_stay;  // p_rr; the final state is absorbing (1)
    Eigen::MatrixXd alpha;   // R x K
    long iteration = 0;
};

DynChainState init_dynamic_state(const ModelData& data, const DynamicDesign& design,
                                 RandomStream& rng);

// Rows alpha_{h_t[d]} for every document.
DocPriors dynamic_doc_priors(const Corpus& corpus, const DynChainState& state);

// log Dirichlet-multinomial probability of z_d under alpha_r, without the
// multinomial coefficient.
double doc_state_loglik(const CountTables& counts, int d, std::span<const double> alpha_r);

// T x R filtered probabilities Pr(h_t = r | z_1..t), restricted to states
// from which the final state is still reachable.
Eigen::MatrixXd forward_filter(const DynamicDesign& design, const DynChainState& state);

void backward_sample_states(const Eigen::MatrixXd& filtered, DynChainState& state,
                            RandomStream& rng);

void sample_transition(DynChainState& state, RandomStream& rng);

void sample_alpha_dynamic(const ModelData& data, const DynamicDesign& design,
                          DynChainState& state, RandomStream& rng, const SliceOptions& opts = {});

void sweep_dynamic(const ModelData& data, const DynamicDesign& design, DynChainState& state,
                   RandomStream& rng, const SliceOptions& opts = {});

bool valid_state_path(const std::vector<int>& h, int num_states);

} // namespace keyatm
