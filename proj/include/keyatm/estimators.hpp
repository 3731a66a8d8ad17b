#pragma once

#include "keyatm/model_base.hpp"
#include "keyatm/model_covariate.hpp"
#include "keyatm/model_dynamic.hpp"
#include "keyatm/trace.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace keyatm {

// Topic-word mixture for one set of counts. Rows are renormalized to sum
// to one; the sums before renormalization go to `raw_row_sums` if given.
Eigen::MatrixXd phi_single(const ModelData& data, const CountTables& counts,
                           Eigen::VectorXd* raw_row_sums = nullptr);

struct PhiEstimate {
    Eigen::MatrixXd phi;          // K x V
    Eigen::VectorXd raw_row_sums; // mean over draws of the pre-normalization row sums
};

PhiEstimate estimate_phi(const ChainTrace& trace, const ModelData& data);

// (a_dk + n_dk) / sum_k (a_dk + n_dk) for one draw.
Eigen::MatrixXd theta_single(const CountTables& counts, const Eigen::MatrixXd& doc_prior);

// D x K posterior mean of theta over the kept draws.
Eigen::MatrixXd estimate_theta(const ChainTrace& trace);

struct TimeTrend {
    Eigen::MatrixXd mean;         // T x K
    Eigen::MatrixXd standardized; // columns centered and scaled (population SD)
    std::vector<std::string> warnings;
};

TimeTrend time_trend(const Eigen::MatrixXd& theta_hat, const Corpus& corpus);

// Collapsed log posterior of (z, s) given per-document Dirichlet
// parameters, excluding any prior on those parameters.
double collapsed_log_likelihood(const ModelData& data, const TokenState& tokens,
                                const DocPriors& priors);

double collapsed_log_posterior(const ModelData& data, const BaseChainState& state);
double collapsed_log_posterior(const ModelData& data, const CovariateDesign& design,
                               const CovChainState& state);
double collapsed_log_posterior(const ModelData& data, const DynamicDesign& design,
                               const DynChainState& state);

double perplexity(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& theta, const Corpus& corpus);

enum class WordMarker { own_keyword, other_keyword, plain };

struct RankedWord {
    WordId word;
    double probability;
    WordMarker marker;
};

// n highest-probability words per topic; ties go to the smaller word id.
std::vector<std::vector<RankedWord>> top_words(const Eigen::MatrixXd& phi, int n,
                                               const KeywordDictionary& dict);

} // namespace keyatm
