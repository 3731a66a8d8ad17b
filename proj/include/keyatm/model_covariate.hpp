#pragma once

#include "keyatm/model_base.hpp"
#include "keyatm/trace.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace keyatm {

// Column means and population standard deviations. Column 0 is the
// intercept and is left untouched (mean 0, sd 1 recorded).
struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
};

struct StandardizedCovariates {
    Eigen::MatrixXd X_std;
    Standardizer standardizer;
};

StandardizedCovariates standardize(const Eigen::MatrixXd& X,
                                   const std::vector<std::string>& names = {});

// Raw and standardized design of a covariate fit.
struct CovariateDesign {
    Eigen::MatrixXd X;
    Eigen::MatrixXd X_std;
    Standardizer standardizer;
    std::vector<std::string> names;

    explicit CovariateDesign(const Corpus& corpus);
    int num_covariates() const { return static_cast<int>(X.cols()); }
};

struct CovChainState {
    TokenState tokens;
    Eigen::MatrixXd lambda_std; // M x K, coefficients on standardized covariates
    long iteration = 0;
};

CovChainState init_cov_state(const ModelData& data, const CovariateDesign& design,
                             RandomStream& rng);

// D x K matrix exp(X_std * lambda_std).
Eigen::MatrixXd covariate_doc_alpha(const CovariateDesign& design, const Eigen::MatrixXd& lambda_std);

std::vector<double> conditional_z_cov(const ModelData& data, const CovariateDesign& design,
                                      const CovChainState& state, int d, int i);

// Log conditional of lambda_mk (up to a constant) at lambda_mk = value.
double lambda_log_target(const ModelData& data, const CovariateDesign& design,
                         const CountTables& counts, const Eigen::MatrixXd& lambda_std, int m, int k,
                         double value);

void sample_lambda(const ModelData& data, const CovariateDesign& design, CovChainState& state,
                   RandomStream& rng, const SliceOptions& opts = {});

void sweep_covariate(const ModelData& data, const CovariateDesign& design, CovChainState& state,
                     RandomStream& rng, const SliceOptions& opts = {});

// Coefficients on the raw covariate scale: solves X lambda = X_std lambda_std.
Eigen::MatrixXd rescale_lambda(const Eigen::MatrixXd& lambda_std, const Eigen::MatrixXd& X,
                               const Eigen::MatrixXd& X_std);

struct ThetaPrediction {
    Eigen::VectorXd mean;    // K
    Eigen::MatrixXd samples; // draws x K
};

// Average over the kept draws of the trace. With `doc` set, uses that
// document's counts; otherwise returns the predictive mean of theta at x_raw.
ThetaPrediction predict_theta(const Eigen::VectorXd& x_raw, const ChainTrace& trace,
                              const CovariateDesign& design, std::optional<int> doc = std::nullopt);

} // namespace keyatm
