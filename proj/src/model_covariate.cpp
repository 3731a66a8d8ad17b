#include "keyatm/model_covariate.hpp"

#include "keyatm/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace keyatm {

Eigen::VectorXd Standardizer::apply(const Eigen::VectorXd& x) const
{
    if (x.size() != mean.size())
        throw ConfigError("covariate vector has " + std::to_string(x.size()) + " entries, expected " +
                          std::to_string(mean.size()));
    return ((x - mean).array() / sd.array()).matrix();
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& X) const
{
    if (X.cols() != mean.size())
        throw ConfigError("covariate matrix has the wrong number of columns");
    Eigen::MatrixXd out = X;
    for (Eigen::Index m = 0; m < X.cols(); ++m)
        out.col(m) = (X.col(m).array() - mean(m)) / sd(m);
    return out;
}

StandardizedCovariates standardize(const Eigen::MatrixXd& X, const std::vector<std::string>& names)
{
    const Eigen::Index D = X.rows();
    const Eigen::Index M = X.cols();
    if (M < 1 || D < 1)
        throw SchemaError("standardize: empty covariate matrix");
    if ((X.col(0).array() != 1.0).any())
        throw SchemaError("standardize: column 0 must be the intercept (all 1)");

    StandardizedCovariates out;
    out.standardizer.mean = Eigen::VectorXd::Zero(M);
    out.standardizer.sd = Eigen::VectorXd::Ones(M);
    for (Eigen::Index m = 1; m < M; ++m) {
        const double mean = X.col(m).mean();
        const double var = (X.col(m).array() - mean).square().sum() / static_cast<double>(D);
        if (!(var > 0.0)) {
            const std::string name =
                m < static_cast<Eigen::Index>(names.size()) ? names[m] : "column " + std::to_string(m);
            throw SchemaError("standardize: covariate '" + name + "' is constant");
        }
        out.standardizer.mean(m) = mean;
        out.standardizer.sd(m) = std::sqrt(var);
    }
    out.X_std = out.standardizer.apply(X);
    return out;
}

CovariateDesign::CovariateDesign(const Corpus& corpus)
{
    if (!corpus.has_covariates())
        throw SchemaError("covariate model: the corpus has no covariates");
    X = corpus.covariates;
    names = corpus.covariate_names;
    auto s = standardize(X, names);
    X_std = std::move(s.X_std);
    standardizer = std::move(s.standardizer);
}

CovChainState init_cov_state(const ModelData& data, const CovariateDesign& design,
                             RandomStream& rng)
{
    CovChainState st;
    const HyperParams& hp = data.hp();
    st.lambda_std.resize(design.num_covariates(), data.num_topics());
    for (Eigen::Index m = 0; m < st.lambda_std.rows(); ++m)
        for (Eigen::Index k = 0; k < st.lambda_std.cols(); ++k)
            st.lambda_std(m, k) = rng.normal(hp.mu, hp.sigma);
    st.tokens = init_tokens(data, rng);
    return st;
}

Eigen::MatrixXd covariate_doc_alpha(const CovariateDesign& design, const Eigen::MatrixXd& lambda_std)
{
    return (design.X_std * lambda_std).array().exp().matrix();
}

std::vector<double> conditional_z_cov(const ModelData& data, const CovariateDesign& design,
                                      const CovChainState& state, int d, int i)
{
    const Eigen::RowVectorXd a = (design.X_std.row(d) * state.lambda_std).array().exp().matrix();
    std::vector<double> out(data.num_topics());
    conditional_z(data, state.tokens, d, i, std::span<const double>(a.data(), a.size()), out);
    return out;
}

double lambda_log_target(const ModelData& data, const CovariateDesign& design,
                         const CountTables& counts, const Eigen::MatrixXd& lambda_std, int m, int k,
                         double value)
{
    const HyperParams& hp = data.hp();
    const int K = data.num_topics();
    double lp = -(value - hp.mu) * (value - hp.mu) / (2.0 * hp.sigma * hp.sigma);
    for (int d = 0; d < data.num_docs(); ++d) {
        double total = 0.0;
        double a_k = 0.0;
        for (int j = 0; j < K; ++j) {
            double eta = design.X_std.row(d).dot(lambda_std.col(j));
            if (j == k)
                eta += design.X_std(d, m) * (value - lambda_std(m, k));
            const double a = std::exp(eta);
            total += a;
            if (j == k)
                a_k = a;
        }
        lp += log_gamma(total) - log_gamma(a_k) + log_gamma(counts.n_dk(d, k) + a_k) -
              log_gamma(counts.n_d(d) + total);
    }
    return lp;
}

void sample_lambda(const ModelData& data, const CovariateDesign& design, CovChainState& state,
                   RandomStream& rng, const SliceOptions& opts)
{
    for (Eigen::Index m = 0; m < state.lambda_std.rows(); ++m)
        for (Eigen::Index k = 0; k < state.lambda_std.cols(); ++k) {
            auto target = [&](double x) -> double {
                const double lp = lambda_log_target(data, design, state.tokens.counts,
                                                    state.lambda_std, static_cast<int>(m),
                                                    static_cast<int>(k), x);
                return std::isfinite(lp) ? lp : -std::numeric_limits<double>::infinity();
            };
            try {
                state.lambda_std(m, k) = slice_sample_real(target, state.lambda_std(m, k), opts, rng);
            } catch (const SamplerFault& e) {
                throw SamplerFault(std::string(e.what()) + " (lambda[" + std::to_string(m) + "," +
                                   std::to_string(k) + "])");
            }
        }
}

void sweep_covariate(const ModelData& data, const CovariateDesign& design, CovChainState& state,
                     RandomStream& rng, const SliceOptions& opts)
{
    sweep_tokens(data, state.tokens,
                 DocPriors::per_document(covariate_doc_alpha(design, state.lambda_std)), rng);
    sample_lambda(data, design, state, rng, opts);
    ++state.iteration;
}

Eigen::MatrixXd rescale_lambda(const Eigen::MatrixXd& lambda_std, const Eigen::MatrixXd& X,
                               const Eigen::MatrixXd& X_std)
{
    const Eigen::MatrixXd gram = X.transpose() * X;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gram);
    if (qr.rank() < gram.rows())
        throw ConfigError("rescale_lambda: X'X is singular; check the covariates for collinear "
                          "or duplicated columns");
    return qr.solve(X.transpose() * (X_std * lambda_std));
}

ThetaPrediction predict_theta(const Eigen::VectorXd& x_raw, const ChainTrace& trace,
                              const CovariateDesign& design, std::optional<int> doc)
{
    const auto kept = trace.kept();
    if (kept.empty())
        throw ConfigError("predict_theta: no draws after burn-in");
    const Eigen::Index K = kept.front()->lambda_std.cols();
    Eigen::VectorXd x_std;
    if (!doc)
        x_std = design.standardizer.apply(x_raw);

    ThetaPrediction out;
    out.samples.resize(static_cast<Eigen::Index>(kept.size()), K);
    for (std::size_t j = 0; j < kept.size(); ++j) {
        const Draw& draw = *kept[j];
        Eigen::VectorXd w(K);
        if (doc) {
            for (Eigen::Index k = 0; k < K; ++k)
                w(k) = draw.doc_prior(*doc, k) + draw.counts.n_dk(*doc, static_cast<int>(k));
        } else {
            // softmax of lambda' x*, shifted for stability
            Eigen::VectorXd eta = draw.lambda_std.transpose() * x_std;
            w = (eta.array() - eta.maxCoeff()).exp().matrix();
        }
        out.samples.row(static_cast<Eigen::Index>(j)) = (w / w.sum()).transpose();
    }
    out.mean = out.samples.colwise().mean().transpose();
    return out;
}

} // namespace keyatm
