#pragma once

#include "keyatm/trace.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <vector>

namespace keyatm {

// Everything needed to continue a chain bit-exactly: latent variables,
// top-level parameters and the random stream position. Count tables are
// rebuilt from (z, s) on load.
struct ChainSnapshot {
    Variant variant = Variant::base;
    long iteration = 0;
    std::uint64_t seed = 0;
    std::uint64_t rng_counter = 0;
    double log_posterior = 0.0;
    std::vector<std::vector<int>> z;
    std::vector<std::vector<std::uint8_t>> s;
    Eigen::VectorXd alpha;
    Eigen::MatrixXd lambda_std;
    std::vector<int> h;
    Eigen::VectorXd p_stay;
    Eigen::MatrixXd alpha_mat;
};

// Run-length encoding as [[value, run], ...].
nlohmann::json rle_encode(const std::vector<int>& xs);
std::vector<int> rle_decode(const nlohmann::json& runs);

nlohmann::json to_json(const ChainSnapshot& snap);
ChainSnapshot snapshot_from_json(const nlohmann::json& j);

} // namespace keyatm
