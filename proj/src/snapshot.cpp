#include "keyatm/snapshot.hpp"

#include "keyatm/errors.hpp"

namespace keyatm {

using nlohmann::json;

json rle_encode(const std::vector<int>& xs)
{
    json runs = json::array();
    for (std::size_t i = 0; i < xs.size();) {
        std::size_t j = i;
        while (j < xs.size() && xs[j] == xs[i])
            ++j;
        runs.push_back({xs[i], j - i});
        i = j;
    }
    return runs;
}

std::vector<int> rle_decode(const json& runs)
{
    std::vector<int> xs;
    for (const auto& r : runs) {
        if (!r.is_array() || r.size() != 2)
            throw ConfigError("snapshot: malformed run-length entry");
        xs.insert(xs.end(), r[1].get<std::size_t>(), r[0].get<int>());
    }
    return xs;
}

namespace {

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json mat_json(const Eigen::MatrixXd& m)
{
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        std::vector<double> row(m.cols());
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            row[c] = m(r, c);
        rows.push_back(row);
    }
    return rows;
}

Eigen::VectorXd json_vec(const json& j)
{
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd json_mat(const json& j)
{
    const auto rows = j.get<std::vector<std::vector<double>>>();
    if (rows.empty())
        return {};
    Eigen::MatrixXd m(rows.size(), rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows[0].size())
            throw ConfigError("snapshot: ragged matrix");
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            m(r, c) = rows[r][c];
    }
    return m;
}

Variant parse_variant(const std::string& s)
{
    if (s == "base")
        return Variant::base;
    if (s == "covariate")
        return Variant::covariate;
    if (s == "dynamic")
        return Variant::dynamic;
    throw ConfigError("snapshot: unknown variant '" + s + "'");
}

} // namespace

json to_json(const ChainSnapshot& snap)
{
    json j;
    j["variant"] = variant_name(snap.variant);
    j["iteration"] = snap.iteration;
    j["seed"] = snap.seed;
    j["rng_counter"] = snap.rng_counter;
    j["log_posterior"] = snap.log_posterior;
    json z = json::array(), s = json::array();
    for (std::size_t d = 0; d < snap.z.size(); ++d) {
        z.push_back(rle_encode(snap.z[d]));
        s.push_back(rle_encode(std::vector<int>(snap.s[d].begin(), snap.s[d].end())));
    }
    j["z"] = std::move(z);
    j["s"] = std::move(s);
    switch (snap.variant) {
    case Variant::base:
        j["alpha"] = vec_json(snap.alpha);
        break;
    case Variant::covariate:
        j["lambda_std"] = mat_json(snap.lambda_std);
        break;
    case Variant::dynamic:
        j["h"] = snap.h;
        j["p_stay"] = vec_json(snap.p_stay);
        j["alpha"] = mat_json(snap.alpha_mat);
        break;
    }
    return j;
}

ChainSnapshot snapshot_from_json(const json& j)
{
    try {
        ChainSnapshot snap;
        snap.variant = parse_variant(j.at("variant").get<std::string>());
        snap.iteration = j.at("iteration").get<long>();
        snap.seed = j.value("seed", std::uint64_t{0});
        snap.rng_counter = j.value("rng_counter", std::uint64_t{0});
        snap.log_posterior = j.value("log_posterior", 0.0);
        for (const auto& runs : j.at("z"))
            snap.z.push_back(rle_decode(runs));
        for (const auto& runs : j.at("s")) {
            const auto v = rle_decode(runs);
            snap.s.emplace_back(v.begin(), v.end());
        }
        switch (snap.variant) {
        case Variant::base:
            snap.alpha = json_vec(j.at("alpha"));
            break;
        case Variant::covariate:
            snap.lambda_std = json_mat(j.at("lambda_std"));
            break;
        case Variant::dynamic:
            snap.h = j.at("h").get<std::vector<int>>();
            snap.p_stay = json_vec(j.at("p_stay"));
            snap.alpha_mat = json_mat(j.at("alpha"));
            break;
        }
        return snap;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("snapshot: ") + e.what());
    }
}

} // namespace keyatm
