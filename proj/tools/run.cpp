#include "run.hpp"

#include "keyatm/corpus.hpp"
#include "keyatm/errors.hpp"
#include "keyatm/estimators.hpp"
#include "keyatm/evaluation.hpp"
#include "keyatm/model_covariate.hpp"
#include "keyatm/model_dynamic.hpp"
#include "keyatm/snapshot.hpp"
#include "keyatm/text_io.hpp"
#include "keyatm/trace.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#ifndef KEYATM_VERSION
#define KEYATM_VERSION "dev"
#endif

namespace keyatm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- config

namespace {

std::string trim(std::string s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string unquote(std::string s)
{
    s = trim(std::move(s));
    if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front())
        return s.substr(1, s.size() - 2);
    return s;
}

// "a, b" or "[a, b]" -> {a, b}
std::vector<std::string> split_list(std::string s)
{
    s = trim(std::move(s));
    if (!s.empty() && s.front() == '[' && s.back() == ']')
        s = s.substr(1, s.size() - 2);
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (auto v = unquote(item); !v.empty())
            out.push_back(v);
    return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& value)
{
    std::istringstream in(value);
    T x;
    if (!(in >> x) || !(in >> std::ws).eof())
        throw ConfigError("config: '" + key + "' expects a number, got '" + value + "'");
    return x;
}

bool parse_bool(const std::string& key, const std::string& value)
{
    if (value == "true" || value == "1" || value == "yes" || value == "on")
        return true;
    if (value == "false" || value == "0" || value == "no" || value == "off")
        return false;
    throw ConfigError("config: '" + key + "' expects true/false, got '" + value + "'");
}

std::string join(const std::vector<std::string>& xs)
{
    std::string s;
    for (const auto& x : xs)
        s += (s.empty() ? "" : ", ") + x;
    return s;
}

} // namespace

void apply_config_entry(RunConfig& cfg, const std::string& key_in, const std::string& raw)
{
    std::string key = key_in;
    std::replace(key.begin(), key.end(), '-', '_');
    const std::string value = unquote(raw);
    HyperParams& hp = cfg.hp;
    if (key == "model")
        cfg.model = value;
    else if (key == "corpus")
        cfg.corpus = value;
    else if (key == "keywords")
        cfg.keywords = value;
    else if (key == "covariates")
        cfg.covariates = split_list(raw);
    else if (key == "scenarios")
        cfg.scenarios = value;
    else if (key == "k_extra")
        cfg.k_extra = parse_number<int>(key, value);
    else if (key == "iterations")
        cfg.iterations = parse_number<long>(key, value);
    else if (key == "thinning")
        cfg.thinning = parse_number<long>(key, value);
    else if (key == "burn_in")
        cfg.burn_in = parse_number<double>(key, value);
    else if (key == "seed")
        cfg.seeds = {parse_number<std::uint64_t>(key, value)};
    else if (key == "seeds") {
        cfg.seeds.clear();
        for (const auto& s : split_list(raw))
            cfg.seeds.push_back(parse_number<std::uint64_t>(key, s));
    } else if (key == "chains") {
        const int n = parse_number<int>(key, value);
        if (n < 1)
            throw ConfigError("config: chains must be at least 1");
        const std::uint64_t first = cfg.seeds.empty() ? 1 : cfg.seeds.front();
        cfg.seeds.clear();
        for (int c = 0; c < n; ++c)
            cfg.seeds.push_back(first + static_cast<std::uint64_t>(c));
    } else if (key == "states")
        cfg.states = parse_number<int>(key, value);
    else if (key == "weighting")
        cfg.weighting = parse_bool(key, value);
    else if (key == "top_n")
        cfg.top_n = parse_number<int>(key, value);
    else if (key == "init")
        cfg.init = value;
    else if (key == "gamma1")
        hp.gamma1 = parse_number<double>(key, value);
    else if (key == "gamma2")
        hp.gamma2 = parse_number<double>(key, value);
    else if (key == "beta")
        hp.beta = parse_number<double>(key, value);
    else if (key == "beta_tilde")
        hp.beta_tilde = parse_number<double>(key, value);
    else if (key == "eta1")
        hp.eta1 = parse_number<double>(key, value);
    else if (key == "eta2")
        hp.eta2 = parse_number<double>(key, value);
    else if (key == "eta1_tilde")
        hp.eta1_tilde = parse_number<double>(key, value);
    else if (key == "eta2_tilde")
        hp.eta2_tilde = parse_number<double>(key, value);
    else if (key == "mu")
        hp.mu = parse_number<double>(key, value);
    else if (key == "sigma")
        hp.sigma = parse_number<double>(key, value);
    else
        throw ConfigError("config: unknown key '" + key_in + "'");
}

void apply_config_text(RunConfig& cfg, const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty() || line.front() == '[')
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        apply_config_entry(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

void RunConfig::validate() const
{
    if (model != "base" && model != "wlda" && model != "covariate" && model != "dynamic")
        throw ConfigError("config: model must be one of base, wlda, covariate, dynamic");
    if (corpus.empty())
        throw ConfigError("config: corpus path is required");
    if (!(iterations >= thinning && thinning >= 1))
        throw ConfigError("config: iterations >= thinning >= 1 required");
    if (!(burn_in >= 0.0 && burn_in < 1.0))
        throw ConfigError("config: burn_in must lie in [0, 1)");
    if (seeds.empty())
        throw ConfigError("config: at least one seed is required");
    if (k_extra < 0)
        throw ConfigError("config: k_extra must be non-negative");
    if (top_n < 1)
        throw ConfigError("config: top_n must be at least 1");
    if (init != "random" && init != "keywords")
        throw ConfigError("config: init must be random or keywords");
    if (model == "dynamic" && states < 1)
        throw ConfigError("config: states must be at least 1");
    if ((iterations / thinning) * thinning <= burn_in_iterations())
        throw ConfigError("config: no thinned draw falls after the burn-in period");
    hp.validate();
}

long RunConfig::burn_in_iterations() const
{
    return static_cast<long>(std::floor(burn_in * static_cast<double>(iterations)));
}

std::string RunConfig::canonical() const
{
    std::ostringstream out;
    auto q = [](const std::string& s) { return "\"" + s + "\""; };
    std::vector<std::string> seed_strs, cov_strs;
    for (auto s : seeds)
        seed_strs.push_back(std::to_string(s));
    for (const auto& c : covariates)
        cov_strs.push_back(q(c));
    out << "model = " << q(model) << '\n'
        << "corpus = " << q(corpus) << '\n'
        << "keywords = " << q(keywords) << '\n'
        << "covariates = [" << join(cov_strs) << "]\n"
        << "scenarios = " << q(scenarios) << '\n'
        << "k_extra = " << k_extra << '\n'
        << "iterations = " << iterations << '\n'
        << "thinning = " << thinning << '\n'
        << "burn_in = " << format_double(burn_in) << '\n'
        << "seeds = [" << join(seed_strs) << "]\n"
        << "states = " << states << '\n'
        << "weighting = " << (weighting ? "true" : "false") << '\n'
        << "top_n = " << top_n << '\n'
        << "init = " << q(init) << '\n'
        << "gamma1 = " << format_double(hp.gamma1) << '\n'
        << "gamma2 = " << format_double(hp.gamma2) << '\n'
        << "beta = " << format_double(hp.beta) << '\n'
        << "beta_tilde = " << format_double(hp.beta_tilde) << '\n'
        << "eta1 = " << format_double(hp.eta1) << '\n'
        << "eta2 = " << format_double(hp.eta2) << '\n'
        << "eta1_tilde = " << format_double(hp.eta1_tilde) << '\n'
        << "eta2_tilde = " << format_double(hp.eta2_tilde) << '\n'
        << "mu = " << format_double(hp.mu) << '\n'
        << "sigma = " << format_double(hp.sigma) << '\n';
    return out.str();
}

std::uint64_t fnv1a(const std::string& text)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---------------------------------------------------------------- inputs

namespace {

struct Inputs {
    RunConfig cfg;
    Variant variant = Variant::base;
    Corpus corpus;
    KeywordDictionary dict;
    TermWeights weights;
    std::unique_ptr<ModelData> data;
    std::unique_ptr<CovariateDesign> cov;
    std::unique_ptr<DynamicDesign> dyn;
};

std::unique_ptr<Inputs> load_inputs(const RunConfig& cfg)
{
    cfg.validate();
    auto in = std::make_unique<Inputs>();
    in->cfg = cfg;
    in->variant = cfg.model == "covariate" ? Variant::covariate
                  : cfg.model == "dynamic" ? Variant::dynamic
                                           : Variant::base;
    CorpusSchema schema;
    schema.covariate_names = cfg.covariates;
    schema.require_covariates = in->variant == Variant::covariate;
    schema.require_time = in->variant == Variant::dynamic;
    in->corpus = load_corpus(cfg.corpus, schema);
    if (!cfg.keywords.empty()) {
        in->dict = load_keywords(cfg.keywords, in->corpus, cfg.k_extra);
    } else {
        in->dict.k_extra = cfg.k_extra;
        if (in->dict.num_topics() == 0)
            throw ConfigError("config: no keyword file and k_extra = 0 leaves no topics");
    }
    for (const auto& w : in->dict.warnings)
        std::cerr << "warning: " << w << '\n';
    in->weights = compute_term_weights(in->corpus, cfg.weighting);
    in->data = std::make_unique<ModelData>(in->corpus, in->dict, in->weights, cfg.hp,
                                           cfg.model == "wlda" ? Mode::wlda : Mode::keyatm,
                                           cfg.init == "keywords" ? InitMode::keywords
                                                                  : InitMode::random);
    if (in->variant == Variant::covariate)
        in->cov = std::make_unique<CovariateDesign>(in->corpus);
    if (in->variant == Variant::dynamic)
        in->dyn = std::make_unique<DynamicDesign>(in->corpus, cfg.states);
    return in;
}

// ---------------------------------------------------------------- chains

class Chain {
public:
    explicit Chain(const Inputs& in, std::uint64_t seed) : in_(in), rng_(seed) {}
    virtual ~Chain() = default;

    virtual void step() = 0;
    virtual long iteration() const = 0;
    virtual ChainSnapshot snapshot() const = 0;
    virtual void restore(const ChainSnapshot& snap) = 0;

    RandomStream& rng() { return rng_; }

protected:
    ChainSnapshot base_snapshot(const TokenState& t, long iteration, double log_posterior) const
    {
        ChainSnapshot s;
        s.variant = in_.variant;
        s.iteration = iteration;
        s.seed = rng_.seed();
        s.rng_counter = rng_.counter();
        s.log_posterior = log_posterior;
        s.z = t.z;
        s.s = t.s;
        return s;
    }
    TokenState restore_tokens(const ChainSnapshot& snap) const
    {
        const Corpus& c = in_.corpus;
        if (static_cast<int>(snap.z.size()) != c.num_docs() ||
            static_cast<int>(snap.s.size()) != c.num_docs())
            throw ConfigError("snapshot does not match the corpus");
        for (int d = 0; d < c.num_docs(); ++d) {
            if (snap.z[d].size() != c.documents[d].size() || snap.s[d].size() != c.documents[d].size())
                throw ConfigError("snapshot does not match the corpus");
            for (std::size_t i = 0; i < snap.z[d].size(); ++i) {
                const int k = snap.z[d][i];
                if (k < 0 || k >= in_.data->num_topics() ||
                    (snap.s[d][i] && !in_.data->is_keyword(k, c.documents[d][i])))
                    throw ConfigError("snapshot holds an invalid topic assignment");
            }
        }
        TokenState t{snap.z, snap.s, {}};
        t.counts = rebuild_counts(t.z, t.s, c, in_.weights, in_.data->num_topics(),
                                  in_.data->keyword_topics());
        return t;
    }

    const Inputs& in_;
    RandomStream rng_;
};

class BaseChain final : public Chain {
public:
    BaseChain(const Inputs& in, std::uint64_t seed) : Chain(in, seed), st_(init_state(*in.data, rng_)) {}
    void step() override { sweep(*in_.data, st_, rng_); }
    long iteration() const override { return st_.iteration; }
    ChainSnapshot snapshot() const override
    {
        auto s = base_snapshot(st_.tokens, st_.iteration, collapsed_log_posterior(*in_.data, st_));
        s.alpha = st_.alpha;
        return s;
    }
    void restore(const ChainSnapshot& snap) override
    {
        if (snap.alpha.size() != in_.data->num_topics())
            throw ConfigError("snapshot alpha has the wrong length");
        st_.tokens = restore_tokens(snap);
        st_.alpha = snap.alpha;
        st_.iteration = snap.iteration;
    }

private:
    BaseChainState st_;
};

class CovChain final : public Chain {
public:
    CovChain(const Inputs& in, std::uint64_t seed)
        : Chain(in, seed), st_(init_cov_state(*in.data, *in.cov, rng_))
    {
    }
    void step() override { sweep_covariate(*in_.data, *in_.cov, st_, rng_); }
    long iteration() const override { return st_.iteration; }
    ChainSnapshot snapshot() const override
    {
        auto s = base_snapshot(st_.tokens, st_.iteration,
                               collapsed_log_posterior(*in_.data, *in_.cov, st_));
        s.lambda_std = st_.lambda_std;
        return s;
    }
    void restore(const ChainSnapshot& snap) override
    {
        if (snap.lambda_std.rows() != in_.cov->num_covariates() ||
            snap.lambda_std.cols() != in_.data->num_topics())
            throw ConfigError("snapshot lambda has the wrong shape");
        st_.tokens = restore_tokens(snap);
        st_.lambda_std = snap.lambda_std;
        st_.iteration = snap.iteration;
    }

private:
    CovChainState st_;
};

class DynChain final : public Chain {
public:
    DynChain(const Inputs& in, std::uint64_t seed)
        : Chain(in, seed), st_(init_dynamic_state(*in.data, *in.dyn, rng_))
    {
    }
    void step() override { sweep_dynamic(*in_.data, *in_.dyn, st_, rng_); }
    long iteration() const override { return st_.iteration; }
    ChainSnapshot snapshot() const override
    {
        auto s = base_snapshot(st_.tokens, st_.iteration,
                               collapsed_log_posterior(*in_.data, *in_.dyn, st_));
        s.h = st_.h;
        s.p_stay = st_.p_stay;
        s.alpha_mat = st_.alpha;
        return s;
    }
    void restore(const ChainSnapshot& snap) override
    {
        if (!valid_state_path(snap.h, in_.dyn->num_states) ||
            static_cast<int>(snap.h.size()) != in_.dyn->num_periods ||
            snap.alpha_mat.rows() != in_.dyn->num_states ||
            snap.alpha_mat.cols() != in_.data->num_topics())
            throw ConfigError("snapshot state path or alpha has the wrong shape");
        st_.tokens = restore_tokens(snap);
        st_.h = snap.h;
        st_.p_stay = snap.p_stay;
        st_.alpha = snap.alpha_mat;
        st_.iteration = snap.iteration;
    }

private:
    DynChainState st_;
};

std::unique_ptr<Chain> make_chain(const Inputs& in, std::uint64_t seed)
{
    switch (in.variant) {
    case Variant::base: return std::make_unique<BaseChain>(in, seed);
    case Variant::covariate: return std::make_unique<CovChain>(in, seed);
    case Variant::dynamic: return std::make_unique<DynChain>(in, seed);
    }
    return nullptr;
}

// Builds a trace entry from a snapshot; counts are rebuilt from (z, s).
Draw make_draw(const Inputs& in, const ChainSnapshot& snap)
{
    Draw d;
    d.iteration = snap.iteration;
    d.log_posterior = snap.log_posterior;
    d.counts = rebuild_counts(snap.z, snap.s, in.corpus, in.weights, in.data->num_topics(),
                              in.data->keyword_topics());
    const int D = in.corpus.num_docs();
    switch (snap.variant) {
    case Variant::base:
        d.alpha = snap.alpha;
        d.doc_prior = snap.alpha.transpose().replicate(D, 1);
        break;
    case Variant::covariate:
        d.lambda_std = snap.lambda_std;
        d.doc_prior = covariate_doc_alpha(*in.cov, snap.lambda_std);
        break;
    case Variant::dynamic:
        d.h = snap.h;
        d.p_stay = snap.p_stay;
        d.alpha_mat = snap.alpha_mat;
        d.doc_prior.resize(D, snap.alpha_mat.cols());
        for (int doc = 0; doc < D; ++doc)
            d.doc_prior.row(doc) = snap.alpha_mat.row(snap.h[in.corpus.time_index[doc]]);
        break;
    }
    return d;
}

struct ChainRun {
    ChainSnapshot final_state;
    std::vector<ChainSnapshot> trace; // thinned snapshots, no rng position
    std::optional<std::string> fault;
    long fault_iteration = 0;
};

void run_chain(const Inputs& in, std::uint64_t seed, ChainRun& run)
{
    auto chain = make_chain(in, seed);
    if (!run.trace.empty() || run.final_state.iteration > 0) {
        chain->restore(run.final_state);
        chain->rng() = RandomStream::restore(run.final_state.seed, run.final_state.rng_counter);
    }
    try {
        while (chain->iteration() < in.cfg.iterations) {
            chain->step();
            if (chain->iteration() % in.cfg.thinning == 0)
                run.trace.push_back(chain->snapshot());
        }
        run.final_state = chain->snapshot();
    } catch (const SamplerFault& e) {
        run.fault = e.what();
        run.fault_iteration = chain->iteration() + 1;
    }
}

void run_pool(int n, int workers, const std::function<void(int)>& job)
{
    if (workers <= 0)
        workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    workers = std::min(workers, n);
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int c = next++; c < n; c = next++)
                job(c);
        });
    for (auto& t : pool)
        t.join();
}

// ---------------------------------------------------------------- artifacts

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot write " + path.string());
    out << text;
}

ChainTrace build_trace(const Inputs& in, const std::vector<ChainSnapshot>& snaps)
{
    ChainTrace trace(in.variant, in.cfg.thinning, in.cfg.burn_in_iterations());
    for (const auto& s : snaps)
        trace.record(make_draw(in, s));
    return trace;
}

std::string marker_name(WordMarker m)
{
    switch (m) {
    case WordMarker::own_keyword: return "own_keyword";
    case WordMarker::other_keyword: return "other_keyword";
    case WordMarker::plain: return "plain";
    }
    return "";
}

// Linear-interpolation quantile of a sorted copy.
double quantile(std::vector<double> xs, double q)
{
    std::sort(xs.begin(), xs.end());
    const double pos = q * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

std::string draw_summary(const Draw& d)
{
    if (d.alpha.size() > 0)
        return format_double(d.alpha.sum());
    if (d.lambda_std.size() > 0)
        return format_double(d.lambda_std.norm());
    std::string path;
    for (int s : d.h)
        path += (path.empty() ? "" : ";") + std::to_string(s + 1);
    return path;
}

std::vector<std::pair<std::string, Eigen::VectorXd>> covariate_scenarios(const Inputs& in)
{
    const CovariateDesign& cov = *in.cov;
    std::vector<std::pair<std::string, Eigen::VectorXd>> out;
    if (!in.cfg.scenarios.empty()) {
        std::vector<std::string> header{"scenario"};
        for (std::size_t m = 1; m < cov.names.size(); ++m)
            header.push_back(cov.names[m]);
        for (const auto& row : read_csv(in.cfg.scenarios, header)) {
            Eigen::VectorXd x(cov.num_covariates());
            x(0) = 1.0;
            for (int m = 1; m < cov.num_covariates(); ++m)
                x(m) = parse_number<double>(header[m], row[m]);
            out.emplace_back(row[0], x);
        }
        return out;
    }
    const Eigen::VectorXd mean = cov.X.colwise().mean().transpose();
    out.emplace_back("mean", mean);
    for (int m = 1; m < cov.num_covariates(); ++m) {
        Eigen::VectorXd lo = mean, hi = mean;
        lo(m) = cov.X.col(m).minCoeff();
        hi(m) = cov.X.col(m).maxCoeff();
        out.emplace_back(cov.names[m] + "=min", lo);
        out.emplace_back(cov.names[m] + "=max", hi);
    }
    return out;
}

void write_chain_artifacts(const Inputs& in, const fs::path& dir, const ChainRun& run)
{
    fs::create_directories(dir);
    const Corpus& corpus = in.corpus;
    const ModelData& data = *in.data;
    const auto labels = in.dict.topic_labels();

    write_text(dir / "snapshot.json", to_json(run.final_state).dump() + "\n");
    {
        std::ostringstream t;
        for (const auto& s : run.trace) {
            json j = to_json(s);
            j.erase("rng_counter");
            t << j.dump() << '\n';
        }
        write_text(dir / "trace.jsonl", t.str());
    }

    const ChainTrace trace = build_trace(in, run.trace);

    std::ostringstream diag;
    diag << "iteration,log_posterior,perplexity,alpha_or_state_summary\n";
    for (const Draw& d : trace.draws()) {
        const double ppl = perplexity(phi_single(data, d.counts), theta_single(d.counts, d.doc_prior),
                                      corpus);
        diag << d.iteration << ',' << format_double(d.log_posterior) << ',' << format_double(ppl)
             << ',' << draw_summary(d) << '\n';
    }
    write_text(dir / "diagnostics.csv", diag.str());

    const PhiEstimate phi = estimate_phi(trace, data);
    const Eigen::MatrixXd theta = estimate_theta(trace);
    {
        std::ostringstream out;
        out << "topic,word,probability\n";
        for (int k = 0; k < data.num_topics(); ++k)
            for (int v = 0; v < data.vocab_size(); ++v)
                out << csv_field(labels[k]) << ',' << csv_field(corpus.vocab[v]) << ','
                    << format_double(phi.phi(k, v)) << '\n';
        write_text(dir / "phi.csv", out.str());
    }
    {
        std::ostringstream out;
        out << "doc_id,topic,probability\n";
        for (int d = 0; d < corpus.num_docs(); ++d)
            for (int k = 0; k < data.num_topics(); ++k)
                out << csv_field(corpus.doc_ids[d]) << ',' << csv_field(labels[k]) << ','
                    << format_double(theta(d, k)) << '\n';
        write_text(dir / "theta.csv", out.str());
    }
    {
        std::ostringstream out;
        out << "topic,rank,word,probability,marker\n";
        const auto top = top_words(phi.phi, in.cfg.top_n, in.dict);
        for (int k = 0; k < data.num_topics(); ++k)
            for (std::size_t r = 0; r < top[k].size(); ++r)
                out << csv_field(labels[k]) << ',' << r + 1 << ','
                    << csv_field(corpus.vocab[top[k][r].word]) << ','
                    << format_double(top[k][r].probability) << ',' << marker_name(top[k][r].marker)
                    << '\n';
        write_text(dir / "topwords.csv", out.str());
    }

    json summary;
    summary["variant"] = variant_name(in.variant);
    summary["mode"] = data.mode() == Mode::wlda ? "wlda" : "keyatm";
    summary["burn_in_iterations"] = trace.burn_in();
    summary["kept_draws"] = trace.kept().size();
    summary["phi_rows_renormalized"] = true;
    json sums = json::object();
    for (int k = 0; k < data.num_topics(); ++k)
        sums[labels[k]] = phi.raw_row_sums(k);
    summary["phi_raw_row_sums"] = sums;
    summary["perplexity"] = perplexity(phi.phi, theta, corpus);
    json warnings = json::array();

    if (in.variant == Variant::covariate) {
        const CovariateDesign& cov = *in.cov;
        std::ostringstream out;
        out << "iteration,covariate,topic,lambda_std,lambda_raw\n";
        for (const Draw& d : trace.draws()) {
            const Eigen::MatrixXd raw = rescale_lambda(d.lambda_std, cov.X, cov.X_std);
            for (int m = 0; m < cov.num_covariates(); ++m)
                for (int k = 0; k < data.num_topics(); ++k)
                    out << d.iteration << ',' << csv_field(cov.names[m]) << ','
                        << csv_field(labels[k]) << ',' << format_double(d.lambda_std(m, k)) << ','
                        << format_double(raw(m, k)) << '\n';
        }
        write_text(dir / "lambda.csv", out.str());

        std::ostringstream pred;
        pred << "scenario,topic,mean,q05,q95\n";
        for (const auto& [name, x] : covariate_scenarios(in)) {
            const ThetaPrediction p = predict_theta(x, trace, cov);
            for (int k = 0; k < data.num_topics(); ++k) {
                std::vector<double> col(p.samples.rows());
                for (Eigen::Index j = 0; j < p.samples.rows(); ++j)
                    col[j] = p.samples(j, k);
                pred << csv_field(name) << ',' << csv_field(labels[k]) << ','
                     << format_double(p.mean(k)) << ',' << format_double(quantile(col, 0.05)) << ','
                     << format_double(quantile(col, 0.95)) << '\n';
            }
        }
        write_text(dir / "theta_predicted.csv", pred.str());
    }

    if (in.variant == Variant::dynamic) {
        const TimeTrend trend = time_trend(theta, corpus);
        std::ostringstream out;
        out << "time,topic,mean,standardized\n";
        for (int t = 0; t < trend.mean.rows(); ++t)
            for (int k = 0; k < data.num_topics(); ++k)
                out << t << ',' << csv_field(labels[k]) << ',' << format_double(trend.mean(t, k))
                    << ',' << format_double(trend.standardized(t, k)) << '\n';
        write_text(dir / "trend.csv", out.str());
        for (const auto& w : trend.warnings)
            warnings.push_back(w);

        std::ostringstream states, trans;
        states << "iteration,t,state\n";
        trans << "iteration,r,p_stay\n";
        for (const Draw& d : trace.draws()) {
            for (std::size_t t = 0; t < d.h.size(); ++t)
                states << d.iteration << ',' << t << ',' << d.h[t] + 1 << '\n';
            for (Eigen::Index r = 0; r < d.p_stay.size(); ++r)
                trans << d.iteration << ',' << r + 1 << ',' << format_double(d.p_stay(r)) << '\n';
        }
        write_text(dir / "states.csv", states.str());
        write_text(dir / "transitions.csv", trans.str());
    }
    summary["warnings"] = warnings;
    write_text(dir / "summary.json", summary.dump(2) + "\n");
}

fs::path chain_dir(const fs::path& root, std::size_t c) { return root / ("chain_" + std::to_string(c)); }

void write_run(const Inputs& in, const fs::path& out_dir, const std::vector<ChainRun>& runs)
{
    fs::create_directories(out_dir);
    for (std::size_t c = 0; c < runs.size(); ++c)
        write_chain_artifacts(in, chain_dir(out_dir, c), runs[c]);
    const std::string canon = in.cfg.canonical();
    write_text(out_dir / "config.toml", canon);
    json manifest;
    manifest["software"] = "keyatm";
    manifest["version"] = KEYATM_VERSION;
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(canon)));
    manifest["config_hash"] = hash;
    manifest["model"] = in.cfg.model;
    manifest["seeds"] = in.cfg.seeds;
    manifest["iterations"] = in.cfg.iterations;
    json chains = json::array();
    for (std::size_t c = 0; c < runs.size(); ++c)
        chains.push_back(chain_dir(fs::path{}, c).string());
    manifest["chains"] = chains;
    write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

int execute(const Inputs& in, const fs::path& out_dir, std::vector<ChainRun>& runs, int workers)
{
    run_pool(static_cast<int>(runs.size()), workers,
             [&](int c) { run_chain(in, in.cfg.seeds[c], runs[c]); });
    json faults = json::array();
    for (std::size_t c = 0; c < runs.size(); ++c)
        if (runs[c].fault)
            faults.push_back({{"chain", c}, {"iteration", runs[c].fault_iteration},
                              {"message", *runs[c].fault}});
    if (!faults.empty()) {
        fs::create_directories(out_dir);
        write_text(out_dir / "fault.json", faults.dump(2) + "\n");
        for (const auto& f : faults)
            std::cerr << "sampler fault in chain " << f["chain"] << " at iteration "
                      << f["iteration"] << ": " << f["message"].get<std::string>() << '\n';
        return kSamplerFault;
    }
    write_run(in, out_dir, runs);
    return kOk;
}

RunConfig read_run_config(const fs::path& run_dir)
{
    RunConfig cfg;
    apply_config_text(cfg, read_file(run_dir / "config.toml"));
    return cfg;
}

std::vector<ChainRun> read_runs(const fs::path& run_dir, std::size_t chains)
{
    std::vector<ChainRun> runs(chains);
    for (std::size_t c = 0; c < chains; ++c) {
        const fs::path dir = chain_dir(run_dir, c);
        try {
            runs[c].final_state = snapshot_from_json(json::parse(read_file(dir / "snapshot.json")));
            std::istringstream trace(read_file(dir / "trace.jsonl"));
            std::string line;
            while (std::getline(trace, line))
                if (!line.empty())
                    runs[c].trace.push_back(snapshot_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw ConfigError(dir.string() + ": " + e.what());
        }
    }
    return runs;
}

} // namespace

int fit(const RunConfig& cfg, const fs::path& out_dir, int workers)
{
    const auto in = load_inputs(cfg);
    std::vector<ChainRun> runs(cfg.seeds.size());
    return execute(*in, out_dir, runs, workers);
}

int resume(const fs::path& run_dir, long iterations, int workers)
{
    RunConfig cfg = read_run_config(run_dir);
    auto runs = read_runs(run_dir, cfg.seeds.size());
    for (const auto& r : runs)
        if (r.final_state.iteration > iterations)
            throw ConfigError("resume: the run is already at iteration " +
                              std::to_string(r.final_state.iteration) + " > " +
                              std::to_string(iterations));
    cfg.iterations = iterations;
    const auto in = load_inputs(cfg);
    return execute(*in, run_dir, runs, workers);
}

int summarize(const fs::path& run_dir, double burn_in, int top_n)
{
    RunConfig cfg = read_run_config(run_dir);
    if (burn_in >= 0.0)
        cfg.burn_in = burn_in;
    if (top_n > 0)
        cfg.top_n = top_n;
    const auto in = load_inputs(cfg);
    const auto runs = read_runs(run_dir, cfg.seeds.size());
    write_run(*in, run_dir, runs);
    return kOk;
}

// ---------------------------------------------------------------- evaluate

namespace {

int evaluate_cmd(const fs::path& theta_path, const fs::path& labels_path, const std::string& match,
                 const fs::path& out_dir)
{
    if (match != "fixed" && match != "hungarian")
        throw ConfigError("evaluate: --match must be fixed or hungarian");

    std::vector<std::string> docs, topics;
    std::map<std::string, int> doc_index, topic_index;
    std::map<std::pair<int, int>, double> values;
    for (const auto& row : read_csv(theta_path, {"doc_id", "topic", "probability"})) {
        auto [d, dnew] = doc_index.emplace(row[0], static_cast<int>(docs.size()));
        if (dnew)
            docs.push_back(row[0]);
        auto [k, knew] = topic_index.emplace(row[1], static_cast<int>(topics.size()));
        if (knew)
            topics.push_back(row[1]);
        values[{d->second, k->second}] = parse_number<double>("probability", row[2]);
    }
    const int D = static_cast<int>(docs.size());
    const int K = static_cast<int>(topics.size());
    if (D == 0)
        throw SchemaError("evaluate: theta file has no rows");
    if (static_cast<int>(values.size()) != D * K)
        throw SchemaError("evaluate: theta file does not list every (doc, topic) pair");
    Eigen::MatrixXd theta(D, K);
    for (const auto& [key, p] : values)
        theta(key.first, key.second) = p;

    std::map<std::string, std::string> gold_name;
    for (const auto& row : read_csv(labels_path, {"doc_id", "label"}))
        gold_name[row[0]] = row[1];
    for (const auto& d : docs)
        if (!gold_name.count(d))
            throw SchemaError("evaluate: labels file has no label for document '" + d + "'");

    // Labels named like a topic come first, in topic order.
    std::vector<std::string> label_names;
    std::map<std::string, int> label_index;
    std::set<std::string> distinct;
    for (const auto& d : docs)
        distinct.insert(gold_name[d]);
    for (const auto& t : topics)
        if (distinct.count(t)) {
            label_index[t] = static_cast<int>(label_names.size());
            label_names.push_back(t);
        }
    for (const auto& l : distinct)
        if (!label_index.count(l)) {
            label_index[l] = static_cast<int>(label_names.size());
            label_names.push_back(l);
        }

    std::vector<int> gold(D);
    for (int d = 0; d < D; ++d)
        gold[d] = label_index[gold_name[docs[d]]];

    std::vector<int> pairing;
    if (match == "fixed")
        for (const auto& t : topics)
            pairing.push_back(label_index.count(t) ? label_index[t] : -1);
    const EvaluationReport rep =
        evaluate_against_labels(theta, gold, static_cast<int>(label_names.size()),
                                match == "fixed" ? MatchMode::fixed : MatchMode::hungarian,
                                label_names, pairing);

    fs::create_directories(out_dir);
    std::ostringstream roc_out, auc_out;
    roc_out << "topic,fpr,tpr\n";
    auc_out << "topic,auroc,matched_label\n";
    json assignment = json::object();
    for (int k = 0; k < K; ++k) {
        const int l = rep.matched_label[k];
        if (rep.roc[k])
            for (const auto& p : rep.roc[k]->points)
                roc_out << csv_field(topics[k]) << ',' << format_double(p.fpr) << ','
                        << format_double(p.tpr) << '\n';
        auc_out << csv_field(topics[k]) << ','
                << (std::isfinite(rep.auroc[k]) ? format_double(rep.auroc[k]) : "NA") << ','
                << (l >= 0 ? csv_field(label_names[l]) : "") << '\n';
        assignment[topics[k]] = l >= 0 ? json(label_names[l]) : json(nullptr);
    }
    write_text(out_dir / "roc.csv", roc_out.str());
    write_text(out_dir / "auroc.csv", auc_out.str());
    json report;
    report["match"] = match;
    report["assignment"] = assignment;
    report["aggregate_auroc"] = std::isfinite(rep.aggregate) ? json(rep.aggregate) : json(nullptr);
    report["aggregate_method"] = "harmonic mean of per-topic one-vs-rest AUROC";
    report["warnings"] = rep.warnings;
    write_text(out_dir / "report.json", report.dump(2) + "\n");
    return kOk;
}

} // namespace

// ---------------------------------------------------------------- main

int main(int argc, char** argv)
{
    CLI::App app{"Keyword-assisted topic models fitted by collapsed Gibbs sampling"};
    app.require_subcommand(1);

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "Fit a model and write per-chain artifacts");
    std::string config_path, out_dir;
    std::map<std::string, std::string> flags;
    fit_cmd->add_option("--config", config_path, "key = value configuration file");
    fit_cmd->add_option("--output,-o", out_dir, "Output directory")->required();
    int workers = 0;
    fit_cmd->add_option("--workers", workers, "Worker threads (default: hardware)");
    const char* keys[] = {"model",      "corpus",     "keywords", "covariates", "scenarios",
                          "k-extra",    "iterations", "thinning", "burn-in",    "seed",
                          "seeds",      "chains",     "states",   "weighting",  "top-n",      "init",
                          "gamma1",     "gamma2",     "beta",     "beta-tilde", "eta1",
                          "eta2",       "eta1-tilde", "eta2-tilde", "mu",       "sigma"};
    for (const char* key : keys)
        fit_cmd->add_option_function<std::string>(
            std::string("--") + key, [&flags, key](const std::string& v) { flags[key] = v; },
            "Overrides the config value");

    // resume
    auto* resume_cmd = app.add_subcommand("resume", "Continue the chains of a run");
    std::string run_dir;
    long resume_iterations = 0;
    resume_cmd->add_option("--run", run_dir, "Run directory")->required();
    resume_cmd->add_option("--iterations", resume_iterations, "New total iterations")->required();
    resume_cmd->add_option("--workers", workers, "Worker threads");

    // summarize
    auto* summarize_cmd = app.add_subcommand("summarize", "Recompute summaries of a run");
    double burn_in = -1.0;
    int top_n = 0;
    summarize_cmd->add_option("--run", run_dir, "Run directory")->required();
    summarize_cmd->add_option("--burn-in", burn_in, "Burn-in fraction");
    summarize_cmd->add_option("--top-n", top_n, "Words per topic in topwords.csv");

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "ROC evaluation of theta against gold labels");
    std::string theta_path, labels_path, match = "fixed";
    eval_cmd->add_option("--theta", theta_path, "theta.csv")->required();
    eval_cmd->add_option("--labels", labels_path, "CSV doc_id,label")->required();
    eval_cmd->add_option("--match", match, "fixed | hungarian");
    eval_cmd->add_option("--output,-o", out_dir, "Output directory")->required();

    // weights
    auto* weights_cmd = app.add_subcommand("weights", "Term weights of a corpus");
    std::string corpus_path, keywords_path, out_file;
    bool no_weighting = false;
    weights_cmd->add_option("--corpus", corpus_path, "Corpus JSONL")->required();
    weights_cmd->add_flag("--no-weighting", no_weighting, "Use m(v) = 1");
    weights_cmd->add_option("--output,-o", out_file, "CSV file (default stdout)");

    // topwords
    auto* top_cmd = app.add_subcommand("topwords", "Print top words of a fitted chain");
    int chain = 0;
    top_cmd->add_option("--run", run_dir, "Run directory")->required();
    top_cmd->add_option("--chain", chain, "Chain index");

    // diagnose-keywords
    auto* diag_cmd = app.add_subcommand("diagnose-keywords", "Keyword coverage diagnostics");
    int k_extra = 0;
    diag_cmd->add_option("--corpus", corpus_path, "Corpus JSONL")->required();
    diag_cmd->add_option("--keywords", keywords_path, "Keyword JSON")->required();
    diag_cmd->add_option("--output,-o", out_dir, "Output directory")->required();
    diag_cmd->add_option("--k-extra", k_extra, "Number of no-keyword topics");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (fit_cmd->parsed()) {
            RunConfig cfg;
            if (!config_path.empty())
                apply_config_text(cfg, read_file(config_path));
            // "seed" must apply before "chains" so derived seeds start from it
            for (const char* key : {"seed", "seeds"})
                if (flags.count(key))
                    apply_config_entry(cfg, key, flags[key]);
            for (const auto& [key, value] : flags)
                if (key != "seed" && key != "seeds")
                    apply_config_entry(cfg, key, value);
            return fit(cfg, out_dir, workers);
        }
        if (resume_cmd->parsed())
            return resume(run_dir, resume_iterations, workers);
        if (summarize_cmd->parsed())
            return summarize(run_dir, burn_in, top_n);
        if (eval_cmd->parsed())
            return evaluate_cmd(theta_path, labels_path, match, out_dir);
        if (weights_cmd->parsed()) {
            const Corpus corpus = load_corpus(corpus_path);
            const TermWeights w = compute_term_weights(corpus, !no_weighting);
            if (out_file.empty()) {
                write_weights_csv(corpus, w, std::cout);
            } else {
                std::ofstream out(out_file);
                write_weights_csv(corpus, w, out);
            }
            return kOk;
        }
        if (top_cmd->parsed()) {
            std::cout << read_file(chain_dir(run_dir, static_cast<std::size_t>(chain)) / "topwords.csv");
            return kOk;
        }
        if (diag_cmd->parsed()) {
            const Corpus corpus = load_corpus(corpus_path);
            const KeywordDictionary dict = load_keywords(keywords_path, corpus, k_extra);
            for (const auto& w : dict.warnings)
                std::cerr << "warning: " << w << '\n';
            const KeywordDiagnostics diag = keyword_diagnostics(corpus, dict);
            fs::create_directories(out_dir);
            std::ofstream docs(fs::path(out_dir) / "keyword_documents.csv");
            std::ofstream kws(fs::path(out_dir) / "keyword_frequency.csv");
            write_keyword_diagnostics_csv(corpus, dict, diag, docs, kws);
            return kOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const SamplerFault& e) {
        std::cerr << "sampler fault: " << e.what() << '\n';
        return kSamplerFault;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kFailure;
}

} // namespace keyatm::cli
