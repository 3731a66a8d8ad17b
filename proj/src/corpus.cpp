#include "keyatm/corpus.hpp"

#include "keyatm/errors.hpp"
#include "keyatm/text_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

namespace keyatm {

using json = nlohmann::ordered_json;

std::int64_t Corpus::total_tokens() const
{
    std::int64_t n = 0;
    for (const auto& doc : documents)
        n += static_cast<std::int64_t>(doc.size());
    return n;
}

int Corpus::num_periods() const
{
    if (time_index.empty())
        return 0;
    return *std::max_element(time_index.begin(), time_index.end()) + 1;
}

void Corpus::validate() const
{
    if (documents.size() != doc_ids.size())
        throw SchemaError("corpus: document count does not match id count");
    const int V = vocab_size();
    for (std::size_t d = 0; d < documents.size(); ++d) {
        if (documents[d].empty())
            throw SchemaError("corpus: document '" + doc_ids[d] + "' is empty");
        for (WordId w : documents[d])
            if (w < 0 || w >= V)
                throw SchemaError("corpus: document '" + doc_ids[d] + "' has word id " +
                                  std::to_string(w) + " outside the vocabulary");
    }
    if (!time_index.empty()) {
        if (time_index.size() != documents.size())
            throw SchemaError("corpus: time index length does not match document count");
        std::set<int> seen(time_index.begin(), time_index.end());
        if (*seen.begin() < 0)
            throw SchemaError("corpus: negative time index");
        int expect = 0;
        for (int t : seen)
            if (t != expect++)
                throw SchemaError("corpus: non-contiguous time index (period " +
                                  std::to_string(expect - 1) + " has no documents)");
    }
    if (covariates.cols() > 0) {
        if (covariates.rows() != num_docs())
            throw SchemaError("corpus: covariate rows do not match document count");
        for (int d = 0; d < num_docs(); ++d)
            if (covariates(d, 0) != 1.0)
                throw SchemaError("corpus: covariate column 0 must be the intercept (all 1)");
        if (!covariates.allFinite())
            throw SchemaError("corpus: non-finite covariate value");
    }
}

Corpus Corpus::from_ids(std::vector<std::vector<WordId>> docs, int vocab_size)
{
    Corpus c;
    c.documents = std::move(docs);
    for (int v = 0; v < vocab_size; ++v)
        c.vocab.push_back("w" + std::to_string(v));
    for (std::size_t d = 0; d < c.documents.size(); ++d)
        c.doc_ids.push_back("d" + std::to_string(d));
    return c;
}

namespace {

std::string where(int lineno) { return "line " + std::to_string(lineno) + ": "; }

} // namespace

Corpus parse_corpus(std::istream& in, const CorpusSchema& schema)
{
    Corpus c;
    std::unordered_map<std::string, WordId> ids;
    std::vector<std::string> names = schema.covariate_names;
    std::vector<std::vector<double>> cov_rows;
    int with_time = 0, with_cov = 0;

    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ConfigError(where(lineno) + "malformed JSON: " + e.what());
        }
        if (!obj.is_object() || !obj.contains("id") || !obj["id"].is_string() ||
            !obj.contains("tokens") || !obj["tokens"].is_array())
            throw ConfigError(where(lineno) +
                              "expected an object with string \"id\" and array \"tokens\"");
        const std::string id = obj["id"].get<std::string>();
        std::vector<WordId> doc;
        for (const auto& tok : obj["tokens"]) {
            if (!tok.is_string())
                throw ConfigError(where(lineno) + "tokens must be strings");
            const auto& s = tok.get_ref<const std::string&>();
            auto [it, inserted] = ids.emplace(s, static_cast<WordId>(c.vocab.size()));
            if (inserted)
                c.vocab.push_back(s);
            doc.push_back(it->second);
        }
        if (doc.empty())
            throw SchemaError(where(lineno) + "document '" + id + "' is empty");

        if (obj.contains("time")) {
            if (!obj["time"].is_number_integer())
                throw ConfigError(where(lineno) + "\"time\" must be an integer");
            c.time_index.push_back(obj["time"].get<int>());
            ++with_time;
        }
        if (obj.contains("covariates")) {
            const auto& cov = obj["covariates"];
            if (!cov.is_object())
                throw ConfigError(where(lineno) + "\"covariates\" must be an object");
            if (names.empty())
                for (const auto& [key, _] : cov.items())
                    names.push_back(key);
            if (cov.size() != names.size())
                throw SchemaError(where(lineno) + "ragged covariate row in document '" + id + "'");
            std::vector<double> row;
            for (const auto& name : names) {
                if (!cov.contains(name) || !cov[name].is_number())
                    throw SchemaError(where(lineno) + "document '" + id +
                                      "' lacks numeric covariate '" + name + "'");
                row.push_back(cov[name].get<double>());
            }
            cov_rows.push_back(std::move(row));
            ++with_cov;
        }
        c.documents.push_back(std::move(doc));
        c.doc_ids.push_back(id);
    }

    const int D = c.num_docs();
    if (D == 0)
        throw SchemaError("corpus has no documents");
    if (with_time != 0 && with_time != D)
        throw SchemaError("corpus: \"time\" present on some documents but not all");
    if (with_cov != 0 && with_cov != D)
        throw SchemaError("corpus: ragged covariates (present on some documents only)");
    if (schema.require_time && with_time == 0)
        throw SchemaError("corpus: a time index is required");
    if (schema.require_covariates && with_cov == 0)
        throw SchemaError("corpus: covariates are required");

    if (with_cov > 0) {
        const int M = static_cast<int>(names.size()) + 1;
        c.covariates.resize(D, M);
        c.covariate_names = {"(Intercept)"};
        c.covariate_names.insert(c.covariate_names.end(), names.begin(), names.end());
        for (int d = 0; d < D; ++d) {
            c.covariates(d, 0) = 1.0;
            for (int m = 1; m < M; ++m)
                c.covariates(d, m) = cov_rows[d][m - 1];
        }
    }
    c.validate();
    return c;
}

Corpus load_corpus(const std::filesystem::path& path, const CorpusSchema& schema)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open corpus file " + path.string());
    return parse_corpus(in, schema);
}

void save_corpus(const Corpus& corpus, std::ostream& out)
{
    for (int d = 0; d < corpus.num_docs(); ++d) {
        json obj;
        obj["id"] = corpus.doc_ids[d];
        json tokens = json::array();
        for (WordId w : corpus.documents[d])
            tokens.push_back(corpus.vocab[w]);
        obj["tokens"] = std::move(tokens);
        if (corpus.has_time())
            obj["time"] = corpus.time_index[d];
        if (corpus.has_covariates()) {
            json cov = json::object();
            for (int m = 1; m < corpus.covariates.cols(); ++m)
                cov[corpus.covariate_names[m]] = corpus.covariates(d, m);
            obj["covariates"] = std::move(cov);
        }
        out << obj.dump() << '\n';
    }
}

std::vector<std::string> KeywordDictionary::topic_labels() const
{
    std::vector<std::string> labels;
    for (const auto& t : topics)
        labels.push_back(t.label);
    for (int j = 1; j <= k_extra; ++j)
        labels.push_back("Other_" + std::to_string(j));
    return labels;
}

KeywordDictionary parse_keywords(std::istream& in, const Corpus& corpus, int k_extra)
{
    if (k_extra < 0)
        throw ConfigError("k_extra must be non-negative");

    std::set<std::string> labels_seen;
    std::string duplicate;
    const json::parser_callback_t watch_keys = [&](int depth, json::parse_event_t event,
                                                   json& parsed) {
        if (event == json::parse_event_t::key && depth == 1) {
            const auto& key = parsed.get_ref<const std::string&>();
            if (!labels_seen.insert(key).second && duplicate.empty())
                duplicate = key;
        }
        return true;
    };
    json root;
    try {
        root = json::parse(in, watch_keys);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("keyword file: malformed JSON: ") + e.what());
    }
    if (!duplicate.empty())
        throw ConfigError("keyword file: duplicate topic label '" + duplicate + "'");
    if (!root.is_object())
        throw ConfigError("keyword file: expected an object {label: [words...]}");

    std::unordered_map<std::string, WordId> ids;
    for (int v = 0; v < corpus.vocab_size(); ++v)
        ids.emplace(corpus.vocab[v], v);

    KeywordDictionary dict;
    dict.k_extra = k_extra;
    for (const auto& [label, words] : root.items()) {
        if (!words.is_array())
            throw ConfigError("keyword file: topic '" + label + "' must map to a word list");
        KeywordTopic topic{label, {}};
        for (const auto& w : words) {
            if (!w.is_string())
                throw ConfigError("keyword file: topic '" + label + "' has a non-string keyword");
            const auto& s = w.get_ref<const std::string&>();
            auto it = ids.find(s);
            if (it == ids.end()) {
                dict.warnings.push_back("keyword '" + s + "' of topic '" + label +
                                        "' does not occur in the corpus; dropped");
                continue;
            }
            topic.keywords.push_back(it->second);
        }
        std::sort(topic.keywords.begin(), topic.keywords.end());
        topic.keywords.erase(std::unique(topic.keywords.begin(), topic.keywords.end()),
                             topic.keywords.end());
        if (topic.keywords.empty())
            throw ConfigError("keyword file: topic '" + label +
                              "' has no keywords present in the corpus");
        dict.topics.push_back(std::move(topic));
    }
    if (dict.num_topics() == 0)
        throw ConfigError("model needs at least one topic (no keyword topics and k_extra = 0)");
    return dict;
}

KeywordDictionary load_keywords(const std::filesystem::path& path, const Corpus& corpus,
                                int k_extra)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open keyword file " + path.string());
    return parse_keywords(in, corpus, k_extra);
}

TermWeights compute_term_weights(const Corpus& corpus, bool enabled)
{
    const int V = corpus.vocab_size();
    TermWeights w;
    w.enabled = enabled;
    w.counts.assign(V, 0);
    for (const auto& doc : corpus.documents)
        for (WordId v : doc)
            ++w.counts[v];
    w.total_tokens = corpus.total_tokens();
    if (w.total_tokens == 0 && enabled)
        throw SchemaError("term weights: corpus has no tokens");

    w.m.assign(V, 1.0);
    if (enabled)
        for (int v = 0; v < V; ++v)
            if (w.counts[v] > 0)
                w.m[v] = -std::log2(static_cast<double>(w.counts[v]) /
                                    static_cast<double>(w.total_tokens));

    // Weighted totals are bounded by N * log2(V); keep them inside int64.
    double mass = 0.0;
    w.units.resize(V);
    for (int v = 0; v < V; ++v) {
        w.units[v] = std::llround(w.m[v] / TermWeights::kUnit);
        mass += static_cast<double>(w.counts[v]) * static_cast<double>(w.units[v]);
    }
    if (mass > 0x1p62)
        throw SchemaError("term weights: corpus too large for fixed-point count tables");
    return w;
}

void write_weights_csv(const Corpus& corpus, const TermWeights& weights, std::ostream& out)
{
    out << "word,count,weight\n";
    for (int v = 0; v < corpus.vocab_size(); ++v)
        out << csv_field(corpus.vocab[v]) << ',' << weights.counts[v] << ','
            << format_double(weights.m[v]) << '\n';
}

KeywordDiagnostics keyword_diagnostics(const Corpus& corpus, const KeywordDictionary& dict)
{
    const int D = corpus.num_docs();
    const int Kt = dict.keyword_topics();
    const int V = corpus.vocab_size();

    std::vector<char> any_keyword(V, 0);
    for (const auto& t : dict.topics)
        for (WordId v : t.keywords)
            any_keyword[v] = 1;

    KeywordDiagnostics diag;
    diag.keyword_proportion.resize(D);
    diag.unique_keywords.assign(D, std::vector<int>(Kt, 0));
    diag.frequency.resize(Kt);

    std::vector<std::int64_t> counts(V, 0);
    for (const auto& doc : corpus.documents)
        for (WordId v : doc)
            ++counts[v];
    for (int k = 0; k < Kt; ++k)
        for (WordId v : dict.topics[k].keywords)
            diag.frequency[k].push_back(counts[v]);

    std::vector<char> present(V, 0);
    for (int d = 0; d < D; ++d) {
        const auto& doc = corpus.documents[d];
        int hits = 0;
        for (WordId v : doc) {
            hits += any_keyword[v];
            present[v] = 1;
        }
        diag.keyword_proportion[d] = static_cast<double>(hits) / static_cast<double>(doc.size());
        for (int k = 0; k < Kt; ++k)
            for (WordId v : dict.topics[k].keywords)
                diag.unique_keywords[d][k] += present[v];
        for (WordId v : doc)
            present[v] = 0;
    }
    return diag;
}

void write_keyword_diagnostics_csv(const Corpus& corpus, const KeywordDictionary& dict,
                                   const KeywordDiagnostics& diag, std::ostream& doc_out,
                                   std::ostream& keyword_out)
{
    doc_out << "doc_id,keyword_proportion";
    for (const auto& t : dict.topics)
        doc_out << ',' << csv_field(t.label);
    doc_out << '\n';
    for (int d = 0; d < corpus.num_docs(); ++d) {
        doc_out << csv_field(corpus.doc_ids[d]) << ',' << format_double(diag.keyword_proportion[d]);
        for (int c : diag.unique_keywords[d])
            doc_out << ',' << c;
        doc_out << '\n';
    }
    keyword_out << "topic,keyword,frequency\n";
    for (int k = 0; k < dict.keyword_topics(); ++k)
        for (std::size_t j = 0; j < dict.topics[k].keywords.size(); ++j)
            keyword_out << csv_field(dict.topics[k].label) << ','
                        << csv_field(corpus.vocab[dict.topics[k].keywords[j]]) << ','
                        << diag.frequency[k][j] << '\n';
}

} // namespace keyatm
