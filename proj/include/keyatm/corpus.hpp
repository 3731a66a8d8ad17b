#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace keyatm {

using WordId = std::int32_t;

struct CorpusSchema {
    // Covariates to read from each document's "covariates" object, in this
    // order. Empty means: use the keys of the first document that has any.
    std::vector<std::string> covariate_names;
    bool require_time = false;
    bool require_covariates = false;
};

struct Corpus {
    std::vector<std::vector<WordId>> documents;
    std::vector<std::string> doc_ids;
    std::vector<std::string> vocab;
    // t[d] in [0, T); empty when the corpus carries no time index
    std::vector<int> time_index;
    // D x M, column 0 is the intercept. Zero columns when absent.
    Eigen::MatrixXd covariates;
    std::vector<std::string> covariate_names;

    int num_docs() const { return static_cast<int>(documents.size()); }
    int vocab_size() const { return static_cast<int>(vocab.size()); }
    std::int64_t total_tokens() const;
    bool has_time() const { return !time_index.empty(); }
    int num_periods() const;
    bool has_covariates() const { return covariates.cols() > 0; }

    // Throws SchemaError naming the first violated invariant.
    void validate() const;

    // Documents given directly as word ids; vocab entries are "w<id>".
    static Corpus from_ids(std::vector<std::vector<WordId>> docs, int vocab_size);
};

Corpus parse_corpus(std::istream& in, const CorpusSchema& schema = {});
Corpus load_corpus(const std::filesystem::path& path, const CorpusSchema& schema = {});
// JSON Lines in the same format load_corpus reads.
void save_corpus(const Corpus& corpus, std::ostream& out);

struct KeywordTopic {
    std::string label;
    std::vector<WordId> keywords; // sorted, unique
};

struct KeywordDictionary {
    std::vector<KeywordTopic> topics;
    int k_extra = 0;
    std::vector<std::string> warnings;

    int keyword_topics() const { return static_cast<int>(topics.size()); }
    int num_topics() const { return keyword_topics() + k_extra; }
    // Keyword topic labels followed by "Other_1", "Other_2", ...
    std::vector<std::string> topic_labels() const;
};

KeywordDictionary parse_keywords(std::istream& in, const Corpus& corpus, int k_extra);
KeywordDictionary load_keywords(const std::filesystem::path& path, const Corpus& corpus,
                                int k_extra);

// Information-theoretic term weights m(v) = -log2(count(v) / total).
struct TermWeights {
    // Count tables work in fixed point with this resolution.
    static constexpr double kUnit = 0x1p-32;

    std::vector<double> m;
    std::vector<std::int64_t> counts;
    std::vector<std::int64_t> units; // round(m(v) / kUnit)
    std::int64_t total_tokens = 0;
    bool enabled = true;

    // The weight actually applied by the count tables.
    double effective(WordId v) const { return static_cast<double>(units[v]) * kUnit; }
};

TermWeights compute_term_weights(const Corpus& corpus, bool enabled);
void write_weights_csv(const Corpus& corpus, const TermWeights& weights, std::ostream& out);

struct KeywordDiagnostics {
    std::vector<double> keyword_proportion;           // per document
    std::vector<std::vector<int>> unique_keywords;     // D x K~
    std::vector<std::vector<std::int64_t>> frequency;  // per topic, aligned with its keywords
};

KeywordDiagnostics keyword_diagnostics(const Corpus& corpus, const KeywordDictionary& dict);
void write_keyword_diagnostics_csv(const Corpus& corpus, const KeywordDictionary& dict,
                                   const KeywordDiagnostics& diag, std::ostream& doc_out,
                                   std::ostream& keyword_out);

} // namespace keyatm
