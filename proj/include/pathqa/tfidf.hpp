#pragma once
// Bigram-hashed TF-IDF retrieval: the initial candidate source and the
// negative-mining pool. Weight(f, d) = log(1 + tf) * idf(f) with
// idf(f) = max(0, log((N - N_f + 0.5) / (N_f + 0.5))).

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "pathqa/corpus.hpp"

namespace pathqa {

struct TfidfConfig {
    uint32_t bucket_count = 1u << 24;  // power of two
    int ngram_order = 2;               // unigrams + bigrams
};

struct ScoredDoc {
    uint32_t doc = 0;  // node index for paragraph indexes; table position otherwise
    double score = 0.0;
};

class SparseIndex {
public:
    static SparseIndex build(const Corpus& corpus, const TfidfConfig& config);

    // Index over whole articles (per-article concatenated text, in para_index
    // order). Doc ids are article titles.
    static SparseIndex build_articles(const Corpus& corpus, const TfidfConfig& config);

    // Query scored by dot product against stored vectors. Top-F descending,
    // ties ascending by doc id; zero-score docs are never returned.
    std::vector<ScoredDoc> top_f(const std::string& query_text, size_t f) const;

    // Query vector built identically to document vectors.
    std::vector<std::pair<uint32_t, double>> vectorize(const std::string& text) const;

    double stored_weight(uint32_t doc, uint32_t feature) const;

    size_t num_docs() const { return doc_ids_.size(); }
    uint32_t bucket_count() const { return config_.bucket_count; }
    const TfidfConfig& config() const { return config_; }
    const std::string& doc_id(uint32_t doc) const { return doc_ids_[doc]; }
    uint32_t doc_freq(uint32_t feature) const;
    double idf(uint32_t feature) const;

    // "TFIX1" container; round-trips bit-exactly.
    void save(const std::string& path) const;
    static SparseIndex load(const std::string& path);

    bool operator==(const SparseIndex& other) const;

private:
    SparseIndex() = default;
    static SparseIndex build_from_texts(std::vector<std::string> ids,
                                        const std::vector<std::string>& texts,
                                        const TfidfConfig& config);

    TfidfConfig config_;
    std::vector<std::string> doc_ids_;
    // doc_freq as sorted (feature, df) pairs for deterministic serialization.
    std::vector<std::pair<uint32_t, uint32_t>> doc_freq_;
    // CSR: per-doc sorted (feature, weight) runs.
    std::vector<uint64_t> row_offsets_;
    std::vector<uint32_t> features_;
    std::vector<double> weights_;
    // Inverted postings derived after build: feature -> (doc, weight).
    std::unordered_map<uint32_t, std::vector<std::pair<uint32_t, double>>> postings_;

    void rebuild_postings();
};

// Appendix-style two-stage retrieval: top `articles` by the article index,
// then rank the pooled paragraphs with the paragraph index. Pool members the
// paragraph pass scores at zero still qualify, ordered after scored ones by
// (article rank, para_id).
std::vector<ScoredDoc> two_stage_top_f(const SparseIndex& article_index,
                                       const SparseIndex& paragraph_index,
                                       const Corpus& corpus, const std::string& query,
                                       size_t f, size_t articles = 50);

}  // namespace pathqa
