#include "pathqa/tfidf.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "pathqa/common.hpp"
#include "pathqa/text.hpp"

namespace pathqa {

namespace {

// Sorted (feature, tf) pairs for one text.
std::vector<std::pair<uint32_t, uint32_t>> term_counts(const std::string& text,
                                                       const TfidfConfig& config) {
    auto tokens = tokenize(text, /*drop_stopwords=*/true);
    auto feats = ngram_features(tokens, config.bucket_count, config.ngram_order);
    std::sort(feats.begin(), feats.end());
    std::vector<std::pair<uint32_t, uint32_t>> counts;
    for (size_t i = 0; i < feats.size();) {
        size_t j = i;
        while (j < feats.size() && feats[j] == feats[i]) ++j;
        counts.emplace_back(feats[i], static_cast<uint32_t>(j - i));
        i = j;
    }
    return counts;
}

}  // namespace

SparseIndex SparseIndex::build_from_texts(std::vector<std::string> ids,
                                          const std::vector<std::string>& texts,
                                          const TfidfConfig& config) {
    if (!is_power_of_two(config.bucket_count))
        throw UsageError("bucket_count must be a power of two");
    if (ids.empty()) throw DataError("cannot build an index over an empty corpus");

    SparseIndex index;
    index.config_ = config;
    index.doc_ids_ = std::move(ids);
    const size_t n = index.doc_ids_.size();

    std::vector<std::vector<std::pair<uint32_t, uint32_t>>> per_doc(n);
    std::map<uint32_t, uint32_t> df;
    for (size_t d = 0; d < n; ++d) {
        per_doc[d] = term_counts(texts[d], config);
        for (const auto& [feature, tf] : per_doc[d]) ++df[feature];
    }
    index.doc_freq_.assign(df.begin(), df.end());

    index.row_offsets_.resize(n + 1, 0);
    for (size_t d = 0; d < n; ++d) {
        for (const auto& [feature, tf] : per_doc[d]) {
            double w = std::log(1.0 + tf) * index.idf(feature);
            index.features_.push_back(feature);
            index.weights_.push_back(w);
        }
        index.row_offsets_[d + 1] = index.features_.size();
    }
    index.rebuild_postings();
    return index;
}

SparseIndex SparseIndex::build(const Corpus& corpus, const TfidfConfig& config) {
    std::vector<std::string> ids;
    std::vector<std::string> texts;
    ids.reserve(corpus.size());
    texts.reserve(corpus.size());
    for (const Paragraph& p : corpus.paragraphs()) {
        ids.push_back(p.para_id);
        texts.push_back(p.text);
    }
    return build_from_texts(std::move(ids), texts, config);
}

SparseIndex SparseIndex::build_articles(const Corpus& corpus, const TfidfConfig& config) {
    std::map<std::string, std::string> concatenated;
    for (const Paragraph& p : corpus.paragraphs()) {
        std::string& text = concatenated[p.article_title];
        // Paragraphs arrive sorted by para_id; join in para_index order.
        (void)text;
    }
    for (auto& [title, text] : concatenated) {
        const auto* nodes = corpus.article(title);
        for (uint32_t node : *nodes) {
            if (!text.empty()) text.push_back(' ');
            text.append(corpus.at(node).text);
        }
    }
    std::vector<std::string> ids;
    std::vector<std::string> texts;
    for (auto& [title, text] : concatenated) {
        ids.push_back(title);
        texts.push_back(std::move(text));
    }
    return build_from_texts(std::move(ids), texts, config);
}

uint32_t SparseIndex::doc_freq(uint32_t feature) const {
    auto it = std::lower_bound(doc_freq_.begin(), doc_freq_.end(),
                               std::make_pair(feature, 0u));
    if (it == doc_freq_.end() || it->first != feature) return 0;
    return it->second;
}

double SparseIndex::idf(uint32_t feature) const {
    uint32_t nf = doc_freq(feature);
    if (nf == 0) return 0.0;
    double n = static_cast<double>(doc_ids_.size());
    double v = std::log((n - nf + 0.5) / (nf + 0.5));
    return v > 0.0 ? v : 0.0;
}

std::vector<std::pair<uint32_t, double>> SparseIndex::vectorize(const std::string& text) const {
    std::vector<std::pair<uint32_t, double>> vec;
    for (const auto& [feature, tf] : term_counts(text, config_)) {
        double w = std::log(1.0 + tf) * idf(feature);
        if (w != 0.0) vec.emplace_back(feature, w);
    }
    return vec;
}

double SparseIndex::stored_weight(uint32_t doc, uint32_t feature) const {
    for (uint64_t k = row_offsets_[doc]; k < row_offsets_[doc + 1]; ++k)
        if (features_[k] == feature) return weights_[k];
    return 0.0;
}

std::vector<ScoredDoc> SparseIndex::top_f(const std::string& query_text, size_t f) const {
    std::vector<double> scores(doc_ids_.size(), 0.0);
    std::vector<uint32_t> touched;
    for (const auto& [feature, qw] : vectorize(query_text)) {
        auto it = postings_.find(feature);
        if (it == postings_.end()) continue;
        for (const auto& [doc, dw] : it->second) {
            if (scores[doc] == 0.0) touched.push_back(doc);
            scores[doc] += qw * dw;
        }
    }
    std::vector<ScoredDoc> hits;
    hits.reserve(touched.size());
    for (uint32_t doc : touched)
        if (scores[doc] > 0.0) hits.push_back({doc, scores[doc]});
    std::sort(hits.begin(), hits.end(), [&](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return doc_ids_[a.doc] < doc_ids_[b.doc];
    });
    if (hits.size() > f) hits.resize(f);
    return hits;
}

std::vector<ScoredDoc> two_stage_top_f(const SparseIndex& article_index,
                                       const SparseIndex& paragraph_index,
                                       const Corpus& corpus, const std::string& query,
                                       size_t f, size_t articles) {
    auto top_articles = article_index.top_f(query, articles);

    std::vector<double> para_scores(paragraph_index.num_docs(), 0.0);
    for (const auto& hit : paragraph_index.top_f(query, paragraph_index.num_docs()))
        para_scores[hit.doc] = hit.score;

    struct PoolEntry {
        uint32_t node;
        double score;
        size_t article_rank;
    };
    std::vector<PoolEntry> pool;
    for (size_t rank = 0; rank < top_articles.size(); ++rank) {
        const std::string& title = article_index.doc_id(top_articles[rank].doc);
        const auto* nodes = corpus.article(title);
        if (!nodes) continue;
        for (uint32_t node : *nodes) pool.push_back({node, para_scores[node], rank});
    }
    std::sort(pool.begin(), pool.end(), [&](const PoolEntry& a, const PoolEntry& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.article_rank != b.article_rank) return a.article_rank < b.article_rank;
        return corpus.at(a.node).para_id < corpus.at(b.node).para_id;
    });
    if (pool.size() > f) pool.resize(f);

    std::vector<ScoredDoc> result;
    result.reserve(pool.size());
    for (const PoolEntry& e : pool) result.push_back({e.node, e.score});
    return result;
}

void SparseIndex::rebuild_postings() {
    postings_.clear();
    for (uint32_t d = 0; d < doc_ids_.size(); ++d)
        for (uint64_t k = row_offsets_[d]; k < row_offsets_[d + 1]; ++k)
            if (weights_[k] != 0.0) postings_[features_[k]].emplace_back(d, weights_[k]);
}

void SparseIndex::save(const std::string& path) const {
    BinaryWriter w(path);
    w.magic("TFIX1");
    w.u64(config_.bucket_count);
    w.u32(static_cast<uint32_t>(config_.ngram_order));
    w.u64(doc_ids_.size());
    for (const auto& id : doc_ids_) w.str(id);
    w.u64(doc_freq_.size());
    for (const auto& [feature, df] : doc_freq_) {
        w.u32(feature);
        w.u32(df);
    }
    for (uint64_t off : row_offsets_) w.u64(off);
    for (size_t k = 0; k < features_.size(); ++k) {
        w.u32(features_[k]);
        w.f64(weights_[k]);
    }
    w.close();
}

SparseIndex SparseIndex::load(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic("TFIX1");
    SparseIndex index;
    index.config_.bucket_count = static_cast<uint32_t>(r.u64());
    index.config_.ngram_order = static_cast<int>(r.u32());
    uint64_t n = r.u64();
    index.doc_ids_.resize(n);
    for (uint64_t d = 0; d < n; ++d) index.doc_ids_[d] = r.str();
    uint64_t df_count = r.u64();
    index.doc_freq_.resize(df_count);
    for (auto& [feature, df] : index.doc_freq_) {
        feature = r.u32();
        df = r.u32();
    }
    index.row_offsets_.resize(n + 1);
    for (auto& off : index.row_offsets_) off = r.u64();
    uint64_t nnz = index.row_offsets_.back();
    index.features_.resize(nnz);
    index.weights_.resize(nnz);
    for (uint64_t k = 0; k < nnz; ++k) {
        index.features_[k] = r.u32();
        index.weights_[k] = r.f64();
    }
    index.rebuild_postings();
    return index;
}

bool SparseIndex::operator==(const SparseIndex& other) const {
    return config_.bucket_count == other.config_.bucket_count &&
           config_.ngram_order == other.config_.ngram_order && doc_ids_ == other.doc_ids_ &&
           doc_freq_ == other.doc_freq_ && row_offsets_ == other.row_offsets_ &&
           features_ == other.features_ && weights_ == other.weights_;
}

}  // namespace pathqa
