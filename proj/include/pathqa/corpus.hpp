#pragma once
// Paragraph corpus: retrieval units plus the hyperlink annotations the graph
// is built from. Immutable after ingest; safe for concurrent readers.

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace pathqa {

struct Paragraph {
    std::string para_id;        // "<article_title>/<para_index>"
    std::string article_title;
    uint32_t para_index = 0;    // position within the article, from 0
    std::string text;
    std::vector<std::string> out_links;  // target article titles
    bool is_introductory = false;
};

class Corpus {
public:
    // Paragraphs end up sorted by para_id; node indices are positions in
    // that order and are the dense ids used throughout retrieval.
    static Corpus from_paragraphs(std::vector<Paragraph> paragraphs);

    size_t size() const { return paragraphs_.size(); }
    bool empty() const { return paragraphs_.empty(); }
    const Paragraph& at(uint32_t node) const { return paragraphs_[node]; }
    const std::vector<Paragraph>& paragraphs() const { return paragraphs_; }

    std::optional<uint32_t> find(const std::string& para_id) const;
    uint32_t require(const std::string& para_id) const;  // throws DataError

    // All paragraph nodes of an article, sorted by para_index. Titles are
    // compared byte-exact (inputs are expected NFC-normalized).
    const std::vector<uint32_t>* article(const std::string& title) const;

    // Hyperlink targets naming articles absent from the corpus.
    const std::vector<std::string>& dangling_links() const { return dangling_links_; }

private:
    std::vector<Paragraph> paragraphs_;
    std::unordered_map<std::string, uint32_t> by_id_;
    std::unordered_map<std::string, std::vector<uint32_t>> by_article_;
    std::vector<std::string> dangling_links_;
};

// One JSON object per line:
// {"id","title","para_idx","text","links","is_intro"}.
Corpus ingest_corpus(const std::string& path);
Corpus parse_corpus_jsonl(const std::string& content, const std::string& origin);
void write_corpus_jsonl(const Corpus& corpus, const std::string& path);

}  // namespace pathqa
