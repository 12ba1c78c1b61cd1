#pragma once
// Training-example construction: gold reasoning paths, augmented paths,
// per-step retriever negatives (TF-IDF and hyperlink based), distantly
// supervised reader examples and distorted reader negatives.

#include <optional>
#include <string>
#include <vector>

#include "pathqa/corpus.hpp"
#include "pathqa/graph.hpp"
#include "pathqa/reader.hpp"
#include "pathqa/retriever.hpp"
#include "pathqa/tfidf.hpp"

namespace pathqa {

struct TrainingQuestion {
    std::string qid;
    std::string question;
    std::vector<std::string> answers;
    std::vector<std::string> gold_para_ids;        // 1 (single-hop) or 2 (multi-hop)
    std::optional<std::string> answer_bearing_id;  // which gold paragraph holds the answer
    AnswerType answer_type = AnswerType::kSpan;
    std::vector<std::string> pool_ids;             // optional closed-pool candidates
};

std::vector<TrainingQuestion> load_questions(const std::string& path);
void write_questions(const std::vector<TrainingQuestion>& questions, const std::string& path);

// Whole-token, case-insensitive, punctuation-stripped answer matching.
// Returns the earliest-starting occurrence of any answer as token offsets.
std::optional<std::pair<size_t, size_t>> find_answer_span(
    const std::vector<std::string>& text_tokens, const std::vector<std::string>& answers);
bool contains_answer(const std::string& text, const std::vector<std::string>& answers);

// Gold path derivation: single-hop [p]; multi-hop orders the answer-bearing
// paragraph last. Ties (answer in both) place the paragraph linking to the
// other first. The terminal end-of-evidence is implicit.
std::vector<uint32_t> derive_gold_path(const TrainingQuestion& tq, const Corpus& corpus,
                                       const WikiGraph& graph);

// p_r: the highest-ranked TF-IDF candidate with an edge into the first gold
// paragraph that is not already on the path.
std::optional<uint32_t> augment_path(const std::vector<uint32_t>& gold_nodes,
                                     const std::vector<ScoredDoc>& tfidf_ranked,
                                     const WikiGraph& graph);

// Per-step negative sets for the gold path (size |gold| + 1, the terminal
// step included). kEoeNode marks the end-of-evidence negative, present for
// every step before the terminal one. Single-hop uses TF-IDF negatives only;
// multi-hop mixes hyperlink negatives (answer-bearing paragraphs excluded)
// topped up with TF-IDF ones.
std::vector<std::vector<uint32_t>> mine_negatives(const TrainingQuestion& tq,
                                                  const std::vector<uint32_t>& gold_nodes,
                                                  const SparseIndex& index,
                                                  const WikiGraph& graph, const Corpus& corpus,
                                                  size_t n,
                                                  std::optional<uint32_t> excluded_pr);

// At most one distantly supervised example: the first TF-IDF-ranked
// non-gold paragraph containing an answer string, as a length-1 gold path.
std::optional<ReaderExample> build_distant_example(const TrainingQuestion& tq,
                                                   const Corpus& corpus,
                                                   const SparseIndex& index,
                                                   const std::vector<uint32_t>& gold_nodes,
                                                   size_t scan_limit = 50);

// Distorted reader negative: the answer-bearing gold paragraph swapped for
// the best TF-IDF paragraph lacking every answer string.
std::optional<ReaderExample> build_reader_negative(const TrainingQuestion& tq,
                                                   const Corpus& corpus,
                                                   const SparseIndex& index,
                                                   const std::vector<uint32_t>& gold_nodes,
                                                   size_t pool_limit = 50);

struct SupervisionConfig {
    size_t negative_count = 50;  // per-step cap, end-of-evidence included
    size_t tfidf_pool = 100;     // candidate pool for p_r mining
    bool augment = true;
    bool distant = true;
    bool reader_negatives = true;
};

struct BuiltExamples {
    std::vector<RetrieverExampleData> retriever;
    std::vector<ReaderExample> reader;
    size_t questions_used = 0;
    size_t questions_skipped = 0;
    std::vector<std::string> warnings;
};

BuiltExamples build_examples(const std::vector<TrainingQuestion>& questions,
                             const Corpus& corpus, const WikiGraph& graph,
                             const SparseIndex& index, const SupervisionConfig& config);

// Debug/inspection dump of built examples, one JSON object per line.
void write_examples_jsonl(const BuiltExamples& examples, const Corpus& corpus,
                          const std::string& path);

}  // namespace pathqa
