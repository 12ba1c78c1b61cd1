#pragma once
// Comparator retrieval strategies: plain TF-IDF top-2, BERT-style re-ranking
// of the TF-IDF pool with a frozen-state scorer, and its one-hop link
// expansion. Each returns a two-paragraph pseudo-path.

#include <string>
#include <vector>

#include "pathqa/corpus.hpp"
#include "pathqa/graph.hpp"
#include "pathqa/retriever.hpp"
#include "pathqa/tfidf.hpp"

namespace pathqa {

std::vector<uint32_t> baseline_tfidf_top2(const SparseIndex& index, const std::string& question);

// Scores candidates independently with the encoder + sigmoid head at the
// frozen initial state (a no-recurrence model trained with the same loss).
std::vector<uint32_t> baseline_rerank(const RetrieverModel& model, const Corpus& corpus,
                                      const SparseIndex& index, const std::string& question,
                                      size_t f);

// Same scorer over the TF-IDF pool plus paragraphs linked from it.
std::vector<uint32_t> baseline_rerank_2hop(const RetrieverModel& model, const Corpus& corpus,
                                           const SparseIndex& index, const WikiGraph& graph,
                                           const std::string& question, size_t f);

}  // namespace pathqa
