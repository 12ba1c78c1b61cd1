#pragma once
// Synthetic multi-hop corpus and question generator. The world has two
// article classes:
//   - entity articles ("ent..."): a single introductory paragraph naming the
//     entity, its domain terms, and a bridge mention of one record article
//     (hyperlinked), plus metadata-only distractor links;
//   - record articles ("rec..."): `paragraphs_per_article` paragraphs whose
//     intro holds a unique answer token and a numeric attribute.
// Two-hop questions name an entity whose intro links to the record holding
// the answer; with bridge_overlap=false the answer paragraph shares zero
// content terms with the question, so term-based retrieval cannot reach it.

#include <cstdint>
#include <string>
#include <vector>

#include "pathqa/corpus.hpp"
#include "pathqa/supervision.hpp"

namespace pathqa {

struct SyntheticConfig {
    size_t num_articles = 1667;
    size_t paragraphs_per_article = 2;  // record articles; entity articles are intro-only
    size_t vocabulary = 600;            // filler vocabulary size
    size_t num_questions = 1000;
    double frac_one_hop = 0.0;
    double frac_two_hop = 1.0;
    double frac_comparison = 0.0;
    bool bridge_overlap = false;  // true adds the bridge entity to the question
    uint64_t seed = 1;
};

struct SyntheticData {
    Corpus corpus;
    std::vector<TrainingQuestion> questions;
};

// Deterministic per seed. Throws DataError when the configuration cannot
// guarantee the structural claims (vocabulary too small, not enough articles)
// or when the generation-time answerability check fails.
SyntheticData gen_synthetic(const SyntheticConfig& config);

// Writes corpus and question files for the CLI pipeline.
void gen_synthetic_files(const SyntheticConfig& config, const std::string& corpus_path,
                         const std::string& questions_path);

}  // namespace pathqa
