#pragma once
// Retrieval and answer metrics: Answer Recall, Paragraph Recall, Paragraph
// Exact Match, and SQuAD-convention answer F1/EM.

#include <map>
#include <string>
#include <vector>

#include "pathqa/corpus.hpp"
#include "pathqa/supervision.hpp"

namespace pathqa {

struct RetrievalMetrics {
    double answer_recall = 0.0;    // AR
    double paragraph_recall = 0.0; // PR
    double paragraph_em = 0.0;     // P EM
    size_t num_questions = 0;
    std::map<size_t, size_t> path_length_histogram;
    double avg_path_length = 0.0;
};

struct AnswerMetrics {
    double f1 = 0.0;
    double em = 0.0;
    size_t num_questions = 0;
};

// One predicted paragraph id set per question, keyed by qid.
using PredictedParagraphs = std::map<std::string, std::vector<std::string>>;
// One predicted answer string per question, keyed by qid.
using PredictedAnswers = std::map<std::string, std::string>;

// Per-question binary indicators averaged over the question set. Every gold
// qid must be present among the predictions.
RetrievalMetrics eval_retrieval(const PredictedParagraphs& predicted,
                                const std::vector<TrainingQuestion>& gold,
                                const Corpus& corpus);

AnswerMetrics eval_answers(const PredictedAnswers& predicted,
                           const std::vector<TrainingQuestion>& gold);

// SQuAD convention: lowercase, strip punctuation and articles, split on
// whitespace.
std::vector<std::string> normalize_answer(const std::string& text);
double token_f1(const std::string& prediction, const std::string& gold);
bool exact_match(const std::string& prediction, const std::string& gold);

}  // namespace pathqa
