#pragma once
// Experiment orchestration: trains the models when needed, runs the enabled
// retrieval strategies and ablations over an evaluation set, and assembles a
// metrics report (JSON and an aligned text table).

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pathqa/baselines.hpp"
#include "pathqa/metrics.hpp"
#include "pathqa/reader.hpp"
#include "pathqa/retriever.hpp"
#include "pathqa/supervision.hpp"

namespace pathqa {

struct ExperimentConfig {
    // Strategy names: adaptive, greedy, fixed:<L>, norec, tfidf_top2, rerank,
    // rerank_2hop. The reader answers over the strategies that produce beam
    // paths; "adaptive_noreank" additionally reports the no-re-ranking reader
    // ablation on the adaptive paths.
    std::vector<std::string> strategies{"adaptive", "greedy", "norec", "tfidf_top2",
                                        "rerank", "rerank_2hop"};
    SearchConfig search;           // beam/F/K/max_len for learned strategies
    size_t rerank_pool = 20;       // F for the re-rank baselines
    bool no_rerank_ablation = true;
    bool union_top_b = false;      // score the union of top-B paths instead of top-1
    uint64_t seed = 13;
    size_t threads = 1;
};

struct StrategyResult {
    std::string name;
    RetrievalMetrics retrieval;
    std::optional<AnswerMetrics> answers;
    double avg_reader_path_length = 0.0;  // over reader-selected paths
    std::map<size_t, size_t> reader_length_histogram;
};

struct ExperimentReport {
    std::vector<StrategyResult> rows;
    std::string to_json() const;
    std::string to_table() const;
};

// Runs every enabled strategy with the given trained models. `rerank_model`
// backs the rerank baselines (a no-recurrence scorer); pass the main model to
// reuse it.
ExperimentReport run_experiment(const RetrieverModel& model,
                                const RetrieverModel& rerank_model, const ReaderModel& reader,
                                const Corpus& corpus, const WikiGraph& graph,
                                const SparseIndex& index,
                                const std::vector<TrainingQuestion>& eval_questions,
                                const ExperimentConfig& config);

// Retrieval + reading for a whole question set (question-level parallelism;
// results are position-stable and deterministic for any thread count).
struct PipelineOutput {
    std::vector<std::vector<ReasoningPath>> paths;   // per question
    std::vector<AnswerPrediction> predictions;       // per question
};

PipelineOutput run_pipeline(const RetrieverModel& model, const ReaderModel* reader,
                            const Corpus& corpus, const WikiGraph& graph,
                            const SparseIndex& index,
                            const std::vector<TrainingQuestion>& questions,
                            const SearchConfig& search, size_t threads);

}  // namespace pathqa
