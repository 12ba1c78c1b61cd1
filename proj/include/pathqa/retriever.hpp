#pragma once
// Graph-based recurrent retriever: a norm-controlled RNN scores candidate
// paragraphs step by step; beam search over the paragraph graph assembles
// reasoning paths that terminate on an end-of-evidence selection.

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "pathqa/corpus.hpp"
#include "pathqa/encoder.hpp"
#include "pathqa/graph.hpp"
#include "pathqa/params.hpp"
#include "pathqa/tensor.hpp"
#include "pathqa/tfidf.hpp"

namespace pathqa {

// Sentinel node index for the end-of-evidence symbol.
inline constexpr uint32_t kEoeNode = std::numeric_limits<uint32_t>::max();

struct ReasoningPath {
    std::vector<uint32_t> nodes;  // paragraph sequence, no repeats
    double log_score = 0.0;       // sum of log step probabilities
    bool terminated = false;      // end-of-evidence selected
};

enum class SearchMode { kAdaptive, kGreedy, kFixed, kNoRecurrence, kClosedPool };

struct SearchConfig {
    SearchMode mode = SearchMode::kAdaptive;
    size_t beam = 8;        // B
    size_t initial = 500;   // F
    size_t carryover = 1;   // K
    size_t max_len = 3;     // maximum paragraphs per path
    size_t fixed_len = 0;   // L for kFixed
    bool eoe_in_score = true;
};

// Scoring interface the search runs against. The neural scorer implements
// it; tests may substitute deterministic stubs.
struct ScorerState {
    Vec h;
    std::vector<uint32_t> trace;  // selections so far (stub scorers key on it)
};

class PathScorer {
public:
    virtual ~PathScorer() = default;
    virtual ScorerState init() = 0;
    virtual double prob(const ScorerState& state, uint32_t candidate) = 0;
    virtual ScorerState advance(const ScorerState& state, uint32_t selected) = 0;
};

// Candidate-set expansion: out-neighbors of the selection, plus the K best
// remaining members of the previous candidate set, plus end-of-evidence;
// paragraphs already on the path are excluded. Ordering is deterministic:
// graph order, then carryovers by probability (desc, ties by id), then EOE.
std::vector<uint32_t> expand_candidates(const WikiGraph& graph,
                                        const std::vector<uint32_t>& path_nodes,
                                        const std::vector<uint32_t>& prev_candidates,
                                        const std::vector<double>& prev_probs,
                                        uint32_t selected, size_t carryover,
                                        const std::unordered_set<uint32_t>* pool = nullptr);

// Top-B terminated reasoning paths, sorted by score (desc) with lexicographic
// tie-break on the node sequence. Duplicate sequences keep the best score.
std::vector<ReasoningPath> beam_search(PathScorer& scorer, const WikiGraph& graph,
                                       const std::vector<uint32_t>& initial_candidates,
                                       const SearchConfig& config);

// Exhaustive enumeration of every terminated path under the same expansion
// and scoring rules; reference oracle for the beam (exponential, small
// fixtures only).
std::vector<ReasoningPath> enumerate_all_paths(PathScorer& scorer, const WikiGraph& graph,
                                               const std::vector<uint32_t>& initial_candidates,
                                               const SearchConfig& config);

// ---------------------------------------------------------------------------

class RetrieverModel {
public:
    explicit RetrieverModel(const EncoderConfig& encoder_config);

    void init_params(uint64_t seed);

    EncoderModel& encoder() { return encoder_; }
    const EncoderModel& encoder() const { return encoder_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    uint32_t dim() const { return encoder_.config().d; }

    double alpha() const { return alpha_->value[0]; }
    double bias() const { return bias_->value[0]; }

    // h1 = alpha * s / ||s||; in question-independent mode one advance step
    // with the encoded question is applied on top.
    Vec init_state(const Vec* question_vector = nullptr) const;
    double step_prob(const Vec& h, const Vec& w) const;
    Vec advance(const Vec& h, const Vec& w) const;

    // All trainable tensors (encoder + retriever) for the optimizer.
    std::vector<Tensor*> trainable();
    void zero_grad();

    // Checkpoints carry all tensors plus an "encoder.meta" configuration
    // record, so models reconstruct from the file alone.
    void save(const std::string& path) const;
    void load(const std::string& path);
    static RetrieverModel from_checkpoint(const std::string& path);

    Tensor* w_r_;
    Tensor* b_r_;
    Tensor* alpha_;
    Tensor* s_;
    Tensor* bias_;

private:
    EncoderModel encoder_;
    ParamStore params_;
};

// Per-query scorer over a fixed corpus; caches one encoding per paragraph
// and counts encoder invocations.
class NeuralPathScorer : public PathScorer {
public:
    NeuralPathScorer(const RetrieverModel& model, const Corpus& corpus, std::string question,
                     bool recurrence = true);

    ScorerState init() override;
    double prob(const ScorerState& state, uint32_t candidate) override;
    ScorerState advance(const ScorerState& state, uint32_t selected) override;

    size_t encoder_calls() const { return encoder_calls_; }

private:
    const Vec& candidate_vector(uint32_t candidate);

    const RetrieverModel& model_;
    const Corpus& corpus_;
    std::string question_;
    bool recurrence_;
    std::unordered_map<uint32_t, Vec> cache_;
    Vec eoe_;
    bool eoe_ready_ = false;
    size_t encoder_calls_ = 0;
};

// Full retrieval for one question: TF-IDF initial candidates, then beam
// search. `closed_pool` replaces the TF-IDF stage and restricts expansion.
std::vector<ReasoningPath> retrieve_paths(const RetrieverModel& model, const Corpus& corpus,
                                          const WikiGraph& graph, const SparseIndex& index,
                                          const std::string& question,
                                          const SearchConfig& config,
                                          const std::vector<uint32_t>* closed_pool = nullptr,
                                          size_t* encoder_calls = nullptr);

// ---------------------------------------------------------------------------
// Training.

struct RetrieverExampleData {
    std::string question;
    std::vector<uint32_t> gold_nodes;  // paragraphs of g; terminal EOE implicit
    // One negative set per step t = 1..|gold_nodes|+1; kEoeNode marks the
    // end-of-evidence negative.
    std::vector<std::vector<uint32_t>> negatives;
};

// Teacher-forced binary cross-entropy along the gold path (Eq.-(5)-style):
// sum over steps of -log P(gold) - sum log(1 - P(negative)). Accumulates
// exact gradients into the model when `accumulate_grads`.
double retriever_loss(RetrieverModel& model, const Corpus& corpus,
                      const RetrieverExampleData& example, bool accumulate_grads,
                      bool recurrence = true);

struct TrainConfig {
    double lr = 1e-2;  // reference encoder; 3e-5 is the transformer default
    size_t epochs = 3;
    size_t batch_size = 4;
    double weight_decay = 0.01;
    double warmup_fraction = 0.1;
    uint64_t seed = 13;
    bool recurrence = true;  // off trains the no-recurrence / re-rank scorer
    bool verbose = false;
};

struct TrainStats {
    double initial_loss = 0.0;
    double final_loss = 0.0;
    size_t steps = 0;
};

TrainStats train_retriever(RetrieverModel& model, const Corpus& corpus,
                           const std::vector<RetrieverExampleData>& examples,
                           const TrainConfig& config);

}  // namespace pathqa
