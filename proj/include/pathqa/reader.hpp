#pragma once
// Multi-task reader: re-ranks retrieved reasoning paths by answerability and
// extracts the answer span from the best one. The reference model embeds
// hashed tokens, conditions them on a pooled question summary, and shares one
// standardization layer between token representations and the pooled path
// vector.

#include <cstdint>
#include <string>
#include <vector>

#include "pathqa/corpus.hpp"
#include "pathqa/params.hpp"
#include "pathqa/retriever.hpp"
#include "pathqa/tensor.hpp"

namespace pathqa {

enum class AnswerType { kSpan, kYes, kNo };

std::string answer_type_name(AnswerType t);
AnswerType answer_type_from_name(const std::string& name);

struct ReaderConfig {
    uint32_t d = 64;
    uint32_t bucket_count = 1u << 15;
    size_t max_tokens_per_side = 256;
    size_t max_span_len = 30;    // spans satisfy j - i < max_span_len
    bool use_class_head = false; // 3-class answer head for yes/no datasets
    double std_eps = 1e-6;
};

struct ReaderExample {
    std::string qid;
    std::string question;
    std::vector<uint32_t> path_nodes;
    bool gold_label = true;  // false = distorted path (span loss masked)
    bool distant = false;    // distantly supervised origin
    AnswerType answer_type = AnswerType::kSpan;
    bool has_span = false;
    size_t span_para = 0;   // index into path_nodes
    size_t span_start = 0;  // token offsets within that paragraph
    size_t span_end = 0;
};

// Forward encoding of (question, path): per-token representations plus the
// pooled path vector u_E. Kept around for the backward pass.
struct PathEncoding {
    std::vector<std::string> tokens;      // question ++ (sep ++ paragraph)*
    std::vector<uint32_t> token_features; // hashed ids (separator included)
    std::vector<int> token_para;          // -1 question/separator, else path index
    std::vector<size_t> para_token_start; // absolute offset of each paragraph
    size_t question_len = 0;

    std::vector<Vec> reps;   // t_i (post-standardization)
    Vec u_path;              // u_E
    // Backward caches.
    std::vector<Vec> rep_z;
    std::vector<double> rep_sigma;
    std::vector<bool> rep_floored;
    Vec pool_mean;
    Vec pool_z;
    double pool_sigma = 0.0;
    bool pool_floored = false;
    Vec q_sum;
    std::vector<uint32_t> q_features;
};

struct SpanResult {
    size_t start = 0;  // absolute token indices within the encoding
    size_t end = 0;
    double score = 0.0;  // P^start * P^end
    std::string text;
};

struct AnswerPrediction {
    bool has_answer = false;
    std::vector<uint32_t> path_nodes;
    AnswerType answer_type = AnswerType::kSpan;
    std::string answer_text;
    double p_path = 0.0;            // P(E|q) of the chosen path
    double s_read = 0.0;            // Eq.-(7)-style max span product
    double retriever_log_score = 0.0;
    size_t span_start = 0, span_end = 0;
};

class ReaderModel {
public:
    explicit ReaderModel(const ReaderConfig& config);

    void init_params(uint64_t seed);

    const ReaderConfig& config() const { return config_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    PathEncoding encode_path(const std::string& question,
                             const std::vector<std::string>& paragraph_texts) const;
    PathEncoding encode_path(const Corpus& corpus, const std::string& question,
                             const std::vector<uint32_t>& path_nodes) const;

    double rerank_prob(const PathEncoding& enc) const;  // sigma(w_n . u_E)

    // Start/end distributions over paragraph token positions (question and
    // separator positions excluded). Each sums to 1.
    void span_distributions(const PathEncoding& enc, std::vector<double>* p_start,
                            std::vector<double>* p_end) const;

    // Best span under Eq. (7): argmax over i <= j within one paragraph with
    // j - i < max_span_len; ties prefer the smallest i, then j.
    SpanResult extract_span(const PathEncoding& enc) const;

    AnswerType classify_answer_type(const PathEncoding& enc) const;

    // Path selection + answer extraction over the retriever's top paths.
    AnswerPrediction answer(const Corpus& corpus, const std::string& question,
                            const std::vector<ReasoningPath>& paths) const;

    double loss(const Corpus& corpus, const ReaderExample& example, bool accumulate_grads);

    std::vector<Tensor*> trainable() { return params_.all(); }
    void save(const std::string& path) const;
    void load(const std::string& path) { params_.load(path); }
    static ReaderModel from_checkpoint(const std::string& path);

private:
    Vec standardize(const Vec& x, Vec* z_out, double* sigma_out, bool* floored_out) const;
    void standardize_backward(const Vec& upstream, const Vec& z, double sigma, bool floored,
                              Vec* dx);

    ReaderConfig config_;
    ParamStore params_;
    Tensor* embeddings_;  // (bucket_count + 1) x d, last row = separator
    Tensor* q_proj_;      // d x d question-summary projection
    Tensor* q_bias_;      // d
    Tensor* v_start_;     // d
    Tensor* v_end_;       // d
    Tensor* w_n_;         // d
    Tensor* class_head_;  // 3 x d (span / yes / no)
    Tensor* gain_;
    Tensor* shift_;
};

struct ReaderTrainConfig {
    double lr = 1e-2;
    size_t epochs = 2;
    size_t batch_size = 120;
    double weight_decay = 0.01;
    double warmup_fraction = 0.1;
    uint64_t seed = 13;
    bool verbose = false;
};

struct ReaderTrainStats {
    double initial_loss = 0.0;
    double final_loss = 0.0;
    size_t steps = 0;
};

ReaderTrainStats train_reader(ReaderModel& model, const Corpus& corpus,
                              const std::vector<ReaderExample>& examples,
                              const ReaderTrainConfig& config);

}  // namespace pathqa
