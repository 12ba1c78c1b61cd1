#pragma once
// Reference question/paragraph encoder: hashed unigram+bigram embeddings,
// mean pooling, a tanh projection and a standardization layer. It stands in
// for a pretrained transformer behind the same interface; d defaults to 64.
//
// Standardization subtracts the per-vector mean and divides by the exact
// per-vector std (variance floored at std_eps for near-constant inputs), then
// applies a learned gain/shift. With gain=1, shift=0 every non-degenerate
// output has L2 norm exactly sqrt(d), so the end-of-evidence vector cannot be
// told apart from text encodings by norm alone.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pathqa/params.hpp"
#include "pathqa/tensor.hpp"

namespace pathqa {

enum class EncoderMode { kQuestionDependent, kQuestionIndependent };

struct EncoderConfig {
    uint32_t d = 64;
    uint32_t bucket_count = 1u << 15;
    int ngram_order = 2;
    size_t max_tokens_per_side = 256;
    EncoderMode mode = EncoderMode::kQuestionDependent;
    double std_eps = 1e-6;  // variance floor in the standardizer
};

// Forward-pass cache consumed by the backward pass.
struct EncodeCache {
    bool valid = false;
    bool is_eoe = false;
    std::vector<uint32_t> features;  // with multiplicity; separator included
    Vec pooled;                      // m
    Vec pre_tanh;                    // u (unused for eoe)
    Vec activated;                   // y = tanh(u); for eoe this is w_eoe
    Vec standardized;                // z
    double sigma = 0.0;
    bool floored = false;
};

class EncoderModel {
public:
    explicit EncoderModel(const EncoderConfig& config);

    void init_params(uint64_t seed);

    const EncoderConfig& config() const { return config_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    // Question-dependent encoding of (q, p): the feature stream is
    // ngrams(q) ++ [SEP] ++ ngrams(p), plus one reserved overlap-indicator
    // feature per paragraph unigram/bigram that also occurs in the question.
    // The indicator rows are shared across the vocabulary, which lets the
    // scorer express lexical question-paragraph affinity for tokens it never
    // saw in training (the role cross-attention plays in a transformer).
    Vec encode_pair(const std::string& question, const std::string& paragraph,
                    EncodeCache* cache = nullptr) const;

    // Question-independent single-text encodings: [SEP] ++ ngrams(x).
    Vec encode_paragraph(const std::string& paragraph, EncodeCache* cache = nullptr) const;
    Vec encode_question(const std::string& question, EncodeCache* cache = nullptr) const;

    // w_[EOE] through the same standardization layer.
    Vec eoe_vector(EncodeCache* cache = nullptr) const;

    // Accumulates exact gradients of (upstream . output) into params().
    void backward(const EncodeCache& cache, const Vec& upstream);

    uint32_t separator_feature() const { return config_.bucket_count; }
    uint32_t match_unigram_feature() const { return config_.bucket_count + 1; }
    uint32_t match_bigram_feature() const { return config_.bucket_count + 2; }

private:
    Vec encode_features(const std::vector<uint32_t>& features, EncodeCache* cache) const;
    std::vector<uint32_t> pair_features(const std::string& question,
                                        const std::string& paragraph) const;
    std::vector<uint32_t> single_features(const std::string& text) const;
    Vec standardize(const Vec& y, EncodeCache* cache) const;

    EncoderConfig config_;
    ParamStore params_;
    Tensor* embeddings_;  // (bucket_count + 1) x d, last row = separator
    Tensor* projection_;  // d x d
    Tensor* proj_bias_;   // d
    Tensor* gain_;        // d
    Tensor* shift_;       // d
    Tensor* eoe_;         // d
};

}  // namespace pathqa
