#include "pathqa/encoder.hpp"

#include <cmath>
#include <unordered_set>

#include "pathqa/common.hpp"
#include "pathqa/text.hpp"

namespace pathqa {

EncoderModel::EncoderModel(const EncoderConfig& config) : config_(config) {
    if (config_.d < 2) throw UsageError("encoder d must be >= 2");
    if (!is_power_of_two(config_.bucket_count))
        throw UsageError("encoder bucket_count must be a power of two");
    const uint64_t d = config_.d;
    // Rows beyond the hash range: separator, unigram-match, bigram-match.
    embeddings_ = params_.add("encoder.embeddings", {config_.bucket_count + 3ull, d});
    projection_ = params_.add("encoder.projection", {d, d});
    proj_bias_ = params_.add("encoder.projection_bias", {d}, /*no_decay=*/true);
    gain_ = params_.add("encoder.gain", {d}, /*no_decay=*/true);
    shift_ = params_.add("encoder.shift", {d}, /*no_decay=*/true);
    eoe_ = params_.add("encoder.eoe", {d});
    std::fill(gain_->value.begin(), gain_->value.end(), 1.0);
}

void EncoderModel::init_params(uint64_t seed) {
    std::mt19937_64 rng(seed);
    fill_uniform(embeddings_->value, rng, -0.1, 0.1);
    double fan_in = 1.0 / std::sqrt(static_cast<double>(config_.d));
    fill_uniform(projection_->value, rng, -fan_in, fan_in);
    std::fill(proj_bias_->value.begin(), proj_bias_->value.end(), 0.0);
    std::fill(gain_->value.begin(), gain_->value.end(), 1.0);
    std::fill(shift_->value.begin(), shift_->value.end(), 0.0);
    fill_uniform(eoe_->value, rng, -0.1, 0.1);
}

std::vector<uint32_t> EncoderModel::pair_features(const std::string& question,
                                                  const std::string& paragraph) const {
    auto q_tokens = tokenize(question);
    auto p_tokens = tokenize(paragraph);
    if (q_tokens.size() > config_.max_tokens_per_side)
        q_tokens.resize(config_.max_tokens_per_side);
    if (p_tokens.size() > config_.max_tokens_per_side)
        p_tokens.resize(config_.max_tokens_per_side);
    auto feats = ngram_features(q_tokens, config_.bucket_count, config_.ngram_order);
    feats.push_back(separator_feature());
    auto p_feats = ngram_features(p_tokens, config_.bucket_count, config_.ngram_order);
    feats.insert(feats.end(), p_feats.begin(), p_feats.end());

    // Overlap indicators: one shared feature id per paragraph unigram (and
    // bigram) that also occurs in the question.
    std::unordered_set<std::string> q_unigrams(q_tokens.begin(), q_tokens.end());
    std::unordered_set<std::string> q_bigrams;
    for (size_t i = 0; i + 1 < q_tokens.size(); ++i)
        q_bigrams.insert(q_tokens[i] + " " + q_tokens[i + 1]);
    for (const auto& t : p_tokens)
        if (q_unigrams.count(t)) feats.push_back(match_unigram_feature());
    if (config_.ngram_order >= 2) {
        for (size_t i = 0; i + 1 < p_tokens.size(); ++i)
            if (q_bigrams.count(p_tokens[i] + " " + p_tokens[i + 1]))
                feats.push_back(match_bigram_feature());
    }
    return feats;
}

std::vector<uint32_t> EncoderModel::single_features(const std::string& text) const {
    auto tokens = tokenize(text);
    if (tokens.size() > config_.max_tokens_per_side) tokens.resize(config_.max_tokens_per_side);
    std::vector<uint32_t> feats{separator_feature()};
    auto t_feats = ngram_features(tokens, config_.bucket_count, config_.ngram_order);
    feats.insert(feats.end(), t_feats.begin(), t_feats.end());
    return feats;
}

Vec EncoderModel::standardize(const Vec& y, EncodeCache* cache) const {
    const size_t d = y.size();
    double mu = 0.0;
    for (double v : y) mu += v;
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (double v : y) var += (v - mu) * (v - mu);
    var /= static_cast<double>(d);
    const bool floored = var < config_.std_eps;
    const double sigma = std::sqrt(floored ? config_.std_eps : var);

    Vec z(d);
    for (size_t i = 0; i < d; ++i) z[i] = (y[i] - mu) / sigma;
    if (cache) {
        cache->standardized = z;
        cache->sigma = sigma;
        cache->floored = floored;
    }
    Vec out(d);
    for (size_t i = 0; i < d; ++i) out[i] = gain_->value[i] * z[i] + shift_->value[i];
    return out;
}

Vec EncoderModel::encode_features(const std::vector<uint32_t>& features,
                                  EncodeCache* cache) const {
    const size_t d = config_.d;
    Vec pooled(d, 0.0);
    for (uint32_t f : features) {
        const double* row = embeddings_->value.data() + static_cast<size_t>(f) * d;
        for (size_t i = 0; i < d; ++i) pooled[i] += row[i];
    }
    const double inv_n = 1.0 / static_cast<double>(features.size());
    for (double& v : pooled) v *= inv_n;

    Vec pre(d);
    matvec(projection_->value.data(), d, d, pooled.data(), pre.data());
    for (size_t i = 0; i < d; ++i) pre[i] += proj_bias_->value[i];

    Vec act(d);
    for (size_t i = 0; i < d; ++i) act[i] = std::tanh(pre[i]);

    if (cache) {
        cache->valid = true;
        cache->is_eoe = false;
        cache->features = features;
        cache->pooled = pooled;
        cache->pre_tanh = pre;
        cache->activated = act;
    }
    return standardize(act, cache);
}

Vec EncoderModel::encode_pair(const std::string& question, const std::string& paragraph,
                              EncodeCache* cache) const {
    return encode_features(pair_features(question, paragraph), cache);
}

Vec EncoderModel::encode_paragraph(const std::string& paragraph, EncodeCache* cache) const {
    return encode_features(single_features(paragraph), cache);
}

Vec EncoderModel::encode_question(const std::string& question, EncodeCache* cache) const {
    return encode_features(single_features(question), cache);
}

Vec EncoderModel::eoe_vector(EncodeCache* cache) const {
    if (cache) {
        cache->valid = true;
        cache->is_eoe = true;
        cache->features.clear();
        cache->activated = eoe_->value;
    }
    return standardize(eoe_->value, cache);
}

void EncoderModel::backward(const EncodeCache& cache, const Vec& upstream) {
    if (!cache.valid) throw UsageError("encoder backward called without a forward cache");
    const size_t d = config_.d;

    // out = gain .* z + shift
    Vec dz(d);
    for (size_t i = 0; i < d; ++i) {
        shift_->grad[i] += upstream[i];
        gain_->grad[i] += upstream[i] * cache.standardized[i];
        dz[i] = upstream[i] * gain_->value[i];
    }

    // z = (y - mean(y)) / sigma. In the exact branch sigma depends on y; in
    // the floored branch it is constant.
    Vec dy(d);
    double mean_dz = 0.0;
    for (double v : dz) mean_dz += v;
    mean_dz /= static_cast<double>(d);
    if (cache.floored) {
        for (size_t i = 0; i < d; ++i) dy[i] = (dz[i] - mean_dz) / cache.sigma;
    } else {
        double mean_dz_z = 0.0;
        for (size_t i = 0; i < d; ++i) mean_dz_z += dz[i] * cache.standardized[i];
        mean_dz_z /= static_cast<double>(d);
        for (size_t i = 0; i < d; ++i)
            dy[i] = (dz[i] - mean_dz - cache.standardized[i] * mean_dz_z) / cache.sigma;
    }

    if (cache.is_eoe) {
        for (size_t i = 0; i < d; ++i) eoe_->grad[i] += dy[i];
        return;
    }

    // y = tanh(u)
    Vec du(d);
    for (size_t i = 0; i < d; ++i)
        du[i] = dy[i] * (1.0 - cache.activated[i] * cache.activated[i]);

    // u = P m + b
    for (size_t i = 0; i < d; ++i) {
        proj_bias_->grad[i] += du[i];
        double* grow = projection_->grad.data() + i * d;
        for (size_t j = 0; j < d; ++j) grow[j] += du[i] * cache.pooled[j];
    }
    Vec dm(d);
    matvec_t(projection_->value.data(), d, d, du.data(), dm.data());

    // m = mean of embedding rows
    const double inv_n = 1.0 / static_cast<double>(cache.features.size());
    for (uint32_t f : cache.features) {
        double* grow = embeddings_->grad.data() + static_cast<size_t>(f) * d;
        for (size_t i = 0; i < d; ++i) grow[i] += dm[i] * inv_n;
    }
}

}  // namespace pathqa
