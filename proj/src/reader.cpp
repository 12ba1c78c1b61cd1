#include "pathqa/reader.hpp"

#include <algorithm>
#include <cmath>

#include "pathqa/common.hpp"
#include "pathqa/optim.hpp"
#include "pathqa/text.hpp"

namespace pathqa {

std::string answer_type_name(AnswerType t) {
    switch (t) {
        case AnswerType::kSpan: return "span";
        case AnswerType::kYes: return "yes";
        case AnswerType::kNo: return "no";
    }
    return "span";
}

AnswerType answer_type_from_name(const std::string& name) {
    if (name == "span") return AnswerType::kSpan;
    if (name == "yes") return AnswerType::kYes;
    if (name == "no") return AnswerType::kNo;
    throw DataError("unknown answer type: " + name);
}

ReaderModel::ReaderModel(const ReaderConfig& config) : config_(config) {
    if (config_.d < 2) throw UsageError("reader d must be >= 2");
    if (!is_power_of_two(config_.bucket_count))
        throw UsageError("reader bucket_count must be a power of two");
    const uint64_t d = config_.d;
    embeddings_ = params_.add("reader.embeddings", {config_.bucket_count + 1ull, d});
    q_proj_ = params_.add("reader.q_proj", {d, d});
    q_bias_ = params_.add("reader.q_bias", {d}, /*no_decay=*/true);
    v_start_ = params_.add("reader.v_start", {d});
    v_end_ = params_.add("reader.v_end", {d});
    w_n_ = params_.add("reader.w_n", {d});
    class_head_ = params_.add("reader.class_head", {3, d});
    gain_ = params_.add("reader.gain", {d}, /*no_decay=*/true);
    shift_ = params_.add("reader.shift", {d}, /*no_decay=*/true);
    std::fill(gain_->value.begin(), gain_->value.end(), 1.0);
}

void ReaderModel::init_params(uint64_t seed) {
    std::mt19937_64 rng(seed);
    fill_uniform(embeddings_->value, rng, -0.1, 0.1);
    double fan_in = 1.0 / std::sqrt(static_cast<double>(config_.d));
    fill_uniform(q_proj_->value, rng, -fan_in, fan_in);
    std::fill(q_bias_->value.begin(), q_bias_->value.end(), 0.0);
    fill_uniform(v_start_->value, rng, -fan_in, fan_in);
    fill_uniform(v_end_->value, rng, -fan_in, fan_in);
    fill_uniform(w_n_->value, rng, -fan_in, fan_in);
    fill_uniform(class_head_->value, rng, -fan_in, fan_in);
    std::fill(gain_->value.begin(), gain_->value.end(), 1.0);
    std::fill(shift_->value.begin(), shift_->value.end(), 0.0);
}

Vec ReaderModel::standardize(const Vec& x, Vec* z_out, double* sigma_out,
                             bool* floored_out) const {
    const size_t d = x.size();
    double mu = 0.0;
    for (double v : x) mu += v;
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (double v : x) var += (v - mu) * (v - mu);
    var /= static_cast<double>(d);
    const bool floored = var < config_.std_eps;
    const double sigma = std::sqrt(floored ? config_.std_eps : var);
    Vec z(d), out(d);
    for (size_t i = 0; i < d; ++i) {
        z[i] = (x[i] - mu) / sigma;
        out[i] = gain_->value[i] * z[i] + shift_->value[i];
    }
    if (z_out) *z_out = std::move(z);
    if (sigma_out) *sigma_out = sigma;
    if (floored_out) *floored_out = floored;
    return out;
}

void ReaderModel::standardize_backward(const Vec& upstream, const Vec& z, double sigma,
                                       bool floored, Vec* dx) {
    const size_t d = upstream.size();
    Vec dz(d);
    for (size_t i = 0; i < d; ++i) {
        shift_->grad[i] += upstream[i];
        gain_->grad[i] += upstream[i] * z[i];
        dz[i] = upstream[i] * gain_->value[i];
    }
    double mean_dz = 0.0;
    for (double v : dz) mean_dz += v;
    mean_dz /= static_cast<double>(d);
    dx->assign(d, 0.0);
    if (floored) {
        for (size_t i = 0; i < d; ++i) (*dx)[i] = (dz[i] - mean_dz) / sigma;
    } else {
        double mean_dz_z = 0.0;
        for (size_t i = 0; i < d; ++i) mean_dz_z += dz[i] * z[i];
        mean_dz_z /= static_cast<double>(d);
        for (size_t i = 0; i < d; ++i) (*dx)[i] = (dz[i] - mean_dz - z[i] * mean_dz_z) / sigma;
    }
}

PathEncoding ReaderModel::encode_path(const std::string& question,
                                      const std::vector<std::string>& paragraph_texts) const {
    if (paragraph_texts.empty()) throw UsageError("cannot encode an empty path");
    const size_t d = config_.d;
    const uint32_t mask = config_.bucket_count - 1;
    const uint32_t sep = config_.bucket_count;

    PathEncoding enc;
    auto push_tokens = [&](const std::vector<std::string>& toks, int para) {
        for (const auto& t : toks) {
            enc.tokens.push_back(t);
            enc.token_features.push_back(fnv1a32(t) & mask);
            enc.token_para.push_back(para);
        }
    };
    auto q_tokens = tokenize(question);
    if (q_tokens.size() > config_.max_tokens_per_side) q_tokens.resize(config_.max_tokens_per_side);
    push_tokens(q_tokens, -1);
    enc.question_len = q_tokens.size();
    for (size_t p = 0; p < paragraph_texts.size(); ++p) {
        enc.tokens.push_back("[sep]");
        enc.token_features.push_back(sep);
        enc.token_para.push_back(-1);
        enc.para_token_start.push_back(enc.tokens.size());
        auto toks = tokenize(paragraph_texts[p]);
        if (toks.size() > config_.max_tokens_per_side) toks.resize(config_.max_tokens_per_side);
        push_tokens(toks, static_cast<int>(p));
    }

    // Question summary: mean of raw question-token embeddings.
    enc.q_features.assign(enc.token_features.begin(),
                          enc.token_features.begin() + enc.question_len);
    enc.q_sum.assign(d, 0.0);
    for (uint32_t f : enc.q_features) {
        const double* row = embeddings_->value.data() + static_cast<size_t>(f) * d;
        for (size_t i = 0; i < d; ++i) enc.q_sum[i] += row[i];
    }
    if (!enc.q_features.empty())
        for (double& v : enc.q_sum) v /= static_cast<double>(enc.q_features.size());

    Vec q_cond(d);
    matvec(q_proj_->value.data(), d, d, enc.q_sum.data(), q_cond.data());
    for (size_t i = 0; i < d; ++i) q_cond[i] += q_bias_->value[i];

    const size_t n = enc.tokens.size();
    enc.reps.resize(n);
    enc.rep_z.resize(n);
    enc.rep_sigma.resize(n);
    enc.rep_floored.resize(n);
    Vec pooled(d, 0.0);
    for (size_t i = 0; i < n; ++i) {
        Vec x(d);
        const double* row =
            embeddings_->value.data() + static_cast<size_t>(enc.token_features[i]) * d;
        for (size_t k = 0; k < d; ++k) x[k] = row[k] + q_cond[k];
        bool fl = false;
        double sg = 0.0;
        enc.reps[i] = standardize(x, &enc.rep_z[i], &sg, &fl);
        enc.rep_sigma[i] = sg;
        enc.rep_floored[i] = fl;
        axpy(1.0, enc.reps[i], pooled);
    }
    for (double& v : pooled) v /= static_cast<double>(n);
    enc.pool_mean = pooled;
    enc.u_path = standardize(pooled, &enc.pool_z, &enc.pool_sigma, &enc.pool_floored);
    return enc;
}

PathEncoding ReaderModel::encode_path(const Corpus& corpus, const std::string& question,
                                      const std::vector<uint32_t>& path_nodes) const {
    std::vector<std::string> texts;
    texts.reserve(path_nodes.size());
    for (uint32_t node : path_nodes) texts.push_back(corpus.at(node).text);
    return encode_path(question, texts);
}

double ReaderModel::rerank_prob(const PathEncoding& enc) const {
    return sigmoid(dot(w_n_->value, enc.u_path));
}

void ReaderModel::span_distributions(const PathEncoding& enc, std::vector<double>* p_start,
                                     std::vector<double>* p_end) const {
    const size_t n = enc.tokens.size();
    p_start->assign(n, 0.0);
    p_end->assign(n, 0.0);
    double max_s = -1e300, max_e = -1e300;
    std::vector<double> ls(n, 0.0), le(n, 0.0);
    bool any = false;
    for (size_t i = 0; i < n; ++i) {
        if (enc.token_para[i] < 0) continue;
        any = true;
        ls[i] = dot(v_start_->value, enc.reps[i]);
        le[i] = dot(v_end_->value, enc.reps[i]);
        max_s = std::max(max_s, ls[i]);
        max_e = std::max(max_e, le[i]);
    }
    if (!any) return;
    double zs = 0.0, ze = 0.0;
    for (size_t i = 0; i < n; ++i) {
        if (enc.token_para[i] < 0) continue;
        zs += std::exp(ls[i] - max_s);
        ze += std::exp(le[i] - max_e);
    }
    for (size_t i = 0; i < n; ++i) {
        if (enc.token_para[i] < 0) continue;
        (*p_start)[i] = std::exp(ls[i] - max_s) / zs;
        (*p_end)[i] = std::exp(le[i] - max_e) / ze;
    }
}

SpanResult ReaderModel::extract_span(const PathEncoding& enc) const {
    std::vector<double> ps, pe;
    span_distributions(enc, &ps, &pe);
    SpanResult best;
    best.score = -1.0;
    const size_t n = enc.tokens.size();
    for (size_t i = 0; i < n; ++i) {
        if (enc.token_para[i] < 0) continue;
        for (size_t j = i; j < n && j - i < config_.max_span_len; ++j) {
            if (enc.token_para[j] != enc.token_para[i]) break;  // spans stay in one paragraph
            double score = ps[i] * pe[j];
            if (score > best.score) {
                best.score = score;
                best.start = i;
                best.end = j;
            }
        }
    }
    if (best.score < 0.0) {
        best.score = 0.0;
        return best;
    }
    std::string text;
    for (size_t k = best.start; k <= best.end; ++k) {
        if (!text.empty()) text.push_back(' ');
        text += enc.tokens[k];
    }
    best.text = std::move(text);
    return best;
}

AnswerType ReaderModel::classify_answer_type(const PathEncoding& enc) const {
    const size_t d = config_.d;
    double best = -1e300;
    int best_class = 0;
    for (int c = 0; c < 3; ++c) {
        double logit = 0.0;
        const double* row = class_head_->value.data() + static_cast<size_t>(c) * d;
        for (size_t i = 0; i < d; ++i) logit += row[i] * enc.u_path[i];
        if (logit > best) {  // strict: ties keep the earlier class (span first)
            best = logit;
            best_class = c;
        }
    }
    return static_cast<AnswerType>(best_class);
}

AnswerPrediction ReaderModel::answer(const Corpus& corpus, const std::string& question,
                                     const std::vector<ReasoningPath>& paths) const {
    AnswerPrediction pred;
    if (paths.empty()) return pred;  // has_answer stays false

    struct Scored {
        size_t index;
        double p_path;
    };
    std::vector<Scored> scored;
    std::vector<PathEncoding> encodings(paths.size());
    for (size_t i = 0; i < paths.size(); ++i) {
        encodings[i] = encode_path(corpus, question, paths[i].nodes);
        scored.push_back({i, rerank_prob(encodings[i])});
    }
    std::sort(scored.begin(), scored.end(), [&](const Scored& a, const Scored& b) {
        if (a.p_path != b.p_path) return a.p_path > b.p_path;
        if (paths[a.index].log_score != paths[b.index].log_score)
            return paths[a.index].log_score > paths[b.index].log_score;
        return paths[a.index].nodes < paths[b.index].nodes;
    });
    const size_t best = scored.front().index;
    const PathEncoding& enc = encodings[best];

    pred.has_answer = true;
    pred.path_nodes = paths[best].nodes;
    pred.p_path = scored.front().p_path;
    pred.retriever_log_score = paths[best].log_score;
    pred.answer_type = config_.use_class_head ? classify_answer_type(enc) : AnswerType::kSpan;
    if (pred.answer_type == AnswerType::kSpan) {
        SpanResult span = extract_span(enc);
        pred.answer_text = span.text;
        pred.s_read = span.score;
        pred.span_start = span.start;
        pred.span_end = span.end;
    } else {
        pred.answer_text = pred.answer_type == AnswerType::kYes ? "yes" : "no";
        pred.s_read = 0.0;
    }
    return pred;
}

double ReaderModel::loss(const Corpus& corpus, const ReaderExample& example,
                         bool accumulate_grads) {
    const size_t d = config_.d;
    PathEncoding enc = encode_path(corpus, example.question, example.path_nodes);
    const size_t n = enc.tokens.size();

    double loss = 0.0;
    Vec du(d, 0.0);  // gradient wrt u_path

    // Re-ranking / no-answer term.
    double p_rank = rerank_prob(enc);
    double p_r = example.gold_label ? p_rank : 1.0 - p_rank;
    loss += -std::log(clamp_prob(p_r));
    if (accumulate_grads && p_rank > 1e-12 && p_rank < 1.0 - 1e-12) {
        double gz = example.gold_label ? p_rank - 1.0 : p_rank;
        axpy(gz, enc.u_path, w_n_->grad);
        axpy(gz, w_n_->value, du);
    }

    // Answer-class term (gold paths only; the answerable class decomposes
    // into span / yes / no).
    if (config_.use_class_head && example.gold_label) {
        Vec logits(3);
        matvec(class_head_->value.data(), 3, d, enc.u_path.data(), logits.data());
        double mx = std::max({logits[0], logits[1], logits[2]});
        double z = 0.0;
        for (double& l : logits) z += std::exp(l - mx);
        int target = static_cast<int>(example.answer_type);
        double logp = logits[target] - mx - std::log(z);
        loss += -logp;
        if (accumulate_grads) {
            for (int c = 0; c < 3; ++c) {
                double p = std::exp(logits[c] - mx) / z;
                double g = p - (c == target ? 1.0 : 0.0);
                double* row = class_head_->grad.data() + static_cast<size_t>(c) * d;
                const double* wrow = class_head_->value.data() + static_cast<size_t>(c) * d;
                for (size_t i = 0; i < d; ++i) {
                    row[i] += g * enc.u_path[i];
                    du[i] += g * wrow[i];
                }
            }
        }
    }

    // Span term, masked for distorted examples and non-span answers.
    std::vector<Vec> drep(n);
    const bool span_active = example.gold_label && example.has_span &&
                             example.answer_type == AnswerType::kSpan;
    if (span_active) {
        if (example.span_para >= enc.para_token_start.size())
            throw DataError("span paragraph index out of range");
        size_t base = enc.para_token_start[example.span_para];
        size_t ys = base + example.span_start;
        size_t ye = base + example.span_end;
        if (ys > ye || ye >= n || enc.token_para[ys] < 0 || enc.token_para[ye] < 0)
            throw DataError("invalid span target");
        std::vector<double> ps, pe;
        span_distributions(enc, &ps, &pe);
        loss += -std::log(clamp_prob(ps[ys])) - std::log(clamp_prob(pe[ye]));
        if (accumulate_grads) {
            for (size_t i = 0; i < n; ++i) {
                if (enc.token_para[i] < 0) continue;
                double gs = ps[i] - (i == ys ? 1.0 : 0.0);
                double ge = pe[i] - (i == ye ? 1.0 : 0.0);
                axpy(gs, enc.reps[i], v_start_->grad);
                axpy(ge, enc.reps[i], v_end_->grad);
                if (drep[i].empty()) drep[i].assign(d, 0.0);
                axpy(gs, v_start_->value, drep[i]);
                axpy(ge, v_end_->value, drep[i]);
            }
        }
    }

    if (!accumulate_grads) return loss;

    // u_path = standardize(mean of reps).
    Vec dpool;
    standardize_backward(du, enc.pool_z, enc.pool_sigma, enc.pool_floored, &dpool);
    const double inv_n = 1.0 / static_cast<double>(n);

    // Token representations: t_i = standardize(E[tok_i] + q_cond).
    Vec dqcond(d, 0.0);
    for (size_t i = 0; i < n; ++i) {
        Vec dt(d, 0.0);
        axpy(inv_n, dpool, dt);
        if (!drep[i].empty()) axpy(1.0, drep[i], dt);
        Vec dx;
        standardize_backward(dt, enc.rep_z[i], enc.rep_sigma[i], enc.rep_floored[i], &dx);
        double* erow = embeddings_->grad.data() + static_cast<size_t>(enc.token_features[i]) * d;
        for (size_t kk = 0; kk < d; ++kk) erow[kk] += dx[kk];
        axpy(1.0, dx, dqcond);
    }

    // q_cond = W_q q_sum + b_q.
    axpy(1.0, dqcond, q_bias_->grad);
    for (size_t r = 0; r < d; ++r) {
        double* row = q_proj_->grad.data() + r * d;
        for (size_t c = 0; c < d; ++c) row[c] += dqcond[r] * enc.q_sum[c];
    }
    if (!enc.q_features.empty()) {
        Vec dqsum(d);
        matvec_t(q_proj_->value.data(), d, d, dqcond.data(), dqsum.data());
        const double inv_q = 1.0 / static_cast<double>(enc.q_features.size());
        for (uint32_t f : enc.q_features) {
            double* erow = embeddings_->grad.data() + static_cast<size_t>(f) * d;
            for (size_t kk = 0; kk < d; ++kk) erow[kk] += dqsum[kk] * inv_q;
        }
    }
    return loss;
}

void ReaderModel::save(const std::string& path) const {
    Tensor meta;
    meta.name = "reader.meta";
    meta.dims = {6};
    meta.value = {static_cast<double>(config_.d),
                  static_cast<double>(config_.bucket_count),
                  static_cast<double>(config_.max_tokens_per_side),
                  static_cast<double>(config_.max_span_len),
                  config_.use_class_head ? 1.0 : 0.0,
                  config_.std_eps};
    std::vector<const Tensor*> tensors{&meta};
    auto own = params_.all();
    tensors.insert(tensors.end(), own.begin(), own.end());
    write_checkpoint(path, tensors);
}

ReaderModel ReaderModel::from_checkpoint(const std::string& path) {
    Checkpoint ckpt = Checkpoint::read(path);
    const Tensor* meta = ckpt.find("reader.meta");
    if (!meta || meta->value.size() != 6)
        throw DataError("checkpoint lacks a valid reader.meta record: " + path);
    ReaderConfig cfg;
    cfg.d = static_cast<uint32_t>(meta->value[0]);
    cfg.bucket_count = static_cast<uint32_t>(meta->value[1]);
    cfg.max_tokens_per_side = static_cast<size_t>(meta->value[2]);
    cfg.max_span_len = static_cast<size_t>(meta->value[3]);
    cfg.use_class_head = meta->value[4] != 0.0;
    cfg.std_eps = meta->value[5];
    ReaderModel model(cfg);
    model.params().load_from(ckpt);
    return model;
}

ReaderTrainStats train_reader(ReaderModel& model, const Corpus& corpus,
                              const std::vector<ReaderExample>& examples,
                              const ReaderTrainConfig& config) {
    if (examples.empty()) throw UsageError("no training examples");

    auto mean_loss = [&]() {
        double total = 0.0;
        for (const auto& ex : examples) total += model.loss(corpus, ex, false);
        return total / static_cast<double>(examples.size());
    };

    ReaderTrainStats stats;
    stats.initial_loss = mean_loss();

    const size_t batches_per_epoch = (examples.size() + config.batch_size - 1) / config.batch_size;
    OptimConfig opt_config;
    opt_config.lr = config.lr;
    opt_config.weight_decay = config.weight_decay;
    opt_config.warmup_fraction = config.warmup_fraction;
    opt_config.total_steps = config.epochs * batches_per_epoch;
    AdamW optimizer(model.trainable(), opt_config);

    std::mt19937_64 rng(config.seed);
    std::vector<size_t> order(examples.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (size_t start = 0; start < order.size(); start += config.batch_size) {
            size_t end = std::min(order.size(), start + config.batch_size);
            model.params().zero_grad();
            double batch_loss = 0.0;
            for (size_t i = start; i < end; ++i)
                batch_loss += model.loss(corpus, examples[order[i]], true);
            if (!std::isfinite(batch_loss))
                throw NumericError("reader training diverged (non-finite loss) at step " +
                                   std::to_string(optimizer.steps_taken()));
            const double inv = 1.0 / static_cast<double>(end - start);
            for (Tensor* t : model.trainable())
                for (double& g : t->grad) g *= inv;
            optimizer.step();
            ++stats.steps;
        }
    }

    stats.final_loss = mean_loss();
    return stats;
}

}  // namespace pathqa
