#include "pathqa/retriever.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "pathqa/common.hpp"
#include "pathqa/optim.hpp"

namespace pathqa {

namespace {

constexpr double kNormGuard = 1e-12;

// Ordering inside the beam: score first, then lexicographic node sequence,
// terminated before open (total order keeps pruning deterministic).
struct HypOrder {
    template <typename H>
    bool operator()(const H& a, const H& b) const {
        if (a.log_score != b.log_score) return a.log_score > b.log_score;
        if (a.nodes != b.nodes) return a.nodes < b.nodes;
        return a.terminated > b.terminated;
    }
};

std::vector<uint32_t> dedup_keep_order(const std::vector<uint32_t>& in) {
    std::vector<uint32_t> out;
    std::unordered_set<uint32_t> seen;
    for (uint32_t v : in)
        if (seen.insert(v).second) out.push_back(v);
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Model basics.

RetrieverModel::RetrieverModel(const EncoderConfig& encoder_config) : encoder_(encoder_config) {
    const uint64_t d = encoder_config.d;
    w_r_ = params_.add("retriever.w_r", {d, 2 * d});
    b_r_ = params_.add("retriever.b_r", {d}, /*no_decay=*/true);
    alpha_ = params_.add("retriever.alpha", {1}, /*no_decay=*/true);
    s_ = params_.add("retriever.s", {d});
    bias_ = params_.add("retriever.bias", {1}, /*no_decay=*/true);
    alpha_->value[0] = 1.0;  // alpha > 0 invariant holds from construction
}

void RetrieverModel::init_params(uint64_t seed) {
    encoder_.init_params(seed);
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    const size_t d = dim();
    // State block: small random. Candidate block: scaled identity, so the
    // fresh state keeps a component along the last encoding and inner
    // products with the next step's candidates begin as damped encoding
    // similarities.
    double fan_in = 1.0 / std::sqrt(2.0 * d);
    fill_uniform(w_r_->value, rng, -fan_in, fan_in);
    for (size_t i = 0; i < d; ++i) w_r_->value[i * 2 * d + d + i] += 0.3;
    std::fill(b_r_->value.begin(), b_r_->value.end(), 0.0);
    alpha_->value[0] = 1.0;
    fill_uniform(s_->value, rng, -0.1, 0.1);
    bias_->value[0] = 0.0;
}

Vec RetrieverModel::init_state(const Vec* question_vector) const {
    const bool independent = encoder_.config().mode == EncoderMode::kQuestionIndependent;
    if (independent && !question_vector)
        throw UsageError("question-independent mode requires a question vector");
    if (!independent && question_vector)
        throw UsageError("question vector supplied in question-dependent mode");
    double n = norm2(s_->value);
    if (n < kNormGuard) throw NumericError("initial state parameter has zero norm");
    Vec h = s_->value;
    scale(h, alpha() / n);
    if (independent) h = advance(h, *question_vector);
    return h;
}

double RetrieverModel::step_prob(const Vec& h, const Vec& w) const {
    return sigmoid(dot(w, h) + bias());
}

Vec RetrieverModel::advance(const Vec& h, const Vec& w) const {
    const size_t d = dim();
    Vec hw(2 * d);
    std::copy(h.begin(), h.end(), hw.begin());
    std::copy(w.begin(), w.end(), hw.begin() + d);
    Vec a(d);
    matvec(w_r_->value.data(), d, 2 * d, hw.data(), a.data());
    for (size_t i = 0; i < d; ++i) a[i] += b_r_->value[i];
    double n = norm2(a);
    if (n < kNormGuard) throw NumericError("RNN state collapsed to zero norm");
    scale(a, alpha() / n);
    return a;
}

std::vector<Tensor*> RetrieverModel::trainable() {
    auto out = encoder_.params().all();
    auto own = params_.all();
    out.insert(out.end(), own.begin(), own.end());
    return out;
}

void RetrieverModel::zero_grad() {
    encoder_.params().zero_grad();
    params_.zero_grad();
}

void RetrieverModel::save(const std::string& path) const {
    Tensor meta;
    meta.name = "encoder.meta";
    meta.dims = {6};
    const EncoderConfig& ec = encoder_.config();
    meta.value = {static_cast<double>(ec.d),
                  static_cast<double>(ec.bucket_count),
                  static_cast<double>(ec.ngram_order),
                  static_cast<double>(ec.max_tokens_per_side),
                  ec.mode == EncoderMode::kQuestionIndependent ? 1.0 : 0.0,
                  ec.std_eps};
    std::vector<const Tensor*> tensors{&meta};
    auto enc = encoder_.params().all();
    tensors.insert(tensors.end(), enc.begin(), enc.end());
    auto own = params_.all();
    tensors.insert(tensors.end(), own.begin(), own.end());
    write_checkpoint(path, tensors);
}

void RetrieverModel::load(const std::string& path) {
    Checkpoint ckpt = Checkpoint::read(path);
    encoder_.params().load_from(ckpt);
    params_.load_from(ckpt);
}

RetrieverModel RetrieverModel::from_checkpoint(const std::string& path) {
    Checkpoint ckpt = Checkpoint::read(path);
    const Tensor* meta = ckpt.find("encoder.meta");
    if (!meta || meta->value.size() != 6)
        throw DataError("checkpoint lacks a valid encoder.meta record: " + path);
    EncoderConfig cfg;
    cfg.d = static_cast<uint32_t>(meta->value[0]);
    cfg.bucket_count = static_cast<uint32_t>(meta->value[1]);
    cfg.ngram_order = static_cast<int>(meta->value[2]);
    cfg.max_tokens_per_side = static_cast<size_t>(meta->value[3]);
    cfg.mode = meta->value[4] != 0.0 ? EncoderMode::kQuestionIndependent
                                     : EncoderMode::kQuestionDependent;
    cfg.std_eps = meta->value[5];
    RetrieverModel model(cfg);
    model.encoder().params().load_from(ckpt);
    model.params().load_from(ckpt);
    return model;
}

// ---------------------------------------------------------------------------
// Candidate expansion.

std::vector<uint32_t> expand_candidates(const WikiGraph& graph,
                                        const std::vector<uint32_t>& path_nodes,
                                        const std::vector<uint32_t>& prev_candidates,
                                        const std::vector<double>& prev_probs,
                                        uint32_t selected, size_t carryover,
                                        const std::unordered_set<uint32_t>* pool) {
    std::unordered_set<uint32_t> on_path(path_nodes.begin(), path_nodes.end());

    std::vector<uint32_t> result;
    std::unordered_set<uint32_t> present;
    for (uint32_t v : graph.neighbors(selected)) {
        if (on_path.count(v)) continue;
        if (pool && !pool->count(v)) continue;
        if (present.insert(v).second) result.push_back(v);
    }

    // K best remaining members of the previous candidate set, by their step
    // probabilities (desc), ties by id.
    std::vector<size_t> order;
    for (size_t i = 0; i < prev_candidates.size(); ++i)
        if (prev_candidates[i] != selected && prev_candidates[i] != kEoeNode) order.push_back(i);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (prev_probs[a] != prev_probs[b]) return prev_probs[a] > prev_probs[b];
        return prev_candidates[a] < prev_candidates[b];
    });
    size_t taken = 0;
    for (size_t i : order) {
        if (taken >= carryover) break;
        uint32_t v = prev_candidates[i];
        ++taken;
        if (on_path.count(v) || !present.insert(v).second) continue;
        result.push_back(v);
    }

    result.push_back(kEoeNode);
    return result;
}

// ---------------------------------------------------------------------------
// Beam search and the exhaustive reference enumeration.

namespace {

struct Hyp {
    std::vector<uint32_t> nodes;
    double log_score = 0.0;
    bool terminated = false;
    std::shared_ptr<ScorerState> parent_state;  // state the last step was scored under
    std::shared_ptr<ScorerState> state;         // state for the next step (open hyps)
    std::shared_ptr<std::vector<uint32_t>> cand_set;
    std::shared_ptr<std::vector<double>> cand_probs;
};

// Candidate set for extending `nodes`, or empty to drop the hypothesis.
std::vector<uint32_t> step_candidates(const WikiGraph& graph, const SearchConfig& config,
                                      const std::vector<uint32_t>& nodes,
                                      const std::vector<uint32_t>& prev_cands,
                                      const std::vector<double>& prev_probs,
                                      const std::unordered_set<uint32_t>* pool) {
    const bool fixed = config.mode == SearchMode::kFixed;
    const size_t target = fixed ? config.fixed_len : config.max_len;
    if (nodes.size() >= target) return {kEoeNode};
    auto cands = expand_candidates(graph, nodes, prev_cands, prev_probs, nodes.back(),
                                   config.carryover, pool);
    if (fixed) {
        // End-of-evidence is suppressed before the fixed length; dead ends
        // (no paragraph candidates) drop the hypothesis.
        cands.pop_back();
    }
    return cands;
}

void validate_config(const SearchConfig& config) {
    if (config.beam < 1 || config.initial < 1 || config.max_len < 1)
        throw UsageError("beam, initial candidates and max_len must be >= 1");
    if (config.mode == SearchMode::kFixed &&
        (config.fixed_len < 1 || config.fixed_len > config.max_len))
        throw UsageError("fixed path length must satisfy 1 <= L <= max_len");
}

std::vector<ReasoningPath> finalize_paths(std::vector<ReasoningPath> paths, size_t limit) {
    std::sort(paths.begin(), paths.end(), HypOrder{});
    // Duplicate sequences keep the best score.
    std::vector<ReasoningPath> out;
    std::map<std::vector<uint32_t>, bool> seen;
    for (auto& p : paths) {
        if (seen.emplace(p.nodes, true).second) out.push_back(std::move(p));
        if (out.size() == limit) break;
    }
    return out;
}

}  // namespace

std::vector<ReasoningPath> beam_search_impl(PathScorer& scorer, const WikiGraph& graph,
                                            const std::vector<uint32_t>& initial_candidates,
                                            const SearchConfig& config,
                                            const std::unordered_set<uint32_t>* pool) {
    validate_config(config);
    const size_t beam_width = config.mode == SearchMode::kGreedy ? 1 : config.beam;

    auto c1 = dedup_keep_order(initial_candidates);
    if (pool) {
        std::erase_if(c1, [&](uint32_t v) { return !pool->count(v); });
    }
    if (c1.empty()) return {};

    auto h1 = std::make_shared<ScorerState>(scorer.init());
    auto c1_shared = std::make_shared<std::vector<uint32_t>>(c1);
    auto p1_shared = std::make_shared<std::vector<double>>();
    p1_shared->reserve(c1.size());
    for (uint32_t c : c1) p1_shared->push_back(scorer.prob(*h1, c));

    std::vector<Hyp> beam;
    for (size_t i = 0; i < c1.size(); ++i) {
        Hyp h;
        h.nodes = {c1[i]};
        h.log_score = std::log(clamp_prob((*p1_shared)[i]));
        h.parent_state = h1;
        h.cand_set = c1_shared;
        h.cand_probs = p1_shared;
        beam.push_back(std::move(h));
    }
    std::sort(beam.begin(), beam.end(), HypOrder{});
    if (beam.size() > beam_width) beam.resize(beam_width);

    auto ensure_state = [&](Hyp& h) {
        if (!h.terminated && !h.state)
            h.state = std::make_shared<ScorerState>(scorer.advance(*h.parent_state, h.nodes.back()));
    };
    for (auto& h : beam) ensure_state(h);

    while (std::any_of(beam.begin(), beam.end(), [](const Hyp& h) { return !h.terminated; })) {
        std::vector<Hyp> pool_hyps;
        for (Hyp& h : beam) {
            if (h.terminated) {
                pool_hyps.push_back(std::move(h));
                continue;
            }
            auto cands = step_candidates(graph, config, h.nodes, *h.cand_set, *h.cand_probs, pool);
            if (cands.empty()) continue;  // dead end in fixed mode
            auto cands_shared = std::make_shared<std::vector<uint32_t>>(cands);
            auto probs_shared = std::make_shared<std::vector<double>>();
            probs_shared->reserve(cands.size());
            for (uint32_t c : cands) probs_shared->push_back(scorer.prob(*h.state, c));

            for (size_t i = 0; i < cands.size(); ++i) {
                Hyp child;
                child.nodes = h.nodes;
                child.log_score = h.log_score;
                child.parent_state = h.state;
                child.cand_set = cands_shared;
                child.cand_probs = probs_shared;
                if (cands[i] == kEoeNode) {
                    child.terminated = true;
                    if (config.eoe_in_score)
                        child.log_score += std::log(clamp_prob((*probs_shared)[i]));
                } else {
                    child.nodes.push_back(cands[i]);
                    child.log_score += std::log(clamp_prob((*probs_shared)[i]));
                }
                pool_hyps.push_back(std::move(child));
            }
        }

        std::sort(pool_hyps.begin(), pool_hyps.end(), HypOrder{});
        // Dedup on (sequence, terminated); the sort put the best first.
        std::map<std::pair<std::vector<uint32_t>, bool>, bool> seen;
        beam.clear();
        for (auto& h : pool_hyps) {
            if (!seen.emplace(std::make_pair(h.nodes, h.terminated), true).second) continue;
            beam.push_back(std::move(h));
            if (beam.size() == beam_width) break;
        }
        for (auto& h : beam) ensure_state(h);
        if (beam.empty()) break;
    }

    std::vector<ReasoningPath> out;
    for (Hyp& h : beam) {
        if (!h.terminated) continue;
        out.push_back({std::move(h.nodes), h.log_score, true});
    }
    return finalize_paths(std::move(out), beam_width);
}

std::vector<ReasoningPath> beam_search(PathScorer& scorer, const WikiGraph& graph,
                                       const std::vector<uint32_t>& initial_candidates,
                                       const SearchConfig& config) {
    return beam_search_impl(scorer, graph, initial_candidates, config, nullptr);
}

namespace {

void enumerate_rec(PathScorer& scorer, const WikiGraph& graph, const SearchConfig& config,
                   const std::unordered_set<uint32_t>* pool, std::vector<uint32_t>& nodes,
                   double log_score, const ScorerState& state,
                   const std::vector<uint32_t>& prev_cands, const std::vector<double>& prev_probs,
                   std::vector<ReasoningPath>& out) {
    auto cands = step_candidates(graph, config, nodes, prev_cands, prev_probs, pool);
    std::vector<double> probs;
    probs.reserve(cands.size());
    for (uint32_t c : cands) probs.push_back(scorer.prob(state, c));
    for (size_t i = 0; i < cands.size(); ++i) {
        if (cands[i] == kEoeNode) {
            double s = log_score;
            if (config.eoe_in_score) s += std::log(clamp_prob(probs[i]));
            out.push_back({nodes, s, true});
        } else {
            nodes.push_back(cands[i]);
            ScorerState next = scorer.advance(state, cands[i]);
            enumerate_rec(scorer, graph, config, pool, nodes,
                          log_score + std::log(clamp_prob(probs[i])), next, cands, probs, out);
            nodes.pop_back();
        }
    }
}

}  // namespace

std::vector<ReasoningPath> enumerate_all_paths(PathScorer& scorer, const WikiGraph& graph,
                                               const std::vector<uint32_t>& initial_candidates,
                                               const SearchConfig& config) {
    validate_config(config);
    auto c1 = dedup_keep_order(initial_candidates);
    if (c1.empty()) return {};
    ScorerState h1 = scorer.init();
    std::vector<double> p1;
    p1.reserve(c1.size());
    for (uint32_t c : c1) p1.push_back(scorer.prob(h1, c));

    std::vector<ReasoningPath> out;
    for (size_t i = 0; i < c1.size(); ++i) {
        std::vector<uint32_t> nodes{c1[i]};
        ScorerState state = scorer.advance(h1, c1[i]);
        enumerate_rec(scorer, graph, config, nullptr, nodes, std::log(clamp_prob(p1[i])), state,
                      c1, p1, out);
    }
    return finalize_paths(std::move(out), out.size());
}

// ---------------------------------------------------------------------------
// Neural scorer.

NeuralPathScorer::NeuralPathScorer(const RetrieverModel& model, const Corpus& corpus,
                                   std::string question, bool recurrence)
    : model_(model), corpus_(corpus), question_(std::move(question)), recurrence_(recurrence) {}

ScorerState NeuralPathScorer::init() {
    if (model_.encoder().config().mode == EncoderMode::kQuestionIndependent) {
        ++encoder_calls_;
        Vec wq = model_.encoder().encode_question(question_);
        return {model_.init_state(&wq), {}};
    }
    return {model_.init_state(), {}};
}

const Vec& NeuralPathScorer::candidate_vector(uint32_t candidate) {
    if (candidate == kEoeNode) {
        if (!eoe_ready_) {
            eoe_ = model_.encoder().eoe_vector();
            eoe_ready_ = true;
        }
        return eoe_;
    }
    auto it = cache_.find(candidate);
    if (it != cache_.end()) return it->second;
    ++encoder_calls_;
    const std::string& text = corpus_.at(candidate).text;
    Vec w = model_.encoder().config().mode == EncoderMode::kQuestionIndependent
                ? model_.encoder().encode_paragraph(text)
                : model_.encoder().encode_pair(question_, text);
    return cache_.emplace(candidate, std::move(w)).first->second;
}

double NeuralPathScorer::prob(const ScorerState& state, uint32_t candidate) {
    return model_.step_prob(state.h, candidate_vector(candidate));
}

ScorerState NeuralPathScorer::advance(const ScorerState& state, uint32_t selected) {
    ScorerState next;
    next.h = recurrence_ ? model_.advance(state.h, candidate_vector(selected)) : state.h;
    next.trace = state.trace;
    next.trace.push_back(selected);
    return next;
}

std::vector<ReasoningPath> retrieve_paths(const RetrieverModel& model, const Corpus& corpus,
                                          const WikiGraph& graph, const SparseIndex& index,
                                          const std::string& question, const SearchConfig& config,
                                          const std::vector<uint32_t>* closed_pool,
                                          size_t* encoder_calls) {
    validate_config(config);
    std::vector<uint32_t> c1;
    std::unordered_set<uint32_t> pool_set;
    const std::unordered_set<uint32_t>* pool = nullptr;
    if (config.mode == SearchMode::kClosedPool) {
        if (!closed_pool) throw UsageError("closed-pool mode requires a candidate pool");
        c1 = *closed_pool;
        pool_set.insert(closed_pool->begin(), closed_pool->end());
        pool = &pool_set;
    } else {
        for (const auto& hit : index.top_f(question, config.initial)) c1.push_back(hit.doc);
    }

    NeuralPathScorer scorer(model, corpus, question,
                            /*recurrence=*/config.mode != SearchMode::kNoRecurrence);
    auto paths = beam_search_impl(scorer, graph, c1, config, pool);
    if (encoder_calls) *encoder_calls = scorer.encoder_calls();
    return paths;
}

// ---------------------------------------------------------------------------
// Loss and training.

double retriever_loss(RetrieverModel& model, const Corpus& corpus,
                      const RetrieverExampleData& example, bool accumulate_grads,
                      bool recurrence) {
    const size_t d = model.dim();
    const size_t k = example.gold_nodes.size();
    const size_t steps = k + 1;  // terminal end-of-evidence step included
    if (example.negatives.size() != steps)
        throw UsageError("expected one negative set per step (gold length + 1)");
    EncoderModel& enc = model.encoder();
    const bool independent = enc.config().mode == EncoderMode::kQuestionIndependent;

    // Encode each distinct item once; gradients accumulate per item.
    struct Encoded {
        Vec w;
        EncodeCache cache;
        Vec upstream;
    };
    std::unordered_map<uint32_t, Encoded> items;  // node or kEoeNode
    auto encode_item = [&](uint32_t c) -> Encoded& {
        auto it = items.find(c);
        if (it != items.end()) return it->second;
        Encoded e;
        if (c == kEoeNode) {
            e.w = enc.eoe_vector(&e.cache);
        } else if (independent) {
            e.w = enc.encode_paragraph(corpus.at(c).text, &e.cache);
        } else {
            e.w = enc.encode_pair(example.question, corpus.at(c).text, &e.cache);
        }
        e.upstream.assign(d, 0.0);
        return items.emplace(c, std::move(e)).first->second;
    };

    // Initial state.
    Vec s_hat = model.s_->value;
    double s_norm = norm2(s_hat);
    if (s_norm < kNormGuard) throw NumericError("initial state parameter has zero norm");
    scale(s_hat, 1.0 / s_norm);
    Vec h1_base = s_hat;
    scale(h1_base, model.alpha());

    EncodeCache q_cache;
    Vec wq;
    struct AdvanceRecord {
        Vec h_in;
        Vec w_in;
        Vec a;  // pre-normalization
        double a_norm = 0.0;
    };
    AdvanceRecord init_adv;
    Vec h = h1_base;
    if (independent) {
        wq = enc.encode_question(example.question, &q_cache);
        init_adv.h_in = h1_base;
        init_adv.w_in = wq;
        Vec hw(2 * d);
        std::copy(h1_base.begin(), h1_base.end(), hw.begin());
        std::copy(wq.begin(), wq.end(), hw.begin() + d);
        init_adv.a.resize(d);
        matvec(model.w_r_->value.data(), d, 2 * d, hw.data(), init_adv.a.data());
        for (size_t i = 0; i < d; ++i) init_adv.a[i] += model.b_r_->value[i];
        init_adv.a_norm = norm2(init_adv.a);
        if (init_adv.a_norm < kNormGuard) throw NumericError("RNN state collapsed to zero norm");
        h = init_adv.a;
        scale(h, model.alpha() / init_adv.a_norm);
    }

    struct StepRecord {
        Vec h;
        std::vector<uint32_t> cands;  // gold first, then negatives
        std::vector<double> probs;
        AdvanceRecord adv;  // filled for steps that advance
        bool advanced = false;
    };
    std::vector<StepRecord> records(steps);

    double loss = 0.0;
    for (size_t t = 0; t < steps; ++t) {
        StepRecord& rec = records[t];
        rec.h = h;
        uint32_t gold = t < k ? example.gold_nodes[t] : kEoeNode;
        rec.cands.push_back(gold);
        for (uint32_t n : example.negatives[t]) rec.cands.push_back(n);
        rec.probs.reserve(rec.cands.size());
        for (size_t i = 0; i < rec.cands.size(); ++i) {
            const Encoded& e = encode_item(rec.cands[i]);
            double p = model.step_prob(h, e.w);
            rec.probs.push_back(p);
            loss += i == 0 ? -std::log(clamp_prob(p)) : -std::log(1.0 - clamp_prob(p));
        }
        if (t < k && recurrence) {
            const Encoded& gw = encode_item(gold);
            rec.adv.h_in = h;
            rec.adv.w_in = gw.w;
            Vec hw(2 * d);
            std::copy(h.begin(), h.end(), hw.begin());
            std::copy(gw.w.begin(), gw.w.end(), hw.begin() + d);
            rec.adv.a.resize(d);
            matvec(model.w_r_->value.data(), d, 2 * d, hw.data(), rec.adv.a.data());
            for (size_t i = 0; i < d; ++i) rec.adv.a[i] += model.b_r_->value[i];
            rec.adv.a_norm = norm2(rec.adv.a);
            if (rec.adv.a_norm < kNormGuard)
                throw NumericError("RNN state collapsed to zero norm");
            h = rec.adv.a;
            scale(h, model.alpha() / rec.adv.a_norm);
            rec.advanced = true;
        }
    }

    if (!accumulate_grads) return loss;

    // Backward pass. d(advance)/d(inputs): h' = alpha * a / ||a||.
    auto backprop_advance = [&](const AdvanceRecord& adv, const Vec& dh_out, Vec& dh_in,
                                Vec& dw_in) {
        const double n = adv.a_norm;
        Vec a_hat = adv.a;
        scale(a_hat, 1.0 / n);
        double along = dot(a_hat, dh_out);
        model.alpha_->grad[0] += along;
        Vec da(d);
        const double alpha = model.alpha();
        for (size_t i = 0; i < d; ++i) da[i] = (alpha / n) * (dh_out[i] - a_hat[i] * along);
        Vec hw_grad(2 * d);
        matvec_t(model.w_r_->value.data(), d, 2 * d, da.data(), hw_grad.data());
        for (size_t i = 0; i < d; ++i) {
            model.b_r_->grad[i] += da[i];
            double* row = model.w_r_->grad.data() + i * 2 * d;
            for (size_t j = 0; j < d; ++j) {
                row[j] += da[i] * adv.h_in[j];
                row[d + j] += da[i] * adv.w_in[j];
            }
        }
        for (size_t i = 0; i < d; ++i) {
            dh_in[i] += hw_grad[i];
            dw_in[i] += hw_grad[d + i];
        }
    };

    Vec dh_next(d, 0.0);       // gradient wrt the state after the step below
    Vec dh1_frozen(d, 0.0);    // no-recurrence: every step reads h1 directly
    for (size_t t = steps; t-- > 0;) {
        StepRecord& rec = records[t];
        Vec dh(d, 0.0);
        if (rec.advanced) {
            uint32_t gold = rec.cands[0];
            Vec dw_gold(d, 0.0);
            backprop_advance(rec.adv, dh_next, dh, dw_gold);
            axpy(1.0, dw_gold, items.at(gold).upstream);
        }
        for (size_t i = 0; i < rec.cands.size(); ++i) {
            double p = rec.probs[i];
            if (p <= 1e-12 || p >= 1.0 - 1e-12) continue;  // clipped: flat loss
            double gz = i == 0 ? p - 1.0 : p;
            model.bias_->grad[0] += gz;
            Encoded& e = items.at(rec.cands[i]);
            axpy(gz, e.w, dh);
            axpy(gz, rec.h, e.upstream);
        }
        if (recurrence) {
            dh_next = std::move(dh);
        } else {
            axpy(1.0, dh, dh1_frozen);
            dh_next.assign(d, 0.0);
        }
    }
    Vec dh1 = recurrence ? dh_next : dh1_frozen;

    if (independent) {
        Vec dh1_base(d, 0.0);
        Vec dwq(d, 0.0);
        backprop_advance(init_adv, dh1, dh1_base, dwq);
        enc.backward(q_cache, dwq);
        dh1 = dh1_base;
    }

    // h1 = alpha * s / ||s||.
    double along = dot(s_hat, dh1);
    model.alpha_->grad[0] += along;
    const double alpha = model.alpha();
    for (size_t i = 0; i < d; ++i)
        model.s_->grad[i] += (alpha / s_norm) * (dh1[i] - s_hat[i] * along);

    for (auto& [node, e] : items) enc.backward(e.cache, e.upstream);
    return loss;
}

TrainStats train_retriever(RetrieverModel& model, const Corpus& corpus,
                           const std::vector<RetrieverExampleData>& examples,
                           const TrainConfig& config) {
    if (examples.empty()) throw UsageError("no training examples");

    auto mean_loss = [&]() {
        double total = 0.0;
        for (const auto& ex : examples)
            total += retriever_loss(model, corpus, ex, /*accumulate_grads=*/false,
                                    config.recurrence);
        return total / static_cast<double>(examples.size());
    };

    TrainStats stats;
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
            model.zero_grad();
            double batch_loss = 0.0;
            for (size_t i = start; i < end; ++i)
                batch_loss += retriever_loss(model, corpus, examples[order[i]],
                                             /*accumulate_grads=*/true, config.recurrence);
            if (!std::isfinite(batch_loss))
                throw NumericError("retriever training diverged (non-finite loss) at step " +
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
