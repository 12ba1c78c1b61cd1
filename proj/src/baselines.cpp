#include "pathqa/baselines.hpp"

#include <algorithm>
#include <unordered_set>

namespace pathqa {

namespace {

std::vector<uint32_t> rank_top2(const RetrieverModel& model, const Corpus& corpus,
                                const std::string& question,
                                const std::vector<uint32_t>& pool) {
    NeuralPathScorer scorer(model, corpus, question, /*recurrence=*/false);
    ScorerState h1 = scorer.init();
    struct Scored {
        uint32_t node;
        double prob;
    };
    std::vector<Scored> scored;
    scored.reserve(pool.size());
    for (uint32_t node : pool) scored.push_back({node, scorer.prob(h1, node)});
    std::sort(scored.begin(), scored.end(), [&](const Scored& a, const Scored& b) {
        if (a.prob != b.prob) return a.prob > b.prob;
        return corpus.at(a.node).para_id < corpus.at(b.node).para_id;
    });
    std::vector<uint32_t> out;
    for (size_t i = 0; i < scored.size() && i < 2; ++i) out.push_back(scored[i].node);
    return out;
}

}  // namespace

std::vector<uint32_t> baseline_tfidf_top2(const SparseIndex& index,
                                          const std::string& question) {
    std::vector<uint32_t> out;
    for (const ScoredDoc& hit : index.top_f(question, 2)) out.push_back(hit.doc);
    return out;
}

std::vector<uint32_t> baseline_rerank(const RetrieverModel& model, const Corpus& corpus,
                                      const SparseIndex& index, const std::string& question,
                                      size_t f) {
    std::vector<uint32_t> pool;
    for (const ScoredDoc& hit : index.top_f(question, f)) pool.push_back(hit.doc);
    return rank_top2(model, corpus, question, pool);
}

std::vector<uint32_t> baseline_rerank_2hop(const RetrieverModel& model, const Corpus& corpus,
                                           const SparseIndex& index, const WikiGraph& graph,
                                           const std::string& question, size_t f) {
    std::vector<uint32_t> pool;
    std::unordered_set<uint32_t> seen;
    for (const ScoredDoc& hit : index.top_f(question, f))
        if (seen.insert(hit.doc).second) pool.push_back(hit.doc);
    const size_t tfidf_count = pool.size();
    for (size_t i = 0; i < tfidf_count; ++i)
        for (uint32_t v : graph.neighbors(pool[i]))
            if (seen.insert(v).second) pool.push_back(v);
    return rank_top2(model, corpus, question, pool);
}

}  // namespace pathqa
