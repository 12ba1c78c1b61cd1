#include "pathqa/supervision.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "pathqa/common.hpp"
#include "pathqa/text.hpp"

namespace pathqa {

using nlohmann::json;

std::vector<TrainingQuestion> load_questions(const std::string& path) {
    std::vector<TrainingQuestion> out;
    size_t line_no = 0;
    for (const std::string& line : read_lines(path)) {
        ++line_no;
        if (line.empty()) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object())
            throw DataError(path + ":" + std::to_string(line_no) + ": malformed JSON line");
        try {
            TrainingQuestion tq;
            tq.qid = rec.at("qid").get<std::string>();
            tq.question = rec.at("question").get<std::string>();
            tq.answers = rec.at("answers").get<std::vector<std::string>>();
            tq.gold_para_ids = rec.at("gold_paras").get<std::vector<std::string>>();
            if (rec.contains("answer_bearing") && !rec["answer_bearing"].is_null())
                tq.answer_bearing_id = rec["answer_bearing"].get<std::string>();
            tq.answer_type = answer_type_from_name(rec.at("answer_type").get<std::string>());
            if (rec.contains("pool")) tq.pool_ids = rec["pool"].get<std::vector<std::string>>();
            if (tq.answers.empty() && tq.answer_type == AnswerType::kSpan)
                throw DataError("span question without answer strings: " + tq.qid);
            out.push_back(std::move(tq));
        } catch (const json::exception& e) {
            throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

void write_questions(const std::vector<TrainingQuestion>& questions, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    for (const TrainingQuestion& tq : questions) {
        json rec{{"qid", tq.qid},
                 {"question", tq.question},
                 {"answers", tq.answers},
                 {"gold_paras", tq.gold_para_ids},
                 {"answer_type", answer_type_name(tq.answer_type)}};
        rec["answer_bearing"] =
            tq.answer_bearing_id ? json(*tq.answer_bearing_id) : json(nullptr);
        if (!tq.pool_ids.empty()) rec["pool"] = tq.pool_ids;
        out << rec.dump() << "\n";
    }
    if (!out) throw DataError("write failed: " + path);
}

std::optional<std::pair<size_t, size_t>> find_answer_span(
    const std::vector<std::string>& text_tokens, const std::vector<std::string>& answers) {
    std::optional<std::pair<size_t, size_t>> best;
    for (const std::string& answer : answers) {
        auto ans_tokens = tokenize(answer);
        if (ans_tokens.empty() || ans_tokens.size() > text_tokens.size()) continue;
        for (size_t i = 0; i + ans_tokens.size() <= text_tokens.size(); ++i) {
            bool match = true;
            for (size_t k = 0; k < ans_tokens.size(); ++k) {
                if (text_tokens[i + k] != ans_tokens[k]) {
                    match = false;
                    break;
                }
            }
            if (match) {
                if (!best || i < best->first) best = {i, i + ans_tokens.size() - 1};
                break;  // earliest occurrence of this answer found
            }
        }
    }
    return best;
}

bool contains_answer(const std::string& text, const std::vector<std::string>& answers) {
    return find_answer_span(tokenize(text), answers).has_value();
}

std::vector<uint32_t> derive_gold_path(const TrainingQuestion& tq, const Corpus& corpus,
                                       const WikiGraph& graph) {
    std::vector<uint32_t> nodes;
    for (const std::string& id : tq.gold_para_ids) nodes.push_back(corpus.require(id));
    if (nodes.empty()) throw DataError("question " + tq.qid + " has no gold paragraphs");
    if (nodes.size() == 1) return nodes;
    if (nodes.size() > 2)
        throw DataError("question " + tq.qid + " has more than two gold paragraphs");

    uint32_t a = nodes[0], b = nodes[1];
    auto ordered = [](uint32_t first, uint32_t last) {
        return std::vector<uint32_t>{first, last};
    };

    if (tq.answer_bearing_id) {
        uint32_t bearing = corpus.require(*tq.answer_bearing_id);
        if (bearing != a && bearing != b)
            throw DataError("answer_bearing is not a gold paragraph for " + tq.qid);
        return ordered(bearing == a ? b : a, bearing);
    }

    auto linked = [&](uint32_t u, uint32_t v) {
        const auto& adj = graph.neighbors(u);
        return std::binary_search(adj.begin(), adj.end(), v);
    };
    auto link_order = [&]() -> std::vector<uint32_t> {
        if (linked(a, b) && !linked(b, a)) return ordered(a, b);
        if (linked(b, a) && !linked(a, b)) return ordered(b, a);
        return ordered(std::min(a, b), std::max(a, b));
    };

    if (tq.answer_type != AnswerType::kSpan) return link_order();

    bool in_a = contains_answer(corpus.at(a).text, tq.answers);
    bool in_b = contains_answer(corpus.at(b).text, tq.answers);
    if (in_a && in_b) return link_order();  // answer-bearing tie: bridge direction decides
    if (in_b) return ordered(a, b);
    if (in_a) return ordered(b, a);
    throw DataError("question " + tq.qid +
                    ": neither gold paragraph contains an answer string (ordering error)");
}

std::optional<uint32_t> augment_path(const std::vector<uint32_t>& gold_nodes,
                                     const std::vector<ScoredDoc>& tfidf_ranked,
                                     const WikiGraph& graph) {
    if (gold_nodes.empty()) return std::nullopt;
    uint32_t first = gold_nodes[0];
    for (const ScoredDoc& hit : tfidf_ranked) {
        if (std::find(gold_nodes.begin(), gold_nodes.end(), hit.doc) != gold_nodes.end())
            continue;
        const auto& adj = graph.neighbors(hit.doc);
        if (std::binary_search(adj.begin(), adj.end(), first)) return hit.doc;
    }
    return std::nullopt;
}

std::vector<std::vector<uint32_t>> mine_negatives(const TrainingQuestion& tq,
                                                  const std::vector<uint32_t>& gold_nodes,
                                                  const SparseIndex& index,
                                                  const WikiGraph& graph, const Corpus& corpus,
                                                  size_t n,
                                                  std::optional<uint32_t> excluded_pr) {
    const size_t k = gold_nodes.size();
    const size_t steps = k + 1;
    const bool single_hop = k == 1;
    std::unordered_set<uint32_t> gold_set(gold_nodes.begin(), gold_nodes.end());

    // Ranked TF-IDF pool, gold excluded.
    std::vector<uint32_t> tfidf_pool;
    for (const ScoredDoc& hit : index.top_f(tq.question, n + k + 8))
        if (!gold_set.count(hit.doc)) tfidf_pool.push_back(hit.doc);

    std::vector<std::vector<uint32_t>> negatives(steps);
    for (size_t t = 0; t < steps; ++t) {
        const bool has_eoe = t < k;  // [EOE] negative on every step before the terminal one
        const size_t para_cap = has_eoe && n > 0 ? n - 1 : n;
        std::unordered_set<uint32_t> used;
        auto& set = negatives[t];

        if (t >= 1 && !single_hop) {
            // Hyperlink negatives: out-neighbors of the previous gold
            // selection, minus gold and answer-bearing paragraphs.
            for (uint32_t v : graph.neighbors(gold_nodes[t - 1])) {
                if (set.size() >= para_cap) break;
                if (gold_set.count(v)) continue;
                if (!tq.answers.empty() && contains_answer(corpus.at(v).text, tq.answers))
                    continue;
                if (used.insert(v).second) set.push_back(v);
            }
        }
        for (uint32_t v : tfidf_pool) {
            if (set.size() >= para_cap) break;
            if (excluded_pr && t == 0 && v == *excluded_pr) continue;
            if (used.insert(v).second) set.push_back(v);
        }
        if (has_eoe) set.push_back(kEoeNode);
    }
    return negatives;
}

namespace {

// Supervised gold reader example; the span target lives in the final
// (answer-bearing) paragraph.
std::optional<ReaderExample> build_gold_reader_example(const TrainingQuestion& tq,
                                                       const Corpus& corpus,
                                                       const std::vector<uint32_t>& gold_nodes,
                                                       std::vector<std::string>* warnings) {
    ReaderExample ex;
    ex.qid = tq.qid;
    ex.question = tq.question;
    ex.path_nodes = gold_nodes;
    ex.gold_label = true;
    ex.answer_type = tq.answer_type;
    if (tq.answer_type == AnswerType::kSpan) {
        size_t last = gold_nodes.size() - 1;
        auto span = find_answer_span(tokenize(corpus.at(gold_nodes[last]).text), tq.answers);
        if (!span) {
            if (warnings)
                warnings->push_back("question " + tq.qid +
                                    ": no answer span in the answer-bearing paragraph");
            return std::nullopt;
        }
        ex.has_span = true;
        ex.span_para = last;
        ex.span_start = span->first;
        ex.span_end = span->second;
    }
    return ex;
}

}  // namespace

std::optional<ReaderExample> build_distant_example(const TrainingQuestion& tq,
                                                   const Corpus& corpus,
                                                   const SparseIndex& index,
                                                   const std::vector<uint32_t>& gold_nodes,
                                                   size_t scan_limit) {
    if (tq.answer_type != AnswerType::kSpan) return std::nullopt;
    std::unordered_set<uint32_t> gold_set(gold_nodes.begin(), gold_nodes.end());
    for (const ScoredDoc& hit : index.top_f(tq.question, scan_limit)) {
        if (gold_set.count(hit.doc)) continue;
        auto span = find_answer_span(tokenize(corpus.at(hit.doc).text), tq.answers);
        if (!span) continue;
        ReaderExample ex;
        ex.qid = tq.qid;
        ex.question = tq.question;
        ex.path_nodes = {hit.doc};
        ex.gold_label = true;
        ex.distant = true;
        ex.answer_type = AnswerType::kSpan;
        ex.has_span = true;
        ex.span_para = 0;
        ex.span_start = span->first;
        ex.span_end = span->second;
        return ex;
    }
    return std::nullopt;
}

std::optional<ReaderExample> build_reader_negative(const TrainingQuestion& tq,
                                                   const Corpus& corpus,
                                                   const SparseIndex& index,
                                                   const std::vector<uint32_t>& gold_nodes,
                                                   size_t pool_limit) {
    std::unordered_set<uint32_t> gold_set(gold_nodes.begin(), gold_nodes.end());
    for (const ScoredDoc& hit : index.top_f(tq.question, pool_limit)) {
        if (gold_set.count(hit.doc)) continue;
        if (!tq.answers.empty() && contains_answer(corpus.at(hit.doc).text, tq.answers))
            continue;
        ReaderExample ex;
        ex.qid = tq.qid;
        ex.question = tq.question;
        ex.path_nodes = gold_nodes;
        ex.path_nodes.back() = hit.doc;  // swap the answer-bearing paragraph
        ex.gold_label = false;           // distorted: span loss masked
        ex.answer_type = tq.answer_type;
        return ex;
    }
    return std::nullopt;
}

BuiltExamples build_examples(const std::vector<TrainingQuestion>& questions,
                             const Corpus& corpus, const WikiGraph& graph,
                             const SparseIndex& index, const SupervisionConfig& config) {
    BuiltExamples out;
    for (const TrainingQuestion& tq : questions) {
        std::vector<uint32_t> gold;
        try {
            gold = derive_gold_path(tq, corpus, graph);
        } catch (const DataError& e) {
            ++out.questions_skipped;
            out.warnings.push_back(e.what());
            continue;
        }
        ++out.questions_used;

        auto tfidf_ranked = index.top_f(tq.question, config.tfidf_pool);
        std::optional<uint32_t> pr;
        if (config.augment) pr = augment_path(gold, tfidf_ranked, graph);

        auto negatives =
            mine_negatives(tq, gold, index, graph, corpus, config.negative_count, pr);

        RetrieverExampleData ex;
        ex.question = tq.question;
        ex.gold_nodes = gold;
        ex.negatives = negatives;
        out.retriever.push_back(ex);

        if (pr) {
            // Augmented path g_r = [p_r] + g reuses the per-step sets shifted
            // by one; the first two steps share the TF-IDF set.
            RetrieverExampleData aug;
            aug.question = tq.question;
            aug.gold_nodes.push_back(*pr);
            aug.gold_nodes.insert(aug.gold_nodes.end(), gold.begin(), gold.end());
            aug.negatives.push_back(negatives[0]);
            for (const auto& set : negatives) aug.negatives.push_back(set);
            // Keep the end-of-evidence membership rule: present before the
            // terminal step only, and never list path members as negatives.
            const size_t steps = aug.gold_nodes.size() + 1;
            std::unordered_set<uint32_t> on_path(aug.gold_nodes.begin(), aug.gold_nodes.end());
            for (size_t t = 0; t < steps; ++t) {
                auto& set = aug.negatives[t];
                std::erase_if(set, [&](uint32_t v) {
                    if (v == kEoeNode) return t + 1 == steps;
                    return on_path.count(v) > 0;
                });
                if (t + 1 < steps &&
                    std::find(set.begin(), set.end(), kEoeNode) == set.end())
                    set.push_back(kEoeNode);
            }
            out.retriever.push_back(std::move(aug));
        }

        if (auto gold_ex = build_gold_reader_example(tq, corpus, gold, &out.warnings))
            out.reader.push_back(std::move(*gold_ex));
        if (config.distant) {
            if (auto distant = build_distant_example(tq, corpus, index, gold))
                out.reader.push_back(std::move(*distant));
        }
        if (config.reader_negatives) {
            if (auto neg = build_reader_negative(tq, corpus, index, gold))
                out.reader.push_back(std::move(*neg));
            else
                out.warnings.push_back("question " + tq.qid +
                                       ": no answer-free distorted path available");
        }
    }
    return out;
}

void write_examples_jsonl(const BuiltExamples& examples, const Corpus& corpus,
                          const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    auto id_of = [&](uint32_t node) {
        return node == kEoeNode ? std::string("[EOE]") : corpus.at(node).para_id;
    };
    for (const auto& ex : examples.retriever) {
        json rec;
        rec["kind"] = "retriever";
        rec["question"] = ex.question;
        json gold = json::array();
        for (uint32_t v : ex.gold_nodes) gold.push_back(id_of(v));
        gold.push_back("[EOE]");
        rec["gold_path"] = gold;
        json negs = json::array();
        for (const auto& set : ex.negatives) {
            json one = json::array();
            for (uint32_t v : set) one.push_back(id_of(v));
            negs.push_back(one);
        }
        rec["negatives"] = negs;
        out << rec.dump() << "\n";
    }
    for (const auto& ex : examples.reader) {
        json rec;
        rec["kind"] = "reader";
        rec["qid"] = ex.qid;
        rec["question"] = ex.question;
        json nodes = json::array();
        for (uint32_t v : ex.path_nodes) nodes.push_back(id_of(v));
        rec["path"] = nodes;
        rec["label"] = ex.gold_label ? "gold" : "distorted";
        rec["origin"] = ex.distant ? "distant" : "supervised";
        rec["answer_type"] = answer_type_name(ex.answer_type);
        if (ex.has_span)
            rec["span"] = {{"para", ex.span_para}, {"start", ex.span_start}, {"end", ex.span_end}};
        out << rec.dump() << "\n";
    }
    if (!out) throw DataError("write failed: " + path);
}

}  // namespace pathqa
