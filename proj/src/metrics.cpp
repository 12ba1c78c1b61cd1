#include "pathqa/metrics.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "pathqa/common.hpp"
#include "pathqa/text.hpp"

namespace pathqa {

std::vector<std::string> normalize_answer(const std::string& text) {
    // Lowercase + punctuation split is what tokenize() already does; the
    // SQuAD convention additionally removes articles.
    std::vector<std::string> tokens = tokenize(text);
    std::erase_if(tokens, [](const std::string& t) {
        return t == "a" || t == "an" || t == "the";
    });
    return tokens;
}

double token_f1(const std::string& prediction, const std::string& gold) {
    auto pred = normalize_answer(prediction);
    auto ref = normalize_answer(gold);
    if (pred.empty() || ref.empty()) return pred == ref ? 1.0 : 0.0;
    std::unordered_map<std::string, int> ref_counts;
    for (const auto& t : ref) ++ref_counts[t];
    int common = 0;
    for (const auto& t : pred) {
        auto it = ref_counts.find(t);
        if (it != ref_counts.end() && it->second > 0) {
            ++common;
            --it->second;
        }
    }
    if (common == 0) return 0.0;
    double precision = static_cast<double>(common) / pred.size();
    double recall = static_cast<double>(common) / ref.size();
    return 2.0 * precision * recall / (precision + recall);
}

bool exact_match(const std::string& prediction, const std::string& gold) {
    return normalize_answer(prediction) == normalize_answer(gold);
}

RetrievalMetrics eval_retrieval(const PredictedParagraphs& predicted,
                                const std::vector<TrainingQuestion>& gold,
                                const Corpus& corpus) {
    RetrievalMetrics m;
    double total_len = 0.0;
    for (const TrainingQuestion& tq : gold) {
        auto it = predicted.find(tq.qid);
        if (it == predicted.end()) throw DataError("missing prediction for qid " + tq.qid);
        const auto& para_ids = it->second;

        std::unordered_set<std::string> retrieved(para_ids.begin(), para_ids.end());
        bool any_gold = false, all_gold = true;
        for (const std::string& gid : tq.gold_para_ids) {
            bool hit = retrieved.count(gid) > 0;
            any_gold |= hit;
            all_gold &= hit;
        }
        bool answer_hit = false;
        if (tq.answer_type == AnswerType::kSpan) {
            for (const std::string& pid : para_ids) {
                auto node = corpus.find(pid);
                if (node && contains_answer(corpus.at(*node).text, tq.answers)) {
                    answer_hit = true;
                    break;
                }
            }
        } else {
            // Yes/no questions have no answer string; credit AR when the
            // full gold evidence was retrieved.
            answer_hit = all_gold;
        }

        m.answer_recall += answer_hit ? 1.0 : 0.0;
        m.paragraph_recall += any_gold ? 1.0 : 0.0;
        m.paragraph_em += all_gold ? 1.0 : 0.0;
        ++m.path_length_histogram[para_ids.size()];
        total_len += static_cast<double>(para_ids.size());
        ++m.num_questions;
    }
    if (m.num_questions) {
        double n = static_cast<double>(m.num_questions);
        m.answer_recall /= n;
        m.paragraph_recall /= n;
        m.paragraph_em /= n;
        m.avg_path_length = total_len / n;
    }
    return m;
}

AnswerMetrics eval_answers(const PredictedAnswers& predicted,
                           const std::vector<TrainingQuestion>& gold) {
    AnswerMetrics m;
    for (const TrainingQuestion& tq : gold) {
        auto it = predicted.find(tq.qid);
        if (it == predicted.end()) throw DataError("missing answer for qid " + tq.qid);
        const std::string& pred = it->second;

        std::vector<std::string> acceptable = tq.answers;
        if (tq.answer_type == AnswerType::kYes) acceptable.push_back("yes");
        if (tq.answer_type == AnswerType::kNo) acceptable.push_back("no");

        double best_f1 = 0.0;
        bool best_em = false;
        for (const std::string& ans : acceptable) {
            best_f1 = std::max(best_f1, token_f1(pred, ans));
            best_em = best_em || exact_match(pred, ans);
        }
        m.f1 += best_f1;
        m.em += best_em ? 1.0 : 0.0;
        ++m.num_questions;
    }
    if (m.num_questions) {
        m.f1 /= static_cast<double>(m.num_questions);
        m.em /= static_cast<double>(m.num_questions);
    }
    return m;
}

}  // namespace pathqa
