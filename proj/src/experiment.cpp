#include "pathqa/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <functional>
#include <thread>

#include <json.hpp>

#include "pathqa/common.hpp"

namespace pathqa {

using nlohmann::json;

PipelineOutput run_pipeline(const RetrieverModel& model, const ReaderModel* reader,
                            const Corpus& corpus, const WikiGraph& graph,
                            const SparseIndex& index,
                            const std::vector<TrainingQuestion>& questions,
                            const SearchConfig& search, size_t threads) {
    PipelineOutput out;
    out.paths.resize(questions.size());
    out.predictions.resize(questions.size());

    auto work = [&](size_t qi) {
        const TrainingQuestion& tq = questions[qi];
        std::vector<uint32_t> pool;
        const std::vector<uint32_t>* pool_ptr = nullptr;
        if (search.mode == SearchMode::kClosedPool) {
            for (const std::string& id : tq.pool_ids) pool.push_back(corpus.require(id));
            pool_ptr = &pool;
        }
        out.paths[qi] = retrieve_paths(model, corpus, graph, index, tq.question, search,
                                       pool_ptr);
        if (reader) out.predictions[qi] = reader->answer(corpus, tq.question, out.paths[qi]);
    };

    if (threads <= 1) {
        for (size_t qi = 0; qi < questions.size(); ++qi) work(qi);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> workers;
        for (size_t t = 0; t < threads; ++t) {
            workers.emplace_back([&] {
                for (size_t qi = next.fetch_add(1); qi < questions.size();
                     qi = next.fetch_add(1))
                    work(qi);
            });
        }
        for (auto& w : workers) w.join();
    }
    return out;
}

namespace {

std::vector<std::string> path_para_ids(const Corpus& corpus,
                                       const std::vector<uint32_t>& nodes) {
    std::vector<std::string> ids;
    ids.reserve(nodes.size());
    for (uint32_t n : nodes) ids.push_back(corpus.at(n).para_id);
    return ids;
}

StrategyResult eval_learned_strategy(const std::string& name, const RetrieverModel& model,
                                     const ReaderModel& reader, const Corpus& corpus,
                                     const WikiGraph& graph, const SparseIndex& index,
                                     const std::vector<TrainingQuestion>& questions,
                                     const SearchConfig& search, const ExperimentConfig& cfg,
                                     bool rerank_answers) {
    PipelineOutput out = run_pipeline(model, &reader, corpus, graph, index, questions, search,
                                      cfg.threads);
    StrategyResult row;
    row.name = name;

    PredictedParagraphs retrieved;
    PredictedAnswers answers;
    double total_reader_len = 0.0;
    size_t answered = 0;
    for (size_t qi = 0; qi < questions.size(); ++qi) {
        const auto& paths = out.paths[qi];
        std::vector<std::string> ids;
        if (!paths.empty()) {
            if (cfg.union_top_b) {
                std::vector<uint32_t> all;
                for (const auto& p : paths)
                    for (uint32_t n : p.nodes) all.push_back(n);
                std::sort(all.begin(), all.end());
                all.erase(std::unique(all.begin(), all.end()), all.end());
                ids = path_para_ids(corpus, all);
            } else {
                ids = path_para_ids(corpus, paths[0].nodes);
            }
        }
        retrieved[questions[qi].qid] = ids;

        AnswerPrediction pred = out.predictions[qi];
        if (!rerank_answers) {
            // Ablation: answer from the retriever's best path only.
            std::vector<ReasoningPath> top1;
            if (!paths.empty()) top1.push_back(paths[0]);
            pred = reader.answer(corpus, questions[qi].question, top1);
        }
        answers[questions[qi].qid] = pred.has_answer ? pred.answer_text : "";
        if (pred.has_answer) {
            total_reader_len += static_cast<double>(pred.path_nodes.size());
            ++row.reader_length_histogram[pred.path_nodes.size()];
            ++answered;
        }
    }

    row.retrieval = eval_retrieval(retrieved, questions, corpus);
    row.answers = eval_answers(answers, questions);
    if (answered) row.avg_reader_path_length = total_reader_len / answered;
    return row;
}

StrategyResult eval_pseudo_path_strategy(
    const std::string& name, const ReaderModel& reader, const Corpus& corpus,
    const std::vector<TrainingQuestion>& questions,
    const std::function<std::vector<uint32_t>(const TrainingQuestion&)>& retrieve_fn) {
    StrategyResult row;
    row.name = name;
    PredictedParagraphs retrieved;
    PredictedAnswers answers;
    double total_len = 0.0;
    size_t answered = 0;
    for (const TrainingQuestion& tq : questions) {
        std::vector<uint32_t> nodes = retrieve_fn(tq);
        retrieved[tq.qid] = path_para_ids(corpus, nodes);
        AnswerPrediction pred;
        if (!nodes.empty()) {
            std::vector<ReasoningPath> pseudo{{nodes, 0.0, true}};
            pred = reader.answer(corpus, tq.question, pseudo);
        }
        answers[tq.qid] = pred.has_answer ? pred.answer_text : "";
        if (pred.has_answer) {
            total_len += static_cast<double>(pred.path_nodes.size());
            ++row.reader_length_histogram[pred.path_nodes.size()];
            ++answered;
        }
    }
    row.retrieval = eval_retrieval(retrieved, questions, corpus);
    row.answers = eval_answers(answers, questions);
    if (answered) row.avg_reader_path_length = total_len / answered;
    return row;
}

}  // namespace

ExperimentReport run_experiment(const RetrieverModel& model,
                                const RetrieverModel& rerank_model, const ReaderModel& reader,
                                const Corpus& corpus, const WikiGraph& graph,
                                const SparseIndex& index,
                                const std::vector<TrainingQuestion>& eval_questions,
                                const ExperimentConfig& config) {
    ExperimentReport report;
    for (const std::string& name : config.strategies) {
        SearchConfig search = config.search;
        if (name == "adaptive") {
            search.mode = SearchMode::kAdaptive;
        } else if (name == "greedy") {
            search.mode = SearchMode::kGreedy;
        } else if (name == "norec") {
            search.mode = SearchMode::kNoRecurrence;
        } else if (name == "closed") {
            search.mode = SearchMode::kClosedPool;
        } else if (name.rfind("fixed:", 0) == 0) {
            search.mode = SearchMode::kFixed;
            search.fixed_len = static_cast<size_t>(std::stoul(name.substr(6)));
        } else if (name == "tfidf_top2") {
            report.rows.push_back(eval_pseudo_path_strategy(
                name, reader, corpus, eval_questions,
                [&](const TrainingQuestion& tq) { return baseline_tfidf_top2(index, tq.question); }));
            continue;
        } else if (name == "rerank") {
            report.rows.push_back(eval_pseudo_path_strategy(
                name, reader, corpus, eval_questions, [&](const TrainingQuestion& tq) {
                    return baseline_rerank(rerank_model, corpus, index, tq.question,
                                           config.rerank_pool);
                }));
            continue;
        } else if (name == "rerank_2hop") {
            report.rows.push_back(eval_pseudo_path_strategy(
                name, reader, corpus, eval_questions, [&](const TrainingQuestion& tq) {
                    return baseline_rerank_2hop(rerank_model, corpus, index, graph, tq.question,
                                                config.rerank_pool);
                }));
            continue;
        } else {
            throw UsageError("unknown strategy: " + name);
        }
        report.rows.push_back(eval_learned_strategy(name, model, reader, corpus, graph, index,
                                                    eval_questions, search, config,
                                                    /*rerank_answers=*/true));
        if (name == "adaptive" && config.no_rerank_ablation)
            report.rows.push_back(eval_learned_strategy("adaptive_norerank", model, reader,
                                                        corpus, graph, index, eval_questions,
                                                        search, config,
                                                        /*rerank_answers=*/false));
    }
    return report;
}

std::string ExperimentReport::to_json() const {
    json rows_json = json::array();
    for (const StrategyResult& row : rows) {
        json lengths = json::object();
        for (const auto& [len, count] : row.retrieval.path_length_histogram)
            lengths[std::to_string(len)] = count;
        json reader_lengths = json::object();
        for (const auto& [len, count] : row.reader_length_histogram)
            reader_lengths[std::to_string(len)] = count;
        json r{{"strategy", row.name},
               {"answer_recall", row.retrieval.answer_recall},
               {"paragraph_recall", row.retrieval.paragraph_recall},
               {"paragraph_em", row.retrieval.paragraph_em},
               {"num_questions", row.retrieval.num_questions},
               {"retriever_length_histogram", lengths},
               {"avg_retriever_path_length", row.retrieval.avg_path_length},
               {"reader_length_histogram", reader_lengths},
               {"avg_reader_path_length", row.avg_reader_path_length}};
        if (row.answers) {
            r["answer_f1"] = row.answers->f1;
            r["answer_em"] = row.answers->em;
        }
        rows_json.push_back(r);
    }
    return json{{"strategies", rows_json}}.dump(2);
}

std::string ExperimentReport::to_table() const {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof(line), "%-20s %6s %6s %6s %6s %6s %7s %7s\n", "strategy", "AR",
                  "PR", "P_EM", "F1", "EM", "L(retr)", "L(read)");
    out += line;
    out += std::string(70, '-') + "\n";
    for (const StrategyResult& row : rows) {
        std::snprintf(line, sizeof(line), "%-20s %6.3f %6.3f %6.3f %6.3f %6.3f %7.2f %7.2f\n",
                      row.name.c_str(), row.retrieval.answer_recall,
                      row.retrieval.paragraph_recall, row.retrieval.paragraph_em,
                      row.answers ? row.answers->f1 : 0.0, row.answers ? row.answers->em : 0.0,
                      row.retrieval.avg_path_length, row.avg_reader_path_length);
        out += line;
    }
    return out;
}

}  // namespace pathqa
