// Command-line front end: corpus/graph/index building, synthetic benchmark
// generation, training, retrieval, answering, evaluation and experiments.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pathqa/baselines.hpp"
#include "pathqa/common.hpp"
#include "pathqa/experiment.hpp"
#include "pathqa/metrics.hpp"
#include "pathqa/reader.hpp"
#include "pathqa/retriever.hpp"
#include "pathqa/supervision.hpp"
#include "pathqa/synthetic.hpp"
#include "pathqa/tfidf.hpp"

namespace pathqa {
namespace {

using nlohmann::json;

struct CommonModelFlags {
    uint32_t d = 64;
    uint32_t buckets = 1u << 15;
    bool question_independent = false;
};

SearchMode parse_mode(const std::string& mode, size_t* fixed_len) {
    if (mode == "adaptive") return SearchMode::kAdaptive;
    if (mode == "greedy") return SearchMode::kGreedy;
    if (mode == "norec") return SearchMode::kNoRecurrence;
    if (mode == "closed") return SearchMode::kClosedPool;
    if (mode.rfind("fixed:", 0) == 0) {
        *fixed_len = std::stoul(mode.substr(6));
        return SearchMode::kFixed;
    }
    throw UsageError("unknown retrieval mode: " + mode);
}

EncoderConfig encoder_config_from(const CommonModelFlags& flags) {
    EncoderConfig cfg;
    cfg.d = flags.d;
    cfg.bucket_count = flags.buckets;
    cfg.mode = flags.question_independent ? EncoderMode::kQuestionIndependent
                                          : EncoderMode::kQuestionDependent;
    return cfg;
}

void write_paths_jsonl(const std::string& out_path, const Corpus& corpus,
                       const std::vector<TrainingQuestion>& questions,
                       const std::vector<std::vector<ReasoningPath>>& all_paths) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + out_path);
    for (size_t qi = 0; qi < questions.size(); ++qi) {
        json paths = json::array();
        for (const ReasoningPath& p : all_paths[qi]) {
            json ids = json::array();
            for (uint32_t n : p.nodes) ids.push_back(corpus.at(n).para_id);
            paths.push_back({{"paragraphs", ids}, {"log_score", p.log_score}});
        }
        out << json{{"qid", questions[qi].qid}, {"paths", paths}}.dump() << "\n";
    }
    if (!out) throw DataError("write failed: " + out_path);
}

int run(int argc, char** argv) {
    CLI::App app{"reasoning-path retrieval over a paragraph graph"};
    app.require_subcommand(1);
    app.set_config("--config")->description("key=value defaults file");

    uint64_t seed = 13;
    size_t threads = 1;
    app.add_option("--seed", seed, "global random seed")->capture_default_str();
    app.add_option("--threads", threads, "worker threads for retrieval/evaluation")
        ->capture_default_str();

    // --- gen-synth ---------------------------------------------------------
    auto* gen = app.add_subcommand("gen-synth", "generate a synthetic multi-hop benchmark");
    SyntheticConfig synth;
    std::string gen_corpus, gen_questions;
    gen->add_option("--out-corpus", gen_corpus, "corpus jsonl output")->required();
    gen->add_option("--out-questions", gen_questions, "questions jsonl output")->required();
    gen->add_option("--articles", synth.num_articles)->capture_default_str();
    gen->add_option("--paras-per-article", synth.paragraphs_per_article)
        ->capture_default_str();
    gen->add_option("--vocab", synth.vocabulary)->capture_default_str();
    gen->add_option("--questions", synth.num_questions)->capture_default_str();
    gen->add_option("--one-hop", synth.frac_one_hop)->capture_default_str();
    gen->add_option("--two-hop", synth.frac_two_hop)->capture_default_str();
    gen->add_option("--comparison", synth.frac_comparison)->capture_default_str();
    gen->add_flag("--bridge-overlap", synth.bridge_overlap);

    // --- build-index -------------------------------------------------------
    auto* bindex = app.add_subcommand("build-index", "build the TF-IDF index");
    std::string bi_corpus, bi_out;
    TfidfConfig tfidf_cfg;
    bool bi_articles = false;
    bindex->add_option("--corpus", bi_corpus)->required();
    bindex->add_option("--out", bi_out)->required();
    bindex->add_option("--buckets", tfidf_cfg.bucket_count)->capture_default_str();
    bindex->add_option("--ngrams", tfidf_cfg.ngram_order)->capture_default_str();
    bindex->add_flag("--articles", bi_articles, "index whole articles instead of paragraphs");

    // --- build-graph -------------------------------------------------------
    auto* bgraph = app.add_subcommand("build-graph", "build the paragraph graph");
    std::string bg_corpus, bg_out, bg_granularity = "all";
    bgraph->add_option("--corpus", bg_corpus)->required();
    bgraph->add_option("--out", bg_out)->required();
    bgraph->add_option("--granularity", bg_granularity, "all | intro")->capture_default_str();

    // --- train-retriever ---------------------------------------------------
    auto* trr = app.add_subcommand("train-retriever", "train the recurrent retriever");
    std::string trr_corpus, trr_graph, trr_index, trr_questions, trr_out, trr_emit;
    CommonModelFlags trr_model;
    TrainConfig trr_cfg;
    SupervisionConfig trr_sup;
    trr->add_option("--corpus", trr_corpus)->required();
    trr->add_option("--graph", trr_graph)->required();
    trr->add_option("--index", trr_index)->required();
    trr->add_option("--questions", trr_questions)->required();
    trr->add_option("--out", trr_out)->required();
    trr->add_option("--d", trr_model.d)->capture_default_str();
    trr->add_option("--buckets", trr_model.buckets)->capture_default_str();
    trr->add_flag("--question-independent", trr_model.question_independent);
    trr->add_option("--lr", trr_cfg.lr)->capture_default_str();
    trr->add_option("--epochs", trr_cfg.epochs)->capture_default_str();
    trr->add_option("--batch", trr_cfg.batch_size)->capture_default_str();
    bool trr_norec = false;
    trr->add_flag("--norec", trr_norec, "train the no-recurrence (re-rank) scorer");
    trr->add_option("--negatives", trr_sup.negative_count)->capture_default_str();
    trr->add_option("--pool", trr_sup.tfidf_pool)->capture_default_str();
    bool trr_noaugment = false;
    trr->add_flag("--no-augment", trr_noaugment);
    trr->add_option("--emit-examples", trr_emit, "dump built training examples (jsonl)");

    // --- train-reader ------------------------------------------------------
    auto* trd = app.add_subcommand("train-reader", "train the path re-ranking reader");
    std::string trd_corpus, trd_graph, trd_index, trd_questions, trd_out, trd_emit;
    CommonModelFlags trd_model;
    ReaderTrainConfig trd_cfg;
    SupervisionConfig trd_sup;
    bool trd_class_head = false;
    trd->add_option("--corpus", trd_corpus)->required();
    trd->add_option("--graph", trd_graph)->required();
    trd->add_option("--index", trd_index)->required();
    trd->add_option("--questions", trd_questions)->required();
    trd->add_option("--out", trd_out)->required();
    trd->add_option("--d", trd_model.d)->capture_default_str();
    trd->add_option("--buckets", trd_model.buckets)->capture_default_str();
    trd->add_option("--lr", trd_cfg.lr)->capture_default_str();
    trd->add_option("--epochs", trd_cfg.epochs)->capture_default_str();
    trd->add_option("--batch", trd_cfg.batch_size)->capture_default_str();
    trd->add_flag("--class-head", trd_class_head, "enable the yes/no answer classes");
    trd->add_option("--emit-examples", trd_emit);

    // --- retrieve ----------------------------------------------------------
    auto* ret = app.add_subcommand("retrieve", "run reasoning-path retrieval");
    std::string ret_question, ret_questions, ret_mode = "adaptive";
    std::string ret_ckpt, ret_graph, ret_index, ret_corpus, ret_out;
    SearchConfig ret_search;
    ret->add_option("--question", ret_question, "single question text");
    ret->add_option("--questions", ret_questions, "questions jsonl");
    ret->add_option("--mode", ret_mode, "adaptive|greedy|fixed:L|norec|closed")
        ->capture_default_str();
    ret->add_option("--beam", ret_search.beam)->capture_default_str();
    ret->add_option("--f", ret_search.initial)->capture_default_str();
    ret->add_option("--k", ret_search.carryover)->capture_default_str();
    ret->add_option("--max-len", ret_search.max_len)->capture_default_str();
    bool ret_no_eoe_score = false;
    ret->add_flag("--no-eoe-score", ret_no_eoe_score,
                  "exclude the end-of-evidence factor from path scores");
    ret->add_option("--checkpoint", ret_ckpt)->required();
    ret->add_option("--graph", ret_graph)->required();
    ret->add_option("--index", ret_index)->required();
    ret->add_option("--corpus", ret_corpus)->required();
    ret->add_option("--out", ret_out)->required();

    // --- answer ------------------------------------------------------------
    auto* ans = app.add_subcommand("answer", "answer questions from retrieved paths");
    std::string ans_questions, ans_paths, ans_ckpt, ans_corpus, ans_out;
    ans->add_option("--questions", ans_questions)->required();
    ans->add_option("--paths", ans_paths)->required();
    ans->add_option("--checkpoint", ans_ckpt)->required();
    ans->add_option("--corpus", ans_corpus)->required();
    ans->add_option("--out", ans_out)->required();

    // --- evaluate ----------------------------------------------------------
    auto* ev = app.add_subcommand("evaluate", "compute retrieval and answer metrics");
    std::string ev_questions, ev_paths, ev_answers, ev_corpus, ev_out;
    bool ev_union = false;
    ev->add_option("--questions", ev_questions)->required();
    ev->add_option("--paths", ev_paths, "paths jsonl (retrieval metrics)");
    ev->add_option("--answers", ev_answers, "answers jsonl (F1/EM)");
    ev->add_option("--corpus", ev_corpus)->required();
    ev->add_option("--out", ev_out, "metrics json output");
    ev->add_flag("--union-top-b", ev_union, "score the union of all paths per question");

    // --- experiment --------------------------------------------------------
    auto* exp = app.add_subcommand("experiment", "train, run strategies, emit a report");
    std::string exp_corpus, exp_train_q, exp_eval_q, exp_out;
    std::string exp_strategies = "adaptive,greedy,norec,tfidf_top2,rerank,rerank_2hop";
    CommonModelFlags exp_model;
    TrainConfig exp_train_cfg;
    ReaderTrainConfig exp_reader_cfg;
    SupervisionConfig exp_sup;
    ExperimentConfig exp_cfg;
    bool exp_class_head = false;
    exp->add_option("--corpus", exp_corpus)->required();
    exp->add_option("--questions-train", exp_train_q)->required();
    exp->add_option("--questions-eval", exp_eval_q)->required();
    exp->add_option("--out", exp_out, "report json output");
    exp->add_option("--strategies", exp_strategies)->capture_default_str();
    exp->add_option("--beam", exp_cfg.search.beam)->capture_default_str();
    exp->add_option("--f", exp_cfg.search.initial)->capture_default_str();
    exp->add_option("--k", exp_cfg.search.carryover)->capture_default_str();
    exp->add_option("--max-len", exp_cfg.search.max_len)->capture_default_str();
    exp->add_option("--rerank-f", exp_cfg.rerank_pool)->capture_default_str();
    exp->add_option("--d", exp_model.d)->capture_default_str();
    exp->add_option("--buckets", exp_model.buckets)->capture_default_str();
    exp->add_option("--retriever-lr", exp_train_cfg.lr)->capture_default_str();
    exp->add_option("--retriever-epochs", exp_train_cfg.epochs)->capture_default_str();
    exp->add_option("--retriever-batch", exp_train_cfg.batch_size)->capture_default_str();
    exp->add_option("--reader-lr", exp_reader_cfg.lr)->capture_default_str();
    exp->add_option("--reader-epochs", exp_reader_cfg.epochs)->capture_default_str();
    exp->add_option("--reader-batch", exp_reader_cfg.batch_size)->capture_default_str();
    exp->add_option("--negatives", exp_sup.negative_count)->capture_default_str();
    exp->add_flag("--class-head", exp_class_head);
    exp->add_flag("--union-top-b", exp_cfg.union_top_b);

    CLI11_PARSE(app, argc, argv);

    if (gen->parsed()) {
        synth.seed = seed;
        gen_synthetic_files(synth, gen_corpus, gen_questions);
        std::cout << "wrote " << gen_corpus << " and " << gen_questions << "\n";
        return kExitOk;
    }

    if (bindex->parsed()) {
        Corpus corpus = ingest_corpus(bi_corpus);
        SparseIndex index = bi_articles ? SparseIndex::build_articles(corpus, tfidf_cfg)
                                        : SparseIndex::build(corpus, tfidf_cfg);
        index.save(bi_out);
        std::cout << "indexed " << index.num_docs() << " docs -> " << bi_out << "\n";
        return kExitOk;
    }

    if (bgraph->parsed()) {
        Corpus corpus = ingest_corpus(bg_corpus);
        Granularity g = bg_granularity == "intro" ? Granularity::kIntroOnly
                                                  : Granularity::kAllParagraphs;
        GraphBuildReport report;
        WikiGraph graph = build_graph(corpus, g, &report);
        graph.save(bg_out);
        std::cout << "nodes=" << graph.num_nodes() << " edges=" << report.total_edges()
                  << " (hyperlink=" << report.hyperlink_edges
                  << " within-doc=" << report.within_doc_edges
                  << " dangling-dropped=" << report.dangling_dropped << ") -> " << bg_out
                  << "\n";
        return kExitOk;
    }

    if (trr->parsed()) {
        Corpus corpus = ingest_corpus(trr_corpus);
        WikiGraph graph = WikiGraph::load(trr_graph);
        SparseIndex index = SparseIndex::load(trr_index);
        auto questions = load_questions(trr_questions);
        trr_sup.augment = !trr_noaugment;
        BuiltExamples built = build_examples(questions, corpus, graph, index, trr_sup);
        for (const auto& w : built.warnings) std::cerr << "warning: " << w << "\n";
        if (!trr_emit.empty()) write_examples_jsonl(built, corpus, trr_emit);

        RetrieverModel model(encoder_config_from(trr_model));
        model.init_params(seed);
        trr_cfg.seed = seed;
        trr_cfg.recurrence = !trr_norec;
        TrainStats stats = train_retriever(model, corpus, built.retriever, trr_cfg);
        model.save(trr_out);
        std::cout << "examples=" << built.retriever.size() << " steps=" << stats.steps
                  << " loss " << stats.initial_loss << " -> " << stats.final_loss << " ("
                  << trr_out << ")\n";
        return kExitOk;
    }

    if (trd->parsed()) {
        Corpus corpus = ingest_corpus(trd_corpus);
        WikiGraph graph = WikiGraph::load(trd_graph);
        SparseIndex index = SparseIndex::load(trd_index);
        auto questions = load_questions(trd_questions);
        BuiltExamples built = build_examples(questions, corpus, graph, index, trd_sup);
        for (const auto& w : built.warnings) std::cerr << "warning: " << w << "\n";
        if (!trd_emit.empty()) write_examples_jsonl(built, corpus, trd_emit);

        ReaderConfig cfg;
        cfg.d = trd_model.d;
        cfg.bucket_count = trd_model.buckets;
        cfg.use_class_head = trd_class_head;
        ReaderModel model(cfg);
        model.init_params(seed);
        trd_cfg.seed = seed;
        ReaderTrainStats stats = train_reader(model, corpus, built.reader, trd_cfg);
        model.save(trd_out);
        std::cout << "examples=" << built.reader.size() << " steps=" << stats.steps
                  << " loss " << stats.initial_loss << " -> " << stats.final_loss << " ("
                  << trd_out << ")\n";
        return kExitOk;
    }

    if (ret->parsed()) {
        Corpus corpus = ingest_corpus(ret_corpus);
        WikiGraph graph = WikiGraph::load(ret_graph);
        SparseIndex index = SparseIndex::load(ret_index);
        RetrieverModel model = RetrieverModel::from_checkpoint(ret_ckpt);

        std::vector<TrainingQuestion> questions;
        if (!ret_questions.empty()) {
            questions = load_questions(ret_questions);
        } else if (!ret_question.empty()) {
            TrainingQuestion tq;
            tq.qid = "q0";
            tq.question = ret_question;
            tq.answer_type = AnswerType::kSpan;
            tq.answers = {""};
            questions.push_back(tq);
        } else {
            throw UsageError("retrieve needs --question or --questions");
        }

        ret_search.mode = parse_mode(ret_mode, &ret_search.fixed_len);
        ret_search.eoe_in_score = !ret_no_eoe_score;
        PipelineOutput out = run_pipeline(model, nullptr, corpus, graph, index, questions,
                                          ret_search, threads);
        write_paths_jsonl(ret_out, corpus, questions, out.paths);
        std::cout << "wrote paths for " << questions.size() << " questions -> " << ret_out
                  << "\n";
        return kExitOk;
    }

    if (ans->parsed()) {
        Corpus corpus = ingest_corpus(ans_corpus);
        auto questions = load_questions(ans_questions);
        ReaderModel reader = ReaderModel::from_checkpoint(ans_ckpt);

        // paths.jsonl: {"qid", "paths": [{"paragraphs": [...], "log_score": x}]}
        std::map<std::string, std::vector<ReasoningPath>> paths_by_qid;
        size_t line_no = 0;
        for (const std::string& line : read_lines(ans_paths)) {
            ++line_no;
            if (line.empty()) continue;
            json rec = json::parse(line, nullptr, false);
            if (rec.is_discarded())
                throw DataError(ans_paths + ":" + std::to_string(line_no) +
                                ": malformed JSON line");
            std::vector<ReasoningPath> paths;
            for (const auto& p : rec.at("paths")) {
                ReasoningPath path;
                for (const auto& id : p.at("paragraphs"))
                    path.nodes.push_back(corpus.require(id.get<std::string>()));
                path.log_score = p.at("log_score").get<double>();
                path.terminated = true;
                paths.push_back(std::move(path));
            }
            paths_by_qid[rec.at("qid").get<std::string>()] = std::move(paths);
        }

        std::ofstream out(ans_out, std::ios::binary);
        if (!out) throw DataError("cannot open for writing: " + ans_out);
        for (const TrainingQuestion& tq : questions) {
            auto it = paths_by_qid.find(tq.qid);
            if (it == paths_by_qid.end())
                throw DataError("no retrieved paths for qid " + tq.qid);
            AnswerPrediction pred = reader.answer(corpus, tq.question, it->second);
            json ids = json::array();
            for (uint32_t n : pred.path_nodes) ids.push_back(corpus.at(n).para_id);
            out << json{{"qid", tq.qid},
                        {"answer", pred.has_answer ? pred.answer_text : ""},
                        {"answer_type", answer_type_name(pred.answer_type)},
                        {"path", ids},
                        {"p_path", pred.p_path},
                        {"s_read", pred.s_read}}
                       .dump()
                << "\n";
        }
        std::cout << "wrote answers -> " << ans_out << "\n";
        return kExitOk;
    }

    if (ev->parsed()) {
        Corpus corpus = ingest_corpus(ev_corpus);
        auto questions = load_questions(ev_questions);
        json result;
        if (!ev_paths.empty()) {
            PredictedParagraphs predicted;
            size_t line_no = 0;
            for (const std::string& line : read_lines(ev_paths)) {
                ++line_no;
                if (line.empty()) continue;
                json rec = json::parse(line, nullptr, false);
                if (rec.is_discarded())
                    throw DataError(ev_paths + ":" + std::to_string(line_no) +
                                    ": malformed JSON line");
                std::vector<std::string> ids;
                const auto& paths = rec.at("paths");
                for (size_t pi = 0; pi < paths.size(); ++pi) {
                    for (const auto& id : paths[pi].at("paragraphs"))
                        ids.push_back(id.get<std::string>());
                    if (!ev_union) break;  // top-1 path only
                }
                std::sort(ids.begin(), ids.end());
                ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
                predicted[rec.at("qid").get<std::string>()] = ids;
            }
            RetrievalMetrics m = eval_retrieval(predicted, questions, corpus);
            result["retrieval"] = {{"answer_recall", m.answer_recall},
                                   {"paragraph_recall", m.paragraph_recall},
                                   {"paragraph_em", m.paragraph_em},
                                   {"num_questions", m.num_questions},
                                   {"avg_path_length", m.avg_path_length}};
        }
        if (!ev_answers.empty()) {
            PredictedAnswers predicted;
            size_t line_no = 0;
            for (const std::string& line : read_lines(ev_answers)) {
                ++line_no;
                if (line.empty()) continue;
                json rec = json::parse(line, nullptr, false);
                if (rec.is_discarded())
                    throw DataError(ev_answers + ":" + std::to_string(line_no) +
                                    ": malformed JSON line");
                predicted[rec.at("qid").get<std::string>()] =
                    rec.at("answer").get<std::string>();
            }
            AnswerMetrics m = eval_answers(predicted, questions);
            result["answers"] = {{"f1", m.f1}, {"em", m.em},
                                 {"num_questions", m.num_questions}};
        }
        std::string dumped = result.dump(2);
        if (!ev_out.empty()) {
            std::ofstream out(ev_out, std::ios::binary);
            out << dumped << "\n";
            if (!out) throw DataError("write failed: " + ev_out);
        }
        std::cout << dumped << "\n";
        return kExitOk;
    }

    if (exp->parsed()) {
        Corpus corpus = ingest_corpus(exp_corpus);
        WikiGraph graph = build_graph(corpus, Granularity::kAllParagraphs);
        SparseIndex index = SparseIndex::build(corpus, TfidfConfig{});
        auto train_questions = load_questions(exp_train_q);
        auto eval_questions = load_questions(exp_eval_q);

        BuiltExamples built = build_examples(train_questions, corpus, graph, index, exp_sup);

        RetrieverModel model(encoder_config_from(exp_model));
        model.init_params(seed);
        exp_train_cfg.seed = seed;
        train_retriever(model, corpus, built.retriever, exp_train_cfg);

        RetrieverModel rerank_model(encoder_config_from(exp_model));
        rerank_model.init_params(seed + 1);
        TrainConfig norec_cfg = exp_train_cfg;
        norec_cfg.recurrence = false;
        train_retriever(rerank_model, corpus, built.retriever, norec_cfg);

        ReaderConfig reader_cfg;
        reader_cfg.d = exp_model.d;
        reader_cfg.bucket_count = exp_model.buckets;
        reader_cfg.use_class_head = exp_class_head;
        ReaderModel reader(reader_cfg);
        reader.init_params(seed + 2);
        exp_reader_cfg.seed = seed;
        train_reader(reader, corpus, built.reader, exp_reader_cfg);

        exp_cfg.strategies.clear();
        std::string token;
        for (char c : exp_strategies + ",") {
            if (c == ',') {
                if (!token.empty()) exp_cfg.strategies.push_back(token);
                token.clear();
            } else {
                token.push_back(c);
            }
        }
        exp_cfg.threads = threads;
        exp_cfg.seed = seed;
        ExperimentReport report = run_experiment(model, rerank_model, reader, corpus, graph,
                                                 index, eval_questions, exp_cfg);
        std::cout << report.to_table();
        if (!exp_out.empty()) {
            std::ofstream out(exp_out, std::ios::binary);
            out << report.to_json() << "\n";
            if (!out) throw DataError("write failed: " + exp_out);
        }
        return kExitOk;
    }

    return kExitUsage;
}

}  // namespace
}  // namespace pathqa

int main(int argc, char** argv) {
    try {
        return pathqa::run(argc, argv);
    } catch (const pathqa::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return pathqa::kExitUsage;
    } catch (const pathqa::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return pathqa::kExitData;
    } catch (const pathqa::NumericError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return pathqa::kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return pathqa::kExitUsage;
    }
}
