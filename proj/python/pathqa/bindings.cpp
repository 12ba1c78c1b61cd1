// Python bindings for the core operations: corpus/graph/index construction,
// synthetic benchmark generation, training, retrieval, answering and metrics.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pathqa/common.hpp"
#include "pathqa/experiment.hpp"
#include "pathqa/graph.hpp"
#include "pathqa/metrics.hpp"
#include "pathqa/reader.hpp"
#include "pathqa/retriever.hpp"
#include "pathqa/supervision.hpp"
#include "pathqa/synthetic.hpp"
#include "pathqa/tfidf.hpp"

namespace py = pybind11;
using namespace pathqa;

namespace {

SyntheticConfig synth_config(size_t articles, size_t paras_per_article, size_t vocabulary,
                             size_t questions, double one_hop, double two_hop,
                             double comparison, bool bridge_overlap, uint64_t seed) {
    SyntheticConfig cfg;
    cfg.num_articles = articles;
    cfg.paragraphs_per_article = paras_per_article;
    cfg.vocabulary = vocabulary;
    cfg.num_questions = questions;
    cfg.frac_one_hop = one_hop;
    cfg.frac_two_hop = two_hop;
    cfg.frac_comparison = comparison;
    cfg.bridge_overlap = bridge_overlap;
    cfg.seed = seed;
    return cfg;
}

SearchConfig search_config(const std::string& mode, size_t beam, size_t f, size_t k,
                           size_t max_len) {
    SearchConfig cfg;
    cfg.beam = beam;
    cfg.initial = f;
    cfg.carryover = k;
    cfg.max_len = max_len;
    if (mode == "adaptive") cfg.mode = SearchMode::kAdaptive;
    else if (mode == "greedy") cfg.mode = SearchMode::kGreedy;
    else if (mode == "norec") cfg.mode = SearchMode::kNoRecurrence;
    else if (mode.rfind("fixed:", 0) == 0) {
        cfg.mode = SearchMode::kFixed;
        cfg.fixed_len = std::stoul(mode.substr(6));
    } else throw UsageError("unknown retrieval mode: " + mode);
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_pathqa, m) {
    m.doc() = "reasoning-path retrieval core";

    py::register_exception<UsageError>(m, "UsageError");
    py::register_exception<DataError>(m, "DataError");
    py::register_exception<NumericError>(m, "NumericError");

    py::class_<Corpus>(m, "Corpus")
        .def_static("load", &ingest_corpus, py::arg("path"))
        .def("__len__", [](const Corpus& c) { return c.size(); })
        .def("para_ids",
             [](const Corpus& c) {
                 std::vector<std::string> ids;
                 for (const auto& p : c.paragraphs()) ids.push_back(p.para_id);
                 return ids;
             })
        .def("text", [](const Corpus& c, const std::string& id) {
            return c.at(c.require(id)).text;
        });

    py::class_<WikiGraph>(m, "Graph")
        .def_static("build",
                    [](const Corpus& corpus, const std::string& granularity) {
                        return build_graph(corpus, granularity == "intro"
                                                       ? Granularity::kIntroOnly
                                                       : Granularity::kAllParagraphs);
                    },
                    py::arg("corpus"), py::arg("granularity") = "all")
        .def_static("load", &WikiGraph::load, py::arg("path"))
        .def("save", &WikiGraph::save, py::arg("path"))
        .def("num_nodes", &WikiGraph::num_nodes)
        .def("num_edges", &WikiGraph::num_edges)
        .def("neighbors", [](const WikiGraph& g, const std::string& id) {
            std::vector<std::string> out;
            for (uint32_t v : g.neighbors_by_id(id)) out.push_back(g.node_id(v));
            return out;
        });

    py::class_<SparseIndex>(m, "Index")
        .def_static("build",
                    [](const Corpus& corpus, uint32_t buckets, int ngrams) {
                        return SparseIndex::build(corpus, TfidfConfig{buckets, ngrams});
                    },
                    py::arg("corpus"), py::arg("buckets") = 1u << 24, py::arg("ngrams") = 2)
        .def_static("load", &SparseIndex::load, py::arg("path"))
        .def("save", &SparseIndex::save, py::arg("path"))
        .def("__len__", [](const SparseIndex& i) { return i.num_docs(); })
        .def("top_f", [](const SparseIndex& index, const std::string& query, size_t f) {
            std::vector<std::pair<std::string, double>> out;
            for (const auto& hit : index.top_f(query, f))
                out.emplace_back(index.doc_id(hit.doc), hit.score);
            return out;
        });

    m.def(
        "gen_synth",
        [](const std::string& corpus_path, const std::string& questions_path, size_t articles,
           size_t paras_per_article, size_t vocabulary, size_t questions, double one_hop,
           double two_hop, double comparison, bool bridge_overlap, uint64_t seed) {
            gen_synthetic_files(synth_config(articles, paras_per_article, vocabulary,
                                             questions, one_hop, two_hop, comparison,
                                             bridge_overlap, seed),
                                corpus_path, questions_path);
        },
        py::arg("corpus_path"), py::arg("questions_path"), py::arg("articles") = 100,
        py::arg("paras_per_article") = 2, py::arg("vocabulary") = 60,
        py::arg("questions") = 40, py::arg("one_hop") = 0.0, py::arg("two_hop") = 1.0,
        py::arg("comparison") = 0.0, py::arg("bridge_overlap") = false, py::arg("seed") = 1);

    py::class_<RetrieverModel>(m, "Retriever")
        .def(py::init([](uint32_t d, uint32_t buckets, bool question_independent,
                         uint64_t seed) {
                 EncoderConfig cfg;
                 cfg.d = d;
                 cfg.bucket_count = buckets;
                 cfg.mode = question_independent ? EncoderMode::kQuestionIndependent
                                                 : EncoderMode::kQuestionDependent;
                 auto model = std::make_unique<RetrieverModel>(cfg);
                 model->init_params(seed);
                 return model;
             }),
             py::arg("d") = 64, py::arg("buckets") = 1u << 15,
             py::arg("question_independent") = false, py::arg("seed") = 13)
        .def_static("load",
                    [](const std::string& path) {
                        return std::make_unique<RetrieverModel>(
                            RetrieverModel::from_checkpoint(path));
                    },
                    py::arg("path"))
        .def("save", &RetrieverModel::save, py::arg("path"))
        .def(
            "train",
            [](RetrieverModel& model, const Corpus& corpus, const WikiGraph& graph,
               const SparseIndex& index, const std::string& questions_path, double lr,
               size_t epochs, size_t batch, size_t negatives, bool recurrence,
               uint64_t seed) {
                auto questions = load_questions(questions_path);
                SupervisionConfig sup;
                sup.negative_count = negatives;
                BuiltExamples built = build_examples(questions, corpus, graph, index, sup);
                TrainConfig cfg;
                cfg.lr = lr;
                cfg.epochs = epochs;
                cfg.batch_size = batch;
                cfg.recurrence = recurrence;
                cfg.seed = seed;
                TrainStats stats = train_retriever(model, corpus, built.retriever, cfg);
                return py::dict(py::arg("initial_loss") = stats.initial_loss,
                                py::arg("final_loss") = stats.final_loss,
                                py::arg("steps") = stats.steps);
            },
            py::arg("corpus"), py::arg("graph"), py::arg("index"), py::arg("questions_path"),
            py::arg("lr") = 1e-2, py::arg("epochs") = 3, py::arg("batch") = 4,
            py::arg("negatives") = 50, py::arg("recurrence") = true, py::arg("seed") = 13)
        .def(
            "retrieve",
            [](const RetrieverModel& model, const Corpus& corpus, const WikiGraph& graph,
               const SparseIndex& index, const std::string& question, const std::string& mode,
               size_t beam, size_t f, size_t k, size_t max_len) {
                auto paths = retrieve_paths(model, corpus, graph, index, question,
                                            search_config(mode, beam, f, k, max_len));
                py::list out;
                for (const auto& p : paths) {
                    py::list ids;
                    for (uint32_t n : p.nodes) ids.append(corpus.at(n).para_id);
                    out.append(py::make_tuple(ids, p.log_score));
                }
                return out;
            },
            py::arg("corpus"), py::arg("graph"), py::arg("index"), py::arg("question"),
            py::arg("mode") = "adaptive", py::arg("beam") = 8, py::arg("f") = 500,
            py::arg("k") = 1, py::arg("max_len") = 3);

    py::class_<ReaderModel>(m, "Reader")
        .def(py::init([](uint32_t d, uint32_t buckets, bool class_head, uint64_t seed) {
                 ReaderConfig cfg;
                 cfg.d = d;
                 cfg.bucket_count = buckets;
                 cfg.use_class_head = class_head;
                 auto model = std::make_unique<ReaderModel>(cfg);
                 model->init_params(seed);
                 return model;
             }),
             py::arg("d") = 64, py::arg("buckets") = 1u << 15, py::arg("class_head") = false,
             py::arg("seed") = 13)
        .def_static("load",
                    [](const std::string& path) {
                        return std::make_unique<ReaderModel>(
                            ReaderModel::from_checkpoint(path));
                    },
                    py::arg("path"))
        .def("save", &ReaderModel::save, py::arg("path"))
        .def(
            "train",
            [](ReaderModel& model, const Corpus& corpus, const WikiGraph& graph,
               const SparseIndex& index, const std::string& questions_path, double lr,
               size_t epochs, size_t batch, uint64_t seed) {
                auto questions = load_questions(questions_path);
                SupervisionConfig sup;
                BuiltExamples built = build_examples(questions, corpus, graph, index, sup);
                ReaderTrainConfig cfg;
                cfg.lr = lr;
                cfg.epochs = epochs;
                cfg.batch_size = batch;
                cfg.seed = seed;
                ReaderTrainStats stats = train_reader(model, corpus, built.reader, cfg);
                return py::dict(py::arg("initial_loss") = stats.initial_loss,
                                py::arg("final_loss") = stats.final_loss,
                                py::arg("steps") = stats.steps);
            },
            py::arg("corpus"), py::arg("graph"), py::arg("index"), py::arg("questions_path"),
            py::arg("lr") = 1e-2, py::arg("epochs") = 2, py::arg("batch") = 120,
            py::arg("seed") = 13)
        .def(
            "answer",
            [](const ReaderModel& model, const Corpus& corpus, const std::string& question,
               const std::vector<std::pair<std::vector<std::string>, double>>& paths) {
                std::vector<ReasoningPath> converted;
                for (const auto& [ids, score] : paths) {
                    ReasoningPath p;
                    for (const auto& id : ids) p.nodes.push_back(corpus.require(id));
                    p.log_score = score;
                    p.terminated = true;
                    converted.push_back(std::move(p));
                }
                AnswerPrediction pred = model.answer(corpus, question, converted);
                py::list path_ids;
                for (uint32_t n : pred.path_nodes) path_ids.append(corpus.at(n).para_id);
                return py::dict(py::arg("has_answer") = pred.has_answer,
                                py::arg("answer") = pred.answer_text,
                                py::arg("answer_type") = answer_type_name(pred.answer_type),
                                py::arg("path") = path_ids,
                                py::arg("p_path") = pred.p_path,
                                py::arg("s_read") = pred.s_read);
            },
            py::arg("corpus"), py::arg("question"), py::arg("paths"));

    m.def("token_f1", &token_f1, py::arg("prediction"), py::arg("gold"));
    m.def("exact_match", &exact_match, py::arg("prediction"), py::arg("gold"));
}
