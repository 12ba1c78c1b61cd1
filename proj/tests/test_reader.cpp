#include <doctest.h>

#include <cmath>
#include <random>

#include "pathqa/common.hpp"
#include "pathqa/reader.hpp"
#include "pathqa/synthetic.hpp"
#include "pathqa/text.hpp"
#include "test_helpers.hpp"
#include "gradient_check.hpp"

using namespace pathqa;
using namespace pathqa::testing;

namespace {

ReaderConfig tiny_reader(uint32_t d = 4) {
    ReaderConfig cfg;
    cfg.d = d;
    cfg.bucket_count = 16;
    return cfg;
}

Corpus reader_corpus() {
    std::vector<Paragraph> paras;
    paras.push_back(make_para("p", 0, "alpha beta"));
    paras.push_back(make_para("q", 0, "gamma delta epsilon"));
    paras.push_back(make_para("r", 0, "zeta eta theta iota kappa"));
    return Corpus::from_paragraphs(std::move(paras));
}

// Test-local exhaustive span maximization.
SpanResult brute_force_span(const ReaderModel& model, const PathEncoding& enc,
                            size_t max_span_len) {
    std::vector<double> ps, pe;
    model.span_distributions(enc, &ps, &pe);
    SpanResult best;
    best.score = -1.0;
    for (size_t i = 0; i < enc.tokens.size(); ++i) {
        if (enc.token_para[i] < 0) continue;
        for (size_t j = i; j < enc.tokens.size(); ++j) {
            if (enc.token_para[j] != enc.token_para[i]) break;
            if (j - i >= max_span_len) break;
            if (ps[i] * pe[j] > best.score) {
                best.score = ps[i] * pe[j];
                best.start = i;
                best.end = j;
            }
        }
    }
    return best;
}

}  // namespace

TEST_CASE("path encoding is deterministic and order-sensitive") {
    ReaderModel model(tiny_reader());
    model.init_params(5);
    Corpus corpus = reader_corpus();
    auto enc1 = model.encode_path(corpus, "what alpha", {0, 1});
    auto enc2 = model.encode_path(corpus, "what alpha", {0, 1});
    CHECK(enc1.u_path == enc2.u_path);
    auto swapped = model.encode_path(corpus, "what alpha", {1, 0});
    CHECK(enc1.u_path != swapped.u_path);
    CHECK_THROWS_AS(model.encode_path(corpus, "q", std::vector<uint32_t>{}), UsageError);
}

TEST_CASE("d=2 path encoding matches an independent scalar oracle") {
    ReaderConfig cfg = tiny_reader(2);
    ReaderModel model(cfg);
    auto& E = model.params().require("reader.embeddings").value;  // 17 x 2
    auto& G = model.params().require("reader.gain").value;
    auto& S = model.params().require("reader.shift").value;
    G = {1.0, 1.0};
    S = {0.0, 0.0};
    for (size_t i = 0; i < E.size(); ++i) E[i] = 0.001 * static_cast<double>(i * i % 37);
    // q_proj stays zero and q_bias zero: token rep_i = standardize(E[tok_i]).
    const uint32_t f = fnv1a32("alpha") & 15u;
    const uint32_t sep = 16;

    PathEncoding enc = model.encode_path("", {"alpha"});
    REQUIRE(enc.tokens.size() == 2);  // [sep] alpha

    auto ln2 = [](double x0, double x1, double& z0, double& z1) {
        double mu = (x0 + x1) / 2.0;
        double var = ((x0 - mu) * (x0 - mu) + (x1 - mu) * (x1 - mu)) / 2.0;
        double sigma = std::sqrt(var < 1e-6 ? 1e-6 : var);
        z0 = (x0 - mu) / sigma;
        z1 = (x1 - mu) / sigma;
    };
    double t_sep0, t_sep1, t_a0, t_a1;
    ln2(E[sep * 2 + 0], E[sep * 2 + 1], t_sep0, t_sep1);
    ln2(E[f * 2 + 0], E[f * 2 + 1], t_a0, t_a1);
    double m0 = (t_sep0 + t_a0) / 2.0, m1 = (t_sep1 + t_a1) / 2.0;
    double u0, u1;
    ln2(m0, m1, u0, u1);
    CHECK(std::abs(enc.u_path[0] - u0) < 1e-12);
    CHECK(std::abs(enc.u_path[1] - u1) < 1e-12);
}

TEST_CASE("rerank probability is a sigmoid in w_n . u_E") {
    ReaderModel model(tiny_reader());
    model.init_params(3);
    Corpus corpus = reader_corpus();
    auto enc = model.encode_path(corpus, "question words", {0, 1});

    auto& wn = model.params().require("reader.w_n").value;
    std::fill(wn.begin(), wn.end(), 0.0);
    CHECK(model.rerank_prob(enc) == 0.5);

    // Scale w_n so the dot product is exactly 1.9.
    double n2 = dot(enc.u_path, enc.u_path);
    for (size_t i = 0; i < wn.size(); ++i) wn[i] = 1.9 * enc.u_path[i] / n2;
    CHECK(model.rerank_prob(enc) == doctest::Approx(0.86989).epsilon(1e-4));

    for (double& v : wn) v = -v;
    CHECK(model.rerank_prob(enc) == doctest::Approx(1.0 - 0.86989).epsilon(1e-4));
}

TEST_CASE("span distributions cover paragraph tokens only and sum to one") {
    ReaderModel model(tiny_reader());
    model.init_params(9);
    Corpus corpus = reader_corpus();
    auto enc = model.encode_path(corpus, "which alpha beta", {0, 2});
    std::vector<double> ps, pe;
    model.span_distributions(enc, &ps, &pe);
    double sum_s = 0.0, sum_e = 0.0;
    for (size_t i = 0; i < enc.tokens.size(); ++i) {
        if (enc.token_para[i] < 0) {
            CHECK(ps[i] == 0.0);  // question and separator positions excluded
            CHECK(pe[i] == 0.0);
        }
        sum_s += ps[i];
        sum_e += pe[i];
    }
    CHECK(std::abs(sum_s - 1.0) < 1e-9);
    CHECK(std::abs(sum_e - 1.0) < 1e-9);
}

TEST_CASE("extract_span equals brute-force maximization") {
    Corpus corpus = reader_corpus();
    for (uint64_t seed = 1; seed <= 10; ++seed) {
        ReaderModel model(tiny_reader());
        model.init_params(seed);
        auto enc = model.encode_path(corpus, "find the span", {2, 1});
        SpanResult got = model.extract_span(enc);
        SpanResult expected = brute_force_span(model, enc, model.config().max_span_len);
        CHECK(got.start == expected.start);
        CHECK(got.end == expected.end);
        CHECK(got.score == expected.score);
        // Spans never leave a single paragraph.
        CHECK(enc.token_para[got.start] == enc.token_para[got.end]);
    }
}

TEST_CASE("single-token path yields the only possible span") {
    ReaderModel model(tiny_reader());
    model.init_params(2);
    PathEncoding enc = model.encode_path("ask", {"word"});
    SpanResult span = model.extract_span(enc);
    CHECK(span.start == span.end);
    CHECK(enc.tokens[span.start] == "word");
    CHECK(span.text == "word");
}

TEST_CASE("max_span_len bounds the candidate pairs") {
    ReaderConfig cfg = tiny_reader();
    cfg.max_span_len = 2;
    ReaderModel model(cfg);
    model.init_params(4);
    PathEncoding enc = model.encode_path("", {"one two three four five six"});
    SpanResult span = model.extract_span(enc);
    CHECK(span.end - span.start < 2);
    SpanResult expected = brute_force_span(model, enc, 2);
    CHECK(span.start == expected.start);
    CHECK(span.end == expected.end);
}

TEST_CASE("zero class head ties break to span") {
    ReaderConfig cfg = tiny_reader();
    cfg.use_class_head = true;
    ReaderModel model(cfg);
    Corpus corpus = reader_corpus();
    std::fill(model.params().require("reader.gain").value.begin(),
              model.params().require("reader.gain").value.end(), 1.0);
    auto enc = model.encode_path(corpus, "anything", {0});
    CHECK(model.classify_answer_type(enc) == AnswerType::kSpan);
}

TEST_CASE("answer selection follows the re-ranking argmax") {
    ReaderModel model(tiny_reader(8));
    model.init_params(17);
    Corpus corpus = reader_corpus();

    std::vector<ReasoningPath> paths;
    paths.push_back({{0}, -0.1, true});
    paths.push_back({{1}, -0.2, true});
    paths.push_back({{2, 1}, -0.3, true});

    AnswerPrediction pred = model.answer(corpus, "which words", paths);
    REQUIRE(pred.has_answer);

    // Invariant to input order.
    std::vector<ReasoningPath> shuffled{paths[2], paths[0], paths[1]};
    AnswerPrediction pred2 = model.answer(corpus, "which words", shuffled);
    CHECK(pred.path_nodes == pred2.path_nodes);
    CHECK(pred.answer_text == pred2.answer_text);

    // The chosen path maximizes P(E|q).
    for (const auto& p : paths) {
        auto enc = model.encode_path(corpus, "which words", p.nodes);
        CHECK(model.rerank_prob(enc) <= pred.p_path + 1e-15);
    }

    SUBCASE("single path: re-ranking is vacuous") {
        std::vector<ReasoningPath> one{paths[1]};
        AnswerPrediction p = model.answer(corpus, "which words", one);
        CHECK(p.path_nodes == paths[1].nodes);
    }
    SUBCASE("empty path list gives a flagged no-answer") {
        AnswerPrediction p = model.answer(corpus, "which words", {});
        CHECK(!p.has_answer);
    }
}

TEST_CASE("reader loss values on the half-probability fixture") {
    // Zero parameters: P(E|q) = 0.5 and the span softmax is uniform over the
    // two paragraph tokens, so every factor is one half.
    ReaderModel model(tiny_reader());
    Corpus corpus = reader_corpus();  // p/0 = "alpha beta" (2 tokens)

    ReaderExample gold;
    gold.question = "";
    gold.path_nodes = {0};
    gold.gold_label = true;
    gold.answer_type = AnswerType::kSpan;
    gold.has_span = true;
    gold.span_para = 0;
    gold.span_start = 0;
    gold.span_end = 0;
    double lg = model.loss(corpus, gold, false);
    CHECK(lg == doctest::Approx(3.0 * std::log(2.0)).epsilon(1e-12));

    ReaderExample distorted = gold;
    distorted.gold_label = false;
    distorted.has_span = false;
    double ld = model.loss(corpus, distorted, false);
    CHECK(ld == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("span loss is masked for distorted examples") {
    ReaderModel model(tiny_reader());
    model.init_params(21);
    Corpus corpus = reader_corpus();
    ReaderExample distorted;
    distorted.question = "which";
    distorted.path_nodes = {0, 1};
    distorted.gold_label = false;
    model.params().zero_grad();
    model.loss(corpus, distorted, true);
    for (double g : model.params().require("reader.v_start").grad) CHECK(g == 0.0);
    for (double g : model.params().require("reader.v_end").grad) CHECK(g == 0.0);
}

TEST_CASE("reader gradients match finite differences over 20 draws") {
    Corpus corpus = reader_corpus();
    double worst = 0.0;
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        ReaderConfig cfg = tiny_reader(4);
        cfg.use_class_head = seed % 3 == 0;
        ReaderModel model(cfg);
        model.init_params(seed);

        ReaderExample ex;
        ex.question = seed % 2 ? "gamma question words" : "alpha";
        ex.path_nodes = seed % 2 ? std::vector<uint32_t>{1, 0} : std::vector<uint32_t>{2};
        ex.gold_label = seed % 4 != 0;
        ex.answer_type = cfg.use_class_head && seed % 6 == 0 ? AnswerType::kYes
                                                             : AnswerType::kSpan;
        if (ex.gold_label && ex.answer_type == AnswerType::kSpan) {
            ex.has_span = true;
            ex.span_para = 0;
            ex.span_start = 0;
            ex.span_end = seed % 2 ? 1 : 0;
        }
        model.params().zero_grad();
        model.loss(corpus, ex, true);
        auto eval = [&]() { return model.loss(corpus, ex, false); };
        worst = std::max(worst, finite_difference_check(model.trainable(), eval).max_rel_err);
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("single reader example converges below 0.05 in 500 steps") {
    Corpus corpus = reader_corpus();
    ReaderModel model(tiny_reader(8));
    model.init_params(3);
    ReaderExample ex;
    ex.question = "find gamma";
    ex.path_nodes = {1};
    ex.gold_label = true;
    ex.answer_type = AnswerType::kSpan;
    ex.has_span = true;
    ex.span_para = 0;
    ex.span_start = 0;
    ex.span_end = 0;

    ReaderTrainConfig cfg;
    cfg.epochs = 500;
    cfg.batch_size = 1;
    ReaderTrainStats stats = train_reader(model, corpus, {ex}, cfg);
    CHECK(stats.steps == 500);
    CHECK(stats.final_loss < 0.05);
}

TEST_CASE("reader training is bit-deterministic given the seed") {
    Corpus corpus = reader_corpus();
    ReaderExample ex;
    ex.question = "find gamma";
    ex.path_nodes = {1};
    ex.gold_label = true;
    ex.has_span = true;
    ex.span_para = 0;
    ex.span_start = 1;
    ex.span_end = 1;

    auto run = [&](const std::string& path) {
        ReaderModel model(tiny_reader(4));
        model.init_params(31);
        ReaderTrainConfig cfg;
        cfg.epochs = 5;
        cfg.batch_size = 1;
        cfg.seed = 77;
        train_reader(model, corpus, {ex}, cfg);
        model.save(path);
    };
    std::string p1 = tmp_path("reader_det1.ckpt"), p2 = tmp_path("reader_det2.ckpt");
    run(p1);
    run(p2);
    CHECK(read_text_file(p1) == read_text_file(p2));
}

TEST_CASE("trained three-class head separates yes/no from span questions") {
    // Small comparison-vs-span benchmark; the class prediction (not the
    // yes/no polarity) is the contract here.
    SyntheticConfig synth;
    synth.num_articles = 120;
    synth.paragraphs_per_article = 1;
    synth.vocabulary = 80;
    synth.num_questions = 120;
    synth.frac_one_hop = 0.5;
    synth.frac_two_hop = 0.0;
    synth.frac_comparison = 0.5;
    synth.seed = 5;
    SyntheticData data = gen_synthetic(synth);

    ReaderConfig cfg;
    cfg.d = 32;
    cfg.bucket_count = 1u << 12;
    cfg.use_class_head = true;
    ReaderModel model(cfg);
    model.init_params(19);

    std::vector<ReaderExample> train;
    std::vector<const TrainingQuestion*> held_out;
    for (size_t i = 0; i < data.questions.size(); ++i) {
        const TrainingQuestion& tq = data.questions[i];
        if (i % 4 == 0) {
            held_out.push_back(&tq);
            continue;
        }
        ReaderExample ex;
        ex.qid = tq.qid;
        ex.question = tq.question;
        for (const auto& id : tq.gold_para_ids) ex.path_nodes.push_back(data.corpus.require(id));
        ex.gold_label = true;
        ex.answer_type = tq.answer_type;
        if (tq.answer_type == AnswerType::kSpan) {
            auto span = find_answer_span(tokenize(data.corpus.at(ex.path_nodes.back()).text),
                                         tq.answers);
            REQUIRE(span.has_value());
            ex.has_span = true;
            ex.span_para = ex.path_nodes.size() - 1;
            ex.span_start = span->first;
            ex.span_end = span->second;
        }
        train.push_back(std::move(ex));
    }

    ReaderTrainConfig tc;
    tc.epochs = 60;
    tc.batch_size = 30;
    tc.lr = 1e-2;
    train_reader(model, data.corpus, train, tc);

    size_t correct = 0;
    for (const TrainingQuestion* tq : held_out) {
        std::vector<uint32_t> nodes;
        for (const auto& id : tq->gold_para_ids) nodes.push_back(data.corpus.require(id));
        auto enc = model.encode_path(data.corpus, tq->question, nodes);
        AnswerType got = model.classify_answer_type(enc);
        bool want_yesno = tq->answer_type != AnswerType::kSpan;
        bool got_yesno = got != AnswerType::kSpan;
        if (want_yesno == got_yesno) ++correct;
    }
    double accuracy = static_cast<double>(correct) / held_out.size();
    CHECK(accuracy >= 0.9);
}
