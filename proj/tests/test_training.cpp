#include <doctest.h>

#include <cmath>
#include <random>

#include "pathqa/common.hpp"
#include "pathqa/retriever.hpp"
#include "pathqa/text.hpp"
#include "test_helpers.hpp"
#include "gradient_check.hpp"

using namespace pathqa;
using namespace pathqa::testing;

namespace {

EncoderConfig tiny_encoder(uint32_t d = 4) {
    EncoderConfig cfg;
    cfg.d = d;
    cfg.bucket_count = 16;
    return cfg;
}

Corpus five_node_corpus() {
    std::vector<Paragraph> paras;
    paras.push_back(make_para("a", 0, "alpha link bravo", {"b"}));
    paras.push_back(make_para("b", 0, "bravo deep content", {"c"}));
    paras.push_back(make_para("c", 0, "charlie words"));
    paras.push_back(make_para("d", 0, "delta noise"));
    paras.push_back(make_para("e", 0, "echo filler"));
    return Corpus::from_paragraphs(std::move(paras));
}

}  // namespace

TEST_CASE("single-step loss: gold and negative at probability one half") {
    // Zero parameters give w = 0 for every text, so every step probability is
    // sigmoid(0) = 0.5. The degenerate gold path [EOE] isolates one step:
    // L = -log(0.5) - log(1 - 0.5) = 2 log 2.
    RetrieverModel model(tiny_encoder(2));
    model.s_->value = {1.0, 0.0};
    model.alpha_->value[0] = 1.0;
    Corpus corpus = five_node_corpus();

    RetrieverExampleData ex;
    ex.question = "alpha";
    ex.gold_nodes = {};
    ex.negatives = {{corpus.require("d/0")}};
    double loss = retriever_loss(model, corpus, ex, false);
    CHECK(loss == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));

    SUBCASE("a two-step no-recurrence fixture adds one more half-probability factor") {
        RetrieverExampleData two;
        two.question = "alpha";
        two.gold_nodes = {corpus.require("a/0")};
        two.negatives = {{corpus.require("d/0"), kEoeNode}, {}};
        double l2 = retriever_loss(model, corpus, two, false, /*recurrence=*/false);
        // step 1: gold 0.5, negative 0.5, EOE-negative 0.5; step 2: EOE 0.5.
        CHECK(l2 == doctest::Approx(4.0 * std::log(2.0)).epsilon(1e-12));
    }
}

TEST_CASE("saturated fixture drives the loss to the clipping floor") {
    // Hand-set parameters separate gold from negative by a huge margin; with
    // probability clipping at 1e-12 the loss is numerically zero.
    EncoderConfig cfg = tiny_encoder(2);
    RetrieverModel model(cfg);
    auto& E = model.encoder().params().require("encoder.embeddings").value;
    auto& P = model.encoder().params().require("encoder.projection").value;
    auto& eoe = model.encoder().params().require("encoder.eoe").value;
    std::fill(model.encoder().params().require("encoder.gain").value.begin(),
              model.encoder().params().require("encoder.gain").value.end(), 1.0);
    P = {1.0, 0.0, 0.0, 1.0};

    Corpus corpus = [&] {
        std::vector<Paragraph> paras;
        paras.push_back(make_para("g", 0, "gg"));
        paras.push_back(make_para("n", 0, "nn"));
        return Corpus::from_paragraphs(std::move(paras));
    }();
    const uint32_t fg = fnv1a32("gg") & 15u;
    const uint32_t fn = fnv1a32("nn") & 15u;
    E[fg * 2 + 0] = 1.0;   // standardizes to (+1, -1)
    E[fn * 2 + 0] = -1.0;  // standardizes to (-1, +1)
    eoe = {1.0, -1.0};

    model.s_->value = {1.0, -1.0};
    model.alpha_->value[0] = 40.0;

    RetrieverExampleData ex;
    ex.question = "";
    ex.gold_nodes = {corpus.require("g/0")};
    ex.negatives = {{corpus.require("n/0")}, {}};
    double loss = retriever_loss(model, corpus, ex, false, /*recurrence=*/false);
    CHECK(loss < 1e-9);
    CHECK(loss >= 0.0);
}

TEST_CASE("retriever loss gradients match finite differences on 2-step fixtures") {
    Corpus corpus = five_node_corpus();
    double worst = 0.0;
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        RetrieverModel model(tiny_encoder(4));
        model.init_params(seed);
        const bool independent = seed % 4 == 0;
        if (independent) {
            EncoderConfig cfg = tiny_encoder(4);
            cfg.mode = EncoderMode::kQuestionIndependent;
            RetrieverModel alt(cfg);
            alt.init_params(seed);
            RetrieverExampleData ex;
            ex.question = "alpha question";
            ex.gold_nodes = {corpus.require("a/0"), corpus.require("b/0")};
            ex.negatives = {{corpus.require("d/0"), kEoeNode},
                            {corpus.require("c/0"), corpus.require("e/0"), kEoeNode},
                            {corpus.require("d/0")}};
            alt.zero_grad();
            retriever_loss(alt, corpus, ex, true);
            auto eval = [&]() { return retriever_loss(alt, corpus, ex, false); };
            worst = std::max(worst,
                             finite_difference_check(alt.trainable(), eval).max_rel_err);
            continue;
        }
        RetrieverExampleData ex;
        ex.question = "alpha question";
        ex.gold_nodes = {corpus.require("a/0"), corpus.require("b/0")};
        ex.negatives = {{corpus.require("d/0"), kEoeNode},
                        {corpus.require("c/0"), corpus.require("e/0"), kEoeNode},
                        {corpus.require("d/0")}};
        const bool recurrence = seed % 5 != 0;
        model.zero_grad();
        retriever_loss(model, corpus, ex, true, recurrence);
        auto eval = [&]() { return retriever_loss(model, corpus, ex, false, recurrence); };
        worst = std::max(worst, finite_difference_check(model.trainable(), eval).max_rel_err);
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("negative set arity must match the gold path") {
    RetrieverModel model(tiny_encoder(2));
    model.init_params(1);
    Corpus corpus = five_node_corpus();
    RetrieverExampleData ex;
    ex.question = "q";
    ex.gold_nodes = {corpus.require("a/0")};
    ex.negatives = {{corpus.require("d/0")}};  // missing the terminal-step set
    CHECK_THROWS_AS(retriever_loss(model, corpus, ex, false), UsageError);
}

TEST_CASE("training a single example drives its loss below 0.05 within 500 steps") {
    Corpus corpus = five_node_corpus();
    RetrieverModel model(tiny_encoder(8));
    model.init_params(11);

    RetrieverExampleData ex;
    ex.question = "alpha link";
    ex.gold_nodes = {corpus.require("a/0"), corpus.require("b/0")};
    ex.negatives = {{corpus.require("d/0"), corpus.require("e/0"), kEoeNode},
                    {corpus.require("c/0"), kEoeNode},
                    {corpus.require("d/0")}};

    TrainConfig cfg;
    cfg.epochs = 500;
    cfg.batch_size = 1;
    cfg.lr = 1e-2;
    TrainStats stats = train_retriever(model, corpus, {ex}, cfg);
    CHECK(stats.steps == 500);
    CHECK(stats.final_loss < 0.05);
    CHECK(stats.final_loss <= stats.initial_loss);
}

TEST_CASE("same seed produces bit-identical checkpoints") {
    Corpus corpus = five_node_corpus();
    RetrieverExampleData ex;
    ex.question = "alpha link";
    ex.gold_nodes = {corpus.require("a/0")};
    ex.negatives = {{corpus.require("d/0"), kEoeNode}, {corpus.require("e/0")}};

    auto run = [&](const std::string& path) {
        RetrieverModel model(tiny_encoder(4));
        model.init_params(7);
        TrainConfig cfg;
        cfg.epochs = 5;
        cfg.batch_size = 1;
        cfg.seed = 99;
        train_retriever(model, corpus, {ex}, cfg);
        model.save(path);
    };
    std::string p1 = tmp_path("train_det1.ckpt"), p2 = tmp_path("train_det2.ckpt");
    run(p1);
    run(p2);
    CHECK(read_text_file(p1) == read_text_file(p2));
}

TEST_CASE("training over gold and augmented paths does not increase the joint loss") {
    Corpus corpus = five_node_corpus();
    RetrieverModel model(tiny_encoder(8));
    model.init_params(23);

    // g = [b], g_r = [a, b] (a links to b).
    RetrieverExampleData g;
    g.question = "bravo deep";
    g.gold_nodes = {corpus.require("b/0")};
    g.negatives = {{corpus.require("d/0"), kEoeNode}, {corpus.require("e/0")}};

    RetrieverExampleData gr;
    gr.question = "bravo deep";
    gr.gold_nodes = {corpus.require("a/0"), corpus.require("b/0")};
    gr.negatives = {{corpus.require("d/0"), kEoeNode},
                    {corpus.require("d/0"), kEoeNode},
                    {corpus.require("e/0")}};

    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.batch_size = 2;
    TrainStats stats = train_retriever(model, corpus, {g, gr}, cfg);
    CHECK(stats.final_loss <= stats.initial_loss);
}

TEST_CASE("model checkpoints round-trip through save and load") {
    RetrieverModel model(tiny_encoder(4));
    model.init_params(3);
    std::string path = tmp_path("model_rt.ckpt");
    model.save(path);

    RetrieverModel loaded(tiny_encoder(4));
    loaded.load(path);
    CHECK(loaded.s_->value == model.s_->value);
    CHECK(loaded.encoder().params().require("encoder.embeddings").value ==
          model.encoder().params().require("encoder.embeddings").value);
}
