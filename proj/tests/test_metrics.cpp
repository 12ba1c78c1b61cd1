#include <doctest.h>

#include "pathqa/common.hpp"
#include "pathqa/metrics.hpp"
#include "test_helpers.hpp"

using namespace pathqa;
using namespace pathqa::testing;

namespace {

TrainingQuestion span_question(const std::string& qid, std::vector<std::string> answers,
                               std::vector<std::string> gold) {
    TrainingQuestion tq;
    tq.qid = qid;
    tq.question = "q";
    tq.answers = std::move(answers);
    tq.gold_para_ids = std::move(gold);
    tq.answer_type = AnswerType::kSpan;
    return tq;
}

}  // namespace

TEST_CASE("answer normalization follows the SQuAD convention") {
    CHECK(exact_match("The Russian Civil War", "Russian Civil War"));
    CHECK(exact_match("an  apple!", "Apple"));
    CHECK(!exact_match("October 1922", "1922"));
    CHECK(token_f1("October 1922", "1922") == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(token_f1("", "anything") == 0.0);
    CHECK(exact_match("", ""));
}

TEST_CASE("retrieval metrics on definitional cases") {
    std::vector<Paragraph> paras;
    paras.push_back(make_para("A", 0, "holds the answer token prize"));
    paras.push_back(make_para("B", 0, "second gold paragraph"));
    paras.push_back(make_para("C", 0, "irrelevant words"));
    Corpus corpus = Corpus::from_paragraphs(std::move(paras));

    auto gold = span_question("q1", {"prize"}, {"A/0", "B/0"});

    SUBCASE("full path hit") {
        PredictedParagraphs pred{{"q1", {"A/0", "B/0"}}};
        auto m = eval_retrieval(pred, {gold}, corpus);
        CHECK(m.paragraph_recall == 1.0);
        CHECK(m.paragraph_em == 1.0);
        CHECK(m.answer_recall == 1.0);
    }
    SUBCASE("partial hit without the answer-bearing pair member") {
        PredictedParagraphs pred{{"q1", {"A/0", "C/0"}}};
        auto m = eval_retrieval(pred, {gold}, corpus);
        CHECK(m.paragraph_recall == 1.0);
        CHECK(m.paragraph_em == 0.0);
        CHECK(m.answer_recall == 1.0);  // A holds the answer
    }
    SUBCASE("total miss") {
        PredictedParagraphs pred{{"q1", {"C/0"}}};
        auto m = eval_retrieval(pred, {gold}, corpus);
        CHECK(m.paragraph_recall == 0.0);
        CHECK(m.paragraph_em == 0.0);
        CHECK(m.answer_recall == 0.0);
    }
    SUBCASE("missing qid is an error") {
        PredictedParagraphs pred{{"other", {"A/0"}}};
        CHECK_THROWS_AS(eval_retrieval(pred, {gold}, corpus), DataError);
    }
}

TEST_CASE("paragraph EM never exceeds paragraph recall; equality on single-hop") {
    std::vector<Paragraph> paras;
    paras.push_back(make_para("A", 0, "alpha"));
    paras.push_back(make_para("B", 0, "beta"));
    Corpus corpus = Corpus::from_paragraphs(std::move(paras));

    std::vector<TrainingQuestion> gold;
    PredictedParagraphs pred;
    for (int i = 0; i < 6; ++i) {
        auto tq = span_question("q" + std::to_string(i), {"alpha"}, {"A/0"});
        pred[tq.qid] = i % 2 ? std::vector<std::string>{"A/0"} : std::vector<std::string>{"B/0"};
        gold.push_back(tq);
    }
    auto m = eval_retrieval(pred, gold, corpus);
    CHECK(m.paragraph_em <= m.paragraph_recall);
    CHECK(m.paragraph_em == m.paragraph_recall);  // single-hop identity
}

TEST_CASE("ten-question fixture matches hand-computed metrics exactly") {
    std::vector<Paragraph> paras;
    paras.push_back(make_para("G1", 0, "gold one holds prize"));
    paras.push_back(make_para("G2", 0, "gold two plain"));
    paras.push_back(make_para("X", 0, "distractor"));
    Corpus corpus = Corpus::from_paragraphs(std::move(paras));

    std::vector<TrainingQuestion> gold;
    PredictedParagraphs paths;
    PredictedAnswers answers;
    // 6 two-hop questions: 4 full hits, 1 partial, 1 miss.
    for (int i = 0; i < 6; ++i) {
        auto tq = span_question("m" + std::to_string(i), {"prize"}, {"G1/0", "G2/0"});
        if (i < 4)
            paths[tq.qid] = {"G1/0", "G2/0"};
        else if (i == 4)
            paths[tq.qid] = {"G1/0", "X/0"};
        else
            paths[tq.qid] = {"X/0"};
        answers[tq.qid] = i < 4 ? "prize" : "wrong";
        gold.push_back(tq);
    }
    // 4 single-hop questions: 3 hits, 1 miss; one partial-credit answer.
    for (int i = 0; i < 4; ++i) {
        auto tq = span_question("s" + std::to_string(i), {"October 1922"}, {"G2/0"});
        paths[tq.qid] = i < 3 ? std::vector<std::string>{"G2/0"}
                              : std::vector<std::string>{"X/0"};
        answers[tq.qid] = i == 0 ? "October 1922" : (i == 1 ? "1922" : "");
        gold.push_back(tq);
    }

    auto rm = eval_retrieval(paths, gold, corpus);
    // PR: 5 of 6 multi-hop + 3 of 4 single-hop = 8/10.
    CHECK(rm.paragraph_recall == doctest::Approx(0.8).epsilon(1e-12));
    // P_EM: 4 of 6 multi-hop + 3 of 4 single-hop = 7/10.
    CHECK(rm.paragraph_em == doctest::Approx(0.7).epsilon(1e-12));
    // AR: multi-hop answer "prize" sits in G1 (5 hits); single-hop answer
    // "October 1922" appears nowhere = 0. Total 5/10.
    CHECK(rm.answer_recall == doctest::Approx(0.5).epsilon(1e-12));

    auto am = eval_answers(answers, gold);
    // EM: 4 multi-hop + 1 single-hop = 5/10.
    CHECK(am.em == doctest::Approx(0.5).epsilon(1e-12));
    // F1: multi-hop 4 exact; single-hop: 1.0 + 2/3 + 0 + 0.
    CHECK(am.f1 == doctest::Approx((4.0 + 1.0 + 2.0 / 3.0) / 10.0).epsilon(1e-12));
}

TEST_CASE("yes/no questions accept their class labels as answers") {
    TrainingQuestion tq;
    tq.qid = "y";
    tq.question = "is it";
    tq.answer_type = AnswerType::kYes;
    PredictedAnswers answers{{"y", "yes"}};
    auto m = eval_answers(answers, {tq});
    CHECK(m.em == 1.0);
    answers["y"] = "no";
    CHECK(eval_answers(answers, {tq}).em == 0.0);
}
