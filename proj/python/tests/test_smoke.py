"""Smoke tests for the python bindings: build a tiny world, train briefly,
retrieve and answer."""

import json
import os
import tempfile

import pytest

import pathqa


@pytest.fixture(scope="module")
def tiny_world():
    tmp = tempfile.mkdtemp(prefix="pathqa_smoke_")
    corpus_path = os.path.join(tmp, "corpus.jsonl")
    questions_path = os.path.join(tmp, "questions.jsonl")
    pathqa.gen_synth(
        corpus_path,
        questions_path,
        articles=120,
        paras_per_article=2,
        vocabulary=60,
        questions=60,
        seed=7,
    )
    corpus = pathqa.Corpus.load(corpus_path)
    graph = pathqa.Graph.build(corpus, "all")
    index = pathqa.Index.build(corpus, buckets=1 << 16)
    return tmp, corpus_path, questions_path, corpus, graph, index


def test_world_shapes(tiny_world):
    _, _, questions_path, corpus, graph, index = tiny_world
    assert len(corpus) > 100
    assert graph.num_nodes() == len(corpus)
    assert graph.num_edges() > 0
    with open(questions_path) as fh:
        questions = [json.loads(line) for line in fh]
    assert len(questions) == 60
    # The first gold paragraph is lexically reachable.
    q = questions[0]
    hits = index.top_f(q["question"], 5)
    assert any(pid == q["gold_paras"][0] for pid, _ in hits)


def test_graph_neighbors_are_sorted(tiny_world):
    _, _, _, corpus, graph, _ = tiny_world
    pid = corpus.para_ids()[0]
    neighbors = graph.neighbors(pid)
    assert neighbors == sorted(neighbors)


def test_retrieve_and_answer(tiny_world):
    tmp, _, questions_path, corpus, graph, index = tiny_world
    retriever = pathqa.Retriever(d=32, buckets=1 << 12, seed=3)
    stats = retriever.train(
        corpus, graph, index, questions_path, epochs=2, batch=8, negatives=10
    )
    assert stats["final_loss"] <= stats["initial_loss"]

    with open(questions_path) as fh:
        question = json.loads(fh.readline())["question"]
    paths = retriever.retrieve(corpus, graph, index, question, beam=4, f=10)
    assert paths, "beam search returned no paths"
    ids, log_score = paths[0]
    assert log_score <= 0.0
    assert len(ids) >= 1

    reader = pathqa.Reader(d=32, buckets=1 << 12, seed=5)
    reader.train(corpus, graph, index, questions_path, epochs=2, batch=32)
    pred = reader.answer(corpus, question, [(list(ids), log_score)])
    assert pred["has_answer"]
    assert isinstance(pred["answer"], str)

    ckpt = os.path.join(tmp, "retriever.ckpt")
    retriever.save(ckpt)
    reloaded = pathqa.Retriever.load(ckpt)
    paths2 = reloaded.retrieve(corpus, graph, index, question, beam=4, f=10)
    assert paths[0][1] == paths2[0][1]


def test_metrics_helpers():
    assert pathqa.exact_match("The Answer", "answer")
    assert abs(pathqa.token_f1("October 1922", "1922") - 2.0 / 3.0) < 1e-12


def test_errors_are_typed():
    with pytest.raises(pathqa.DataError):
        pathqa.Corpus.load("/nonexistent/corpus.jsonl")
