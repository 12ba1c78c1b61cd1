"""Reasoning-path retrieval over a paragraph graph: python surface.

The compiled extension exposes the core operations (corpus/graph/index
construction, synthetic benchmark generation, retriever/reader training,
beam-search retrieval, answering and answer metrics).
"""

from _pathqa import (  # noqa: F401
    Corpus,
    DataError,
    Graph,
    Index,
    NumericError,
    Reader,
    Retriever,
    UsageError,
    exact_match,
    gen_synth,
    token_f1,
)

__all__ = [
    "Corpus",
    "Graph",
    "Index",
    "Reader",
    "Retriever",
    "UsageError",
    "DataError",
    "NumericError",
    "exact_match",
    "gen_synth",
    "token_f1",
]
