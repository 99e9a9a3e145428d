"""Python bindings for the ragmark RAG benchmarking core."""

from ._ragmark import (
    Embedder,
    Generator,
    Index,
    LocalEmbedder,
    RagmarkError,
    answer,
    assemble_test_set,
    bleu,
    build_qa,
    config_keys,
    cosine,
    count_tokens,
    cs_score,
    extract_sentences,
    make_embedder,
    make_generator,
    meteor,
    prepare_answer,
    report_csv,
    rouge,
    run_experiment,
    score,
    split_paragraphs,
    split_sentences,
    summarize,
)

__all__ = [
    "Embedder",
    "Generator",
    "Index",
    "LocalEmbedder",
    "RagmarkError",
    "answer",
    "assemble_test_set",
    "bleu",
    "build_qa",
    "config_keys",
    "cosine",
    "count_tokens",
    "cs_score",
    "extract_sentences",
    "make_embedder",
    "make_generator",
    "meteor",
    "prepare_answer",
    "report_csv",
    "rouge",
    "run_experiment",
    "score",
    "split_paragraphs",
    "split_sentences",
    "summarize",
]
