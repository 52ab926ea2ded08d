"""Python bindings for the realvul benchmark core."""

from ._realvul import (
    RealvulError,
    VectorStore,
    chunk,
    classify,
    cwe_distribution,
    format_percent,
    load_corpus,
    mock_embed,
    outcome_breakdown,
    parse_verdict,
    plan_size,
    render_prompt,
    run_cli,
    run_demo,
    score,
)

__all__ = [
    "RealvulError",
    "VectorStore",
    "chunk",
    "classify",
    "cwe_distribution",
    "format_percent",
    "load_corpus",
    "mock_embed",
    "outcome_breakdown",
    "parse_verdict",
    "plan_size",
    "render_prompt",
    "run_cli",
    "run_demo",
    "score",
]
