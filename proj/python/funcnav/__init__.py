from ._funcnav import (
    FuncnavError,
    compute_success_rate,
    compute_tos,
    cosine_similarity,
    embed,
    navigate,
    preprocess_html,
    replay,
    retrieve_similar,
    run_cli,
    score_choices,
    should_stop,
)

__all__ = [
    "FuncnavError",
    "compute_success_rate",
    "compute_tos",
    "cosine_similarity",
    "embed",
    "navigate",
    "preprocess_html",
    "replay",
    "retrieve_similar",
    "run_cli",
    "score_choices",
    "should_stop",
]
