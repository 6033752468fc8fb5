"""Masked-and-reordered RLVR at desk scale.

The compiled extension carries the whole surface; this package re-exports it
so ``import mrrlvr`` works the same from a wheel or a build tree.
"""

from ._core import (  # noqa: F401
    MaskedInstance,
    MrrlvrError,
    OutcomeInstance,
    ReorderInstance,
    __version__,
    evaluate_set,
    extract_boxed,
    format_mask_response,
    format_reorder_response,
    load_instances,
    load_outcomes,
    math_equivalent,
    normalize,
    pass_at_k,
    score_final,
    score_mask,
    score_reorder,
    text_similarity,
    train_stage,
)

__all__ = [
    "MaskedInstance",
    "MrrlvrError",
    "OutcomeInstance",
    "ReorderInstance",
    "__version__",
    "evaluate_set",
    "extract_boxed",
    "format_mask_response",
    "format_reorder_response",
    "load_instances",
    "load_outcomes",
    "math_equivalent",
    "normalize",
    "pass_at_k",
    "score_final",
    "score_mask",
    "score_reorder",
    "text_similarity",
    "train_stage",
]
