"""Uncertainty-based late fusion of per-model class probabilities."""
from .core import (
    FusekitError,
    ModelPredictions,
    PredictionSet,
    argmax_label,
    softmax,
    validate,
)
from .evaluation import cohens_d, count_improvements, effect_category, score
from .fusion import (
    METHODS,
    fuse,
    fuse_cw,
    fuse_max,
    fuse_mean,
    fuse_ul,
    fuse_ut,
    fuse_uw,
    search_threshold,
)
from .syngen import SynSpec, generate
from .uncertainty import entropy, normalize_entropy, uncertainty_matrix

__version__ = "0.1.0"

__all__ = [
    "FusekitError", "ModelPredictions", "PredictionSet", "argmax_label", "softmax", "validate",
    "cohens_d", "count_improvements", "effect_category", "score",
    "METHODS", "fuse", "fuse_cw", "fuse_max", "fuse_mean", "fuse_ul", "fuse_ut", "fuse_uw",
    "search_threshold", "SynSpec", "generate", "entropy", "normalize_entropy",
    "uncertainty_matrix",
]
