"""Toolkit for estimating human label distributions from classifier logits.

Provides the data model (label spaces, categorical distributions, annotator
counts, dataset splits), distribution estimation methods (softmax baseline,
MC dropout, deep ensembles, temperature re-calibration, distribution
distillation), soft-label evaluation metrics (KL, Jensen-Shannon distance,
accuracy, correlations, entropy quantiles), a synthetic annotator-population
simulator, and a CLI that orchestrates end-to-end experiments.
"""

from labeldist.core import (
    AnnotationCounts,
    BundleViolation,
    CategoricalDist,
    Example,
    LabelSpace,
    PredictionRecord,
    SplitBundle,
    TextPair,
    dist_from_counts,
    majority_label,
    validate_bundle,
)
from labeldist.metrics import (
    Direction,
    EntropyCurve,
    MetricsReport,
    accuracy,
    entropy,
    entropy_quantile,
    evaluate,
    js_distance,
    kl_divergence,
    pearson,
    spearman,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotationCounts",
    "BundleViolation",
    "CategoricalDist",
    "Direction",
    "EntropyCurve",
    "Example",
    "LabelSpace",
    "MetricsReport",
    "PredictionRecord",
    "SplitBundle",
    "TextPair",
    "accuracy",
    "dist_from_counts",
    "entropy",
    "entropy_quantile",
    "evaluate",
    "js_distance",
    "kl_divergence",
    "majority_label",
    "pearson",
    "spearman",
    "validate_bundle",
]
