"""Domain types for labels, distributions, annotations, examples, and splits.

All types are immutable after construction and validate their invariants in
the constructor, so a value that exists is a value that is well-formed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

DEFAULT_LABELS: tuple[str, ...] = ("entailment", "neutral", "contradiction")

#: Tolerance for "probabilities sum to one" checks.
SUM_TOLERANCE = 1e-9

PREDICTION_SOURCES = ("deterministic", "mc_dropout", "ensemble")


@dataclass(frozen=True)
class LabelSpace:
    """Ordered label vocabulary.

    The order is fixed and is the tie-break order for every argmax/majority
    computation in the toolkit: ties resolve to the lowest index.
    """

    labels: tuple[str, ...] = DEFAULT_LABELS

    def __post_init__(self) -> None:
        labels = tuple(str(name) for name in self.labels)
        object.__setattr__(self, "labels", labels)
        if len(labels) < 2:
            raise ValueError("a label space needs at least two labels")
        if len(set(labels)) != len(labels):
            raise ValueError(f"label names must be unique, got {labels!r}")

    @property
    def k(self) -> int:
        return len(self.labels)

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValueError(f"unknown label {label!r}; known labels: {self.labels}") from None


@dataclass(frozen=True)
class CategoricalDist:
    """A probability vector over the labels of a :class:`LabelSpace`."""

    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "probs", probs)
        if len(probs) < 2:
            raise ValueError("a categorical distribution needs at least two entries")
        arr = np.asarray(probs, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"probabilities must be finite, got {probs!r}")
        if np.any(arr < 0.0):
            raise ValueError(f"probabilities must be non-negative, got {probs!r}")
        total = float(arr.sum())
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise ValueError(f"probabilities must sum to 1 within {SUM_TOLERANCE}, got sum {total!r}")

    def __len__(self) -> int:
        return len(self.probs)

    def __getitem__(self, i: int) -> float:
        return self.probs[i]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=np.float64)

    def argmax(self) -> int:
        """Index of the largest probability; ties break to the lowest index."""
        return int(np.argmax(self.as_array()))


@dataclass(frozen=True)
class AnnotationCounts:
    """Per-label annotator counts for one example."""

    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        coerced = []
        for c in self.counts:
            value = int(c)
            if value != c:
                raise ValueError(f"counts must be integers, got {c!r}")
            if value < 0:
                raise ValueError(f"counts must be non-negative, got {c!r}")
            coerced.append(value)
        object.__setattr__(self, "counts", tuple(coerced))
        if len(coerced) < 2:
            raise ValueError("annotation counts need at least two entries")
        if sum(coerced) < 1:
            raise ValueError("annotation counts must sum to at least 1")

    def __len__(self) -> int:
        return len(self.counts)

    def total(self) -> int:
        return sum(self.counts)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.int64)


class TextPair(NamedTuple):
    premise: str
    hypothesis: str


@dataclass(frozen=True)
class Example:
    """One dataset item: a payload plus whatever label information exists.

    The payload is either a numeric feature vector or a text pair (or both);
    label information is any of a single hard label, per-label annotator
    counts, or a graded score in [0, 1]. Which of these must be present
    depends on the split; see :func:`validate_bundle`.
    """

    id: str
    features: tuple[float, ...] | None = None
    text: TextPair | None = None
    hard_label: int | None = None
    counts: AnnotationCounts | None = None
    graded_score: float | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("example id must be a non-empty string")
        if self.features is not None:
            object.__setattr__(self, "features", tuple(float(v) for v in self.features))
        if self.text is not None and not isinstance(self.text, TextPair):
            object.__setattr__(self, "text", TextPair(*self.text))
        if self.hard_label is not None:
            label = int(self.hard_label)
            if label < 0:
                raise ValueError(f"hard label must be a non-negative index, got {label}")
            object.__setattr__(self, "hard_label", label)
        if self.counts is not None and not isinstance(self.counts, AnnotationCounts):
            object.__setattr__(self, "counts", AnnotationCounts(tuple(self.counts)))
        if self.graded_score is not None:
            score = float(self.graded_score)
            if not 0.0 <= score <= 1.0:
                raise ValueError(f"graded score must lie in [0, 1], got {score!r}")
            object.__setattr__(self, "graded_score", score)

    def has_label(self) -> bool:
        return self.hard_label is not None or self.counts is not None or self.graded_score is not None


@dataclass(frozen=True)
class SplitBundle:
    """The four-way split: hard-labeled train/dev plus soft-labeled dev_s/test_s."""

    train: tuple[Example, ...]
    dev: tuple[Example, ...]
    dev_s: tuple[Example, ...]
    test_s: tuple[Example, ...]

    def __post_init__(self) -> None:
        for name in ("train", "dev", "dev_s", "test_s"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    def split(self, name: str) -> tuple[Example, ...]:
        if name not in ("train", "dev", "dev_s", "test_s"):
            raise ValueError(f"unknown split {name!r}")
        return getattr(self, name)


@dataclass(frozen=True)
class PredictionRecord:
    """Raw logits for one example: k score vectors, one per stochastic pass
    or ensemble member."""

    id: str
    logit_sets: tuple[tuple[float, ...], ...]
    source: str = "deterministic"

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("prediction record id must be a non-empty string")
        sets = tuple(tuple(float(v) for v in row) for row in self.logit_sets)
        object.__setattr__(self, "logit_sets", sets)
        if len(sets) < 1:
            raise ValueError(f"record {self.id!r} needs at least one logit vector")
        width = len(sets[0])
        if width < 2:
            raise ValueError(f"record {self.id!r} logit vectors need at least two entries")
        if any(len(row) != width for row in sets):
            raise ValueError(f"record {self.id!r} has logit vectors of unequal length")
        if self.source not in PREDICTION_SOURCES:
            raise ValueError(f"unknown prediction source {self.source!r}; expected one of {PREDICTION_SOURCES}")

    @property
    def k(self) -> int:
        return len(self.logit_sets)


class BundleViolation(NamedTuple):
    """One broken bundle invariant, locatable by split and example id."""

    split: str
    example_id: str
    message: str

    def __str__(self) -> str:
        return f"{self.split}:{self.example_id}: {self.message}"


def _coerce_counts(counts: AnnotationCounts | Sequence[int]) -> AnnotationCounts:
    if isinstance(counts, AnnotationCounts):
        return counts
    return AnnotationCounts(tuple(counts))


def dist_from_counts(counts: AnnotationCounts | Sequence[int]) -> CategoricalDist:
    """Normalize annotator counts into an empirical label distribution."""
    counts = _coerce_counts(counts)
    total = counts.total()
    return CategoricalDist(tuple(c / total for c in counts.counts))


def majority_label(counts: AnnotationCounts | Sequence[int]) -> int:
    """Index of the most-voted label; ties break to the lowest index."""
    counts = _coerce_counts(counts)
    return int(np.argmax(counts.as_array()))


def validate_bundle(bundle: SplitBundle, labelspace: LabelSpace | None = None) -> list[BundleViolation]:
    """Check every bundle invariant and return the violations found.

    Violations are data, not exceptions: an empty list means the bundle is
    well-formed. When ``labelspace`` is given, label indices and count vector
    lengths are also checked against it.
    """
    violations: list[BundleViolation] = []
    k = labelspace.k if labelspace is not None else None

    for split_name in ("train", "dev", "dev_s", "test_s"):
        for ex in bundle.split(split_name):
            if not ex.has_label():
                violations.append(BundleViolation(split_name, ex.id, "no hard label, counts, or graded score"))
            if k is not None and ex.hard_label is not None and ex.hard_label >= k:
                violations.append(
                    BundleViolation(split_name, ex.id, f"hard label {ex.hard_label} out of range for {k} labels")
                )
            if k is not None and ex.counts is not None and len(ex.counts) != k:
                violations.append(
                    BundleViolation(split_name, ex.id, f"counts have {len(ex.counts)} entries, expected {k}")
                )

    for split_name in ("dev_s", "test_s"):
        for ex in bundle.split(split_name):
            if ex.counts is None:
                violations.append(BundleViolation(split_name, ex.id, "soft split example lacks annotation counts"))

    dev_s_ids = {ex.id for ex in bundle.dev_s}
    for ex in bundle.test_s:
        if ex.id in dev_s_ids:
            violations.append(BundleViolation("dev_s/test_s", ex.id, "example id appears in both soft splits"))

    return violations
