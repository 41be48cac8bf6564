"""Divergences, accuracy, correlations, entropy, and report construction.

Conventions: KL divergence uses the natural log with the denominator clamped
at ``EPSILON`` so predictions that assign zero probability stay finite;
Jensen-Shannon distance is the square root of the base-2 Jensen-Shannon
divergence, which bounds it in [0, 1]; entropies are reported in nats.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from labeldist.core import (
    AnnotationCounts,
    CategoricalDist,
    Example,
    dist_from_counts,
    majority_label,
)

#: Denominator clamp for KL; keeps KL finite when the denominator
#: distribution assigns zero probability.
EPSILON = 1e-12


class Direction(enum.Enum):
    """Which argument sits in the KL numerator.

    ``GOLD_VS_PRED`` is KL(gold || pred), the default scoring convention;
    ``PRED_VS_GOLD`` is the reverse, offered because the fitting objective of
    temperature scaling is sometimes written that way.
    """

    GOLD_VS_PRED = "gold_vs_pred"
    PRED_VS_GOLD = "pred_vs_gold"


def _check_same_k(p: CategoricalDist, q: CategoricalDist) -> None:
    if len(p) != len(q):
        raise ValueError(f"distributions have different lengths: {len(p)} vs {len(q)}")


def kl_divergence(p: CategoricalDist, q: CategoricalDist, direction: Direction = Direction.GOLD_VS_PRED) -> float:
    """KL divergence in nats between a gold distribution ``p`` and a
    prediction ``q``; ``direction`` picks which is the numerator."""
    _check_same_k(p, q)
    a, b = (p, q) if direction is Direction.GOLD_VS_PRED else (q, p)
    num = a.as_array()
    den = np.maximum(b.as_array(), EPSILON)
    mask = num > 0.0
    return float(np.sum(num[mask] * np.log(num[mask] / den[mask])))


def js_distance(p: CategoricalDist, q: CategoricalDist) -> float:
    """Jensen-Shannon distance: sqrt of the base-2 JS divergence, in [0, 1]."""
    _check_same_k(p, q)
    pa, qa = p.as_array(), q.as_array()
    m = (pa + qa) / 2.0

    def _kl2(num: np.ndarray) -> float:
        mask = num > 0.0
        return float(np.sum(num[mask] * np.log2(num[mask] / m[mask])))

    divergence = (_kl2(pa) + _kl2(qa)) / 2.0
    return min(1.0, float(np.sqrt(max(divergence, 0.0))))


def entropy(p: CategoricalDist) -> float:
    """Shannon entropy in nats; lies in [0, ln K]."""
    arr = p.as_array()
    mask = arr > 0.0
    return float(-np.sum(arr[mask] * np.log(arr[mask])))


def accuracy(
    preds: Sequence[CategoricalDist],
    golds: Sequence[AnnotationCounts | Sequence[int]],
) -> float:
    """Fraction of examples whose predicted argmax matches the majority
    annotator label, both with lowest-index tie-breaking."""
    if len(preds) != len(golds):
        raise ValueError(f"got {len(preds)} predictions but {len(golds)} gold count vectors")
    if not preds:
        raise ValueError("accuracy needs at least one example")
    hits = sum(1 for pred, gold in zip(preds, golds) if pred.argmax() == majority_label(gold))
    return hits / len(preds)


def _check_correlation_inputs(xs: Sequence[float], ys: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"correlation inputs must be equal-length 1-d sequences, got {x.shape} and {y.shape}")
    if len(x) < 2:
        raise ValueError("correlation needs at least two points")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ValueError("correlation undefined for a constant sequence")
    return x, y


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient."""
    x, y = _check_correlation_inputs(xs, ys)
    dx = x - x.mean()
    dy = y - y.mean()
    r = float(np.sum(dx * dy) / np.sqrt(np.sum(dx * dx) * np.sum(dy * dy)))
    return max(-1.0, min(1.0, r))


def _fractional_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the average of their rank block."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    n = len(values)
    sorted_vals = values[order]
    while i < n:
        j = i
        while j + 1 < n and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Spearman rank correlation: Pearson on fractional (tie-averaged) ranks."""
    x, y = _check_correlation_inputs(xs, ys)
    return pearson(_fractional_ranks(x), _fractional_ranks(y))


@dataclass(frozen=True)
class PerExampleRecord:
    """One evaluated example: divergences plus both distributions."""

    id: str
    jsd: float
    kl: float
    pred: CategoricalDist
    gold: CategoricalDist

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "jsd": self.jsd,
            "kl": self.kl,
            "pred": list(self.pred.probs),
            "gold": list(self.gold.probs),
        }


@dataclass(frozen=True)
class MetricsReport:
    """Aggregate scores of predicted distributions against soft gold labels."""

    jsd_mean: float
    kl_mean: float
    accuracy: float
    n_examples: int
    pearson: float | None = None
    spearman: float | None = None
    per_example: tuple[PerExampleRecord, ...] | None = None

    def __post_init__(self) -> None:
        if self.n_examples < 1:
            raise ValueError("a report needs at least one example")
        if not 0.0 <= self.jsd_mean <= 1.0:
            raise ValueError(f"mean JSD must lie in [0, 1], got {self.jsd_mean!r}")
        if self.kl_mean < 0.0:
            raise ValueError(f"mean KL must be non-negative, got {self.kl_mean!r}")
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError(f"accuracy must lie in [0, 1], got {self.accuracy!r}")
        for name in ("pearson", "spearman"):
            value = getattr(self, name)
            if value is not None and not -1.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [-1, 1], got {value!r}")

    def to_dict(self) -> dict:
        return {
            "jsd_mean": self.jsd_mean,
            "kl_mean": self.kl_mean,
            "accuracy": self.accuracy,
            "n_examples": self.n_examples,
            "pearson": self.pearson,
            "spearman": self.spearman,
            "per_example": [rec.to_dict() for rec in self.per_example] if self.per_example is not None else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @staticmethod
    def from_dict(obj: Mapping) -> "MetricsReport":
        per_example = None
        if obj.get("per_example") is not None:
            per_example = tuple(
                PerExampleRecord(
                    id=rec["id"],
                    jsd=rec["jsd"],
                    kl=rec["kl"],
                    pred=CategoricalDist(tuple(rec["pred"])),
                    gold=CategoricalDist(tuple(rec["gold"])),
                )
                for rec in obj["per_example"]
            )
        return MetricsReport(
            jsd_mean=obj["jsd_mean"],
            kl_mean=obj["kl_mean"],
            accuracy=obj["accuracy"],
            n_examples=obj["n_examples"],
            pearson=obj.get("pearson"),
            spearman=obj.get("spearman"),
            per_example=per_example,
        )


def evaluate(
    preds: Mapping[str, CategoricalDist],
    split: Sequence[Example],
    *,
    direction: Direction = Direction.GOLD_VS_PRED,
    per_example: bool = False,
    entailment_index: int = 0,
) -> MetricsReport:
    """Score predictions against a soft-labeled split.

    Every example must have a prediction and annotation counts. Mean JSD and
    mean KL are unweighted means over examples; accuracy compares predicted
    argmax with the majority annotator label. When at least two examples
    carry a graded score, Pearson and Spearman correlations between the
    predicted probability at ``entailment_index`` and the graded score are
    included.
    """
    if not split:
        raise ValueError("evaluate needs at least one example")

    jsds = np.empty(len(split))
    kls = np.empty(len(split))
    dists: list[CategoricalDist] = []
    golds: list[AnnotationCounts] = []
    records: list[PerExampleRecord] = []
    graded_pairs: list[tuple[float, float]] = []

    for i, ex in enumerate(split):
        if ex.id not in preds:
            raise KeyError(f"missing prediction for example {ex.id!r}")
        if ex.counts is None:
            raise ValueError(f"example {ex.id!r} carries no annotation counts")
        pred = preds[ex.id]
        gold = dist_from_counts(ex.counts)
        jsds[i] = js_distance(gold, pred)
        kls[i] = kl_divergence(gold, pred, direction)
        dists.append(pred)
        golds.append(ex.counts)
        if per_example:
            records.append(PerExampleRecord(id=ex.id, jsd=float(jsds[i]), kl=float(kls[i]), pred=pred, gold=gold))
        if ex.graded_score is not None:
            graded_pairs.append((pred.probs[entailment_index], ex.graded_score))

    pearson_r = spearman_rho = None
    if len(graded_pairs) >= 2:
        xs = [pair[0] for pair in graded_pairs]
        ys = [pair[1] for pair in graded_pairs]
        pearson_r = pearson(xs, ys)
        spearman_rho = spearman(xs, ys)

    return MetricsReport(
        jsd_mean=float(np.mean(jsds)),
        kl_mean=float(np.mean(kls)),
        accuracy=accuracy(dists, golds),
        n_examples=len(split),
        pearson=pearson_r,
        spearman=spearman_rho,
        per_example=tuple(records) if per_example else None,
    )


@dataclass(frozen=True)
class EntropyCurve:
    """Prediction entropies of one series, sorted ascending over rank."""

    name: str
    points: tuple[tuple[int, float], ...]

    def __post_init__(self) -> None:
        pts = tuple((int(rank), float(value)) for rank, value in self.points)
        object.__setattr__(self, "points", pts)
        if not pts:
            raise ValueError("an entropy curve needs at least one point")
        entropies = [value for _, value in pts]
        if any(e < 0.0 for e in entropies):
            raise ValueError("entropies must be non-negative")
        if any(b < a for a, b in zip(entropies, entropies[1:])):
            raise ValueError("entropies must be non-decreasing in rank")

    def entropies(self) -> np.ndarray:
        return np.asarray([value for _, value in self.points])


def entropy_quantile(named_sets: Mapping[str, Sequence[CategoricalDist]]) -> list[EntropyCurve]:
    """Build one ascending-entropy curve per named prediction set.

    Each series is sorted independently, so rank i holds the i-th smallest
    entropy of that series; the curves are comparable pointwise by rank.
    """
    if not named_sets:
        raise ValueError("entropy_quantile needs at least one prediction set")
    lengths = {name: len(dists) for name, dists in named_sets.items()}
    if any(n == 0 for n in lengths.values()):
        empty = [name for name, n in lengths.items() if n == 0]
        raise ValueError(f"prediction sets must be non-empty; empty: {empty}")
    if len(set(lengths.values())) != 1:
        raise ValueError(f"all prediction sets must have the same length, got {lengths}")

    curves = []
    for name, dists in named_sets.items():
        values = sorted(entropy(d) for d in dists)
        curves.append(EntropyCurve(name=name, points=tuple(enumerate(values))))
    return curves


def curves_to_csv(curves: Sequence[EntropyCurve]) -> str:
    lines = ["rank,entropy,series"]
    for curve in curves:
        for rank, value in curve.points:
            lines.append(f"{rank},{value!r},{curve.name}")
    return "\n".join(lines) + "\n"


def curves_to_svg(curves: Sequence[EntropyCurve], title: str = "Entropy quantile curves") -> str:
    from labeldist.svgchart import line_chart

    series = [(curve.name, [(float(rank), value) for rank, value in curve.points]) for curve in curves]
    return line_chart(series, title=title, x_label="rank", y_label="entropy (nats)")
