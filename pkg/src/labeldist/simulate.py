"""Synthetic annotator-population generator.

Each example gets a true opinion distribution p* drawn from a Dirichlet;
features are a fixed random linear map of the noise-perturbed log-odds of
p*, so example ambiguity is (partially) recoverable from the input. Train
and dev examples carry a single sampled hard label, mirroring the common
single-annotator regime; the soft splits carry counts from n annotator
draws. Ground truth is kept alongside so directional claims can be checked
against the generating distribution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from labeldist.core import (
    DEFAULT_LABELS,
    AnnotationCounts,
    CategoricalDist,
    Example,
    LabelSpace,
    SplitBundle,
    dist_from_counts,
)
from labeldist.metrics import MetricsReport, evaluate
from labeldist.seeding import derive_rng

_LOGIT_CLAMP = 1e-6


@dataclass(frozen=True)
class SimConfig:
    n_train: int = 2000
    n_dev: int = 500
    n_dev_s: int = 100
    n_test_s: int = 500
    dirichlet_alpha: tuple[float, ...] = (1.0, 1.0, 1.0)
    annotators_per_example: int = 100
    feature_dim: int = 16
    feature_noise_sigma: float = 0.5
    seed: int = 0
    labels: tuple[str, ...] = DEFAULT_LABELS

    def __post_init__(self) -> None:
        object.__setattr__(self, "dirichlet_alpha", tuple(float(a) for a in self.dirichlet_alpha))
        object.__setattr__(self, "labels", tuple(self.labels))
        if min(self.n_train, self.n_dev, self.n_dev_s, self.n_test_s) < 1:
            raise ValueError("every split size must be positive")
        if any(a <= 0 for a in self.dirichlet_alpha):
            raise ValueError(f"Dirichlet alpha entries must be positive, got {self.dirichlet_alpha!r}")
        if len(self.labels) != len(self.dirichlet_alpha):
            raise ValueError("one Dirichlet alpha entry per label is required")
        if self.annotators_per_example < 1:
            raise ValueError("annotators_per_example must be >= 1")
        if self.feature_dim < 1:
            raise ValueError("feature_dim must be >= 1")
        if self.feature_noise_sigma < 0:
            raise ValueError("feature_noise_sigma must be >= 0")

    @property
    def k(self) -> int:
        return len(self.labels)

    def labelspace(self) -> LabelSpace:
        return LabelSpace(self.labels)

    def to_dict(self) -> dict:
        return {
            "n_train": self.n_train,
            "n_dev": self.n_dev,
            "n_dev_s": self.n_dev_s,
            "n_test_s": self.n_test_s,
            "dirichlet_alpha": list(self.dirichlet_alpha),
            "annotators_per_example": self.annotators_per_example,
            "feature_dim": self.feature_dim,
            "feature_noise_sigma": self.feature_noise_sigma,
            "seed": self.seed,
            "labels": list(self.labels),
        }

    @staticmethod
    def from_dict(obj: Mapping) -> "SimConfig":
        known = {f: obj[f] for f in SimConfig.__dataclass_fields__ if f in obj}
        for key in ("dirichlet_alpha", "labels"):
            if key in known:
                known[key] = tuple(known[key])
        return SimConfig(**known)


@dataclass(frozen=True)
class GroundTruth:
    """True per-example opinion distributions, keyed by example id."""

    dists: dict[str, CategoricalDist]

    def __getitem__(self, ex_id: str) -> CategoricalDist:
        return self.dists[ex_id]

    def __len__(self) -> int:
        return len(self.dists)

    def items(self):
        return self.dists.items()


def sample_annotations(p_star: CategoricalDist, n: int, rng: np.random.Generator) -> AnnotationCounts:
    """Counts of n independent annotator draws from p*."""
    if n < 1:
        raise ValueError(f"need at least one annotator, got n={n}")
    counts = rng.multinomial(n, p_star.as_array())
    return AnnotationCounts(tuple(int(c) for c in counts))


def _features_for(p_star: np.ndarray, feature_map: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    clamped = np.clip(p_star, _LOGIT_CLAMP, 1.0 - _LOGIT_CLAMP)
    log_odds = np.log(clamped / (1.0 - clamped))
    noisy = log_odds + sigma * rng.normal(size=len(log_odds))
    return feature_map @ noisy


def gen_dataset(cfg: SimConfig) -> tuple[SplitBundle, GroundTruth]:
    """Generate a four-way split plus its ground-truth distribution table.

    Per-example RNG streams are derived from (seed, split, index), so the
    bundle is byte-identical across re-runs with the same config.
    """
    map_rng = derive_rng(cfg.seed, "feature-map")
    feature_map = map_rng.normal(size=(cfg.feature_dim, cfg.k)) / np.sqrt(cfg.k)

    truth: dict[str, CategoricalDist] = {}
    splits: dict[str, tuple[Example, ...]] = {}
    plan = [
        ("train", cfg.n_train, False),
        ("dev", cfg.n_dev, False),
        ("dev_s", cfg.n_dev_s, True),
        ("test_s", cfg.n_test_s, True),
    ]
    for split_name, size, soft in plan:
        examples = []
        for i in range(size):
            rng = derive_rng(cfg.seed, split_name, i)
            p_star = rng.dirichlet(cfg.dirichlet_alpha)
            ex_id = f"{split_name}-{i:05d}"
            features = _features_for(p_star, feature_map, cfg.feature_noise_sigma, rng)
            if soft:
                counts = sample_annotations(CategoricalDist(tuple(p_star)), cfg.annotators_per_example, rng)
                ex = Example(id=ex_id, features=tuple(features), counts=counts)
            else:
                label = int(rng.choice(cfg.k, p=p_star))
                ex = Example(id=ex_id, features=tuple(features), hard_label=label)
            examples.append(ex)
            truth[ex_id] = CategoricalDist(tuple(p_star))
        splits[split_name] = tuple(examples)

    bundle = SplitBundle(**splits)
    return bundle, GroundTruth(truth)


def human_upper_bound(test_s: tuple[Example, ...] | list[Example], seed: int = 0) -> MetricsReport:
    """Split-half agreement analog of a human performance estimate.

    Each example's annotations are randomly partitioned into two halves; the
    first half's empirical distribution plays the prediction, the second
    half's the gold, and the pair is scored with the standard metrics.
    """
    preds: dict[str, CategoricalDist] = {}
    gold_examples = []
    for ex in test_s:
        if ex.counts is None:
            raise ValueError(f"example {ex.id!r} carries no annotation counts")
        total = ex.counts.total()
        if total < 2:
            raise ValueError(f"example {ex.id!r} has fewer than two annotations; cannot split in half")
        labels = np.repeat(np.arange(len(ex.counts)), ex.counts.as_array())
        rng = derive_rng(seed, "half", ex.id)
        rng.shuffle(labels)
        n_a = total // 2
        half_a = np.bincount(labels[:n_a], minlength=len(ex.counts))
        half_b = np.bincount(labels[n_a:], minlength=len(ex.counts))
        preds[ex.id] = dist_from_counts(tuple(int(c) for c in half_a))
        gold_examples.append(Example(id=ex.id, counts=AnnotationCounts(tuple(int(c) for c in half_b))))
    return evaluate(preds, gold_examples)
