"""Distribution estimation methods.

Four ways to turn classifier logits into an estimate of the human label
distribution: the plain softmax baseline, MC-dropout and deep-ensemble
aggregation (mean of k sampled predictions), temperature re-calibration
fitted on a small soft-labeled split, and distribution distillation
(re-label the train set with a teacher, train a student on the soft labels).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Mapping, Sequence

import numpy as np

from labeldist import model as model_mod
from labeldist.core import AnnotationCounts, CategoricalDist, Example, LabelSpace, PredictionRecord, dist_from_counts
from labeldist.metrics import EPSILON, Direction
from labeldist.model import MlpConfig, ModelParams, Objective, TrainConfig, TrainResult
from labeldist.seeding import SeedKey, derive_rng

#: Pseudo soft labels are stored as integer counts at this resolution so the
#: relabeled train set round-trips through the standard example schema.
DISTILL_COUNT_SCALE = 10**6

#: Number of evenly spaced log-temperature points used to verify (and, if
#: needed, override) the golden-section search result.
GRID_POINTS = 100

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_INV_PHI_SQ = (3.0 - math.sqrt(5.0)) / 2.0


@dataclass(frozen=True)
class Temperature:
    """A positive scaling divisor for logits."""

    value: float

    def __post_init__(self) -> None:
        value = float(self.value)
        object.__setattr__(self, "value", value)
        if not math.isfinite(value) or value <= 0.0:
            raise ValueError(f"temperature must be positive and finite, got {value!r}")


class TargetType(Enum):
    SOFT_COUNTS = "soft_counts"
    HARD_ONEHOT = "hard_onehot"


@dataclass(frozen=True)
class FitConfig:
    """Options for fitting a temperature on held-out targets."""

    direction: Direction = Direction.GOLD_VS_PRED
    log10_bounds: tuple[float, float] = (-2.0, 2.0)
    tolerance: float = 1e-6
    target_type: TargetType = TargetType.SOFT_COUNTS

    def __post_init__(self) -> None:
        lo, hi = self.log10_bounds
        object.__setattr__(self, "log10_bounds", (float(lo), float(hi)))
        if not lo < hi:
            raise ValueError(f"search bounds must be ordered, got {self.log10_bounds!r}")
        if self.tolerance <= 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance!r}")

    def to_dict(self) -> dict:
        return {
            "direction": self.direction.value,
            "log10_bounds": list(self.log10_bounds),
            "tolerance": self.tolerance,
            "target_type": self.target_type.value,
        }


def softmax(z: Sequence[float] | np.ndarray) -> CategoricalDist:
    """Max-shifted softmax; preserves the argmax and never overflows."""
    arr = np.asarray(z, dtype=np.float64)
    if arr.ndim != 1 or len(arr) < 2:
        raise ValueError(f"logits must be a 1-d vector of length >= 2, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"logits must be finite, got {list(arr)!r}")
    shifted = np.exp(arr - arr.max())
    return CategoricalDist(tuple(shifted / shifted.sum()))


def softmax_with_temperature(z: Sequence[float] | np.ndarray, temperature: Temperature | float) -> CategoricalDist:
    """softmax(z / T): T=1 is the plain softmax, larger T flattens the
    output toward uniform, and the argmax never changes."""
    t = temperature.value if isinstance(temperature, Temperature) else float(temperature)
    if not math.isfinite(t) or t <= 0.0:
        raise ValueError(f"temperature must be positive and finite, got {t!r}")
    return softmax(np.asarray(z, dtype=np.float64) / t)


def aggregate_mean(dists: Sequence[CategoricalDist]) -> CategoricalDist:
    """Element-wise arithmetic mean of k distributions."""
    if not dists:
        raise ValueError("cannot aggregate an empty list of distributions")
    width = len(dists[0])
    if any(len(d) != width for d in dists):
        raise ValueError("all distributions must have the same length")
    mean = np.mean([d.as_array() for d in dists], axis=0)
    return CategoricalDist(tuple(mean))


def _require_trained(params: ModelParams) -> None:
    if not params.trained:
        raise ValueError("model has not been trained")


def mc_dropout_predict(params: ModelParams, x: Sequence[float] | np.ndarray, k: int, seed: SeedKey) -> CategoricalDist:
    """Mean softmax over k stochastic forward passes with dropout active.

    Pass j draws from a stream derived from (seed, j), so the result is
    independent of scheduling and reproducible given the seed.
    """
    _require_trained(params)
    if k < 1:
        raise ValueError(f"number of passes must be >= 1, got {k}")
    passes = []
    for j in range(k):
        rng = derive_rng(seed, "mc", j)
        passes.append(softmax(model_mod.forward_stochastic(params, x, rng)))
    return aggregate_mean(passes)


def ensemble_predict(models: Sequence[ModelParams], x: Sequence[float] | np.ndarray) -> CategoricalDist:
    """Mean of each member's deterministic softmax output."""
    if not models:
        raise ValueError("cannot predict with an empty ensemble")
    n_classes = {m.config.n_classes for m in models}
    if len(n_classes) != 1:
        raise ValueError(f"ensemble members disagree on the number of classes: {sorted(n_classes)}")
    for m in models:
        _require_trained(m)
    return aggregate_mean([softmax(model_mod.forward_deterministic(m, x)) for m in models])


def _target_dists(targets: Sequence[Example], target_type: TargetType, n_classes: int) -> dict[str, np.ndarray]:
    out: dict[str, np.ndarray] = {}
    for ex in targets:
        if target_type is TargetType.SOFT_COUNTS:
            if ex.counts is None:
                raise ValueError(f"example {ex.id!r} carries no annotation counts for soft-target fitting")
            out[ex.id] = dist_from_counts(ex.counts).as_array()
        else:
            if ex.hard_label is not None:
                label = ex.hard_label
            elif ex.counts is not None:
                label = int(np.argmax(ex.counts.as_array()))
            else:
                raise ValueError(f"example {ex.id!r} carries neither a hard label nor counts")
            onehot = np.zeros(n_classes)
            onehot[label] = 1.0
            out[ex.id] = onehot
    return out


def fit_objective(
    records: Sequence[PredictionRecord],
    targets: Sequence[Example],
    temperature: Temperature | float,
    cfg: FitConfig = FitConfig(),
) -> float:
    """Summed KL between temperature-scaled predictions and fit targets."""
    t = temperature.value if isinstance(temperature, Temperature) else float(temperature)
    z, goal = _fit_arrays(records, targets, cfg)
    return _objective_from_arrays(z, goal, t, cfg.direction)


def _fit_arrays(
    records: Sequence[PredictionRecord],
    targets: Sequence[Example],
    cfg: FitConfig,
) -> tuple[np.ndarray, np.ndarray]:
    if not targets:
        raise ValueError("temperature fitting needs at least one target example")
    if not records:
        raise ValueError("temperature fitting needs at least one prediction record")
    for rec in records:
        if rec.k != 1:
            raise ValueError(f"record {rec.id!r} has k={rec.k}; calibration applies to single-pass logits (k=1)")
    n_classes = len(records[0].logit_sets[0])
    by_id = {rec.id: rec for rec in records}
    if len(by_id) != len(records):
        raise ValueError("duplicate record ids in fit set")
    goal_by_id = _target_dists(targets, cfg.target_type, n_classes)
    missing = sorted(set(goal_by_id) - set(by_id))
    if missing:
        raise ValueError(f"no prediction record for target example(s): {missing[:5]}")
    extra = sorted(set(by_id) - set(goal_by_id))
    if extra:
        raise ValueError(f"prediction record(s) without a fit target: {extra[:5]}")
    ids = [ex.id for ex in targets]
    z = np.asarray([by_id[i].logit_sets[0] for i in ids], dtype=np.float64)
    goal = np.asarray([goal_by_id[i] for i in ids], dtype=np.float64)
    return z, goal


def _objective_from_arrays(z: np.ndarray, goal: np.ndarray, t: float, direction: Direction) -> float:
    scaled = z / t
    shifted = scaled - scaled.max(axis=1, keepdims=True)
    log_p = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    p = np.exp(log_p)
    if direction is Direction.GOLD_VS_PRED:
        num, den = goal, np.maximum(p, EPSILON)
    else:
        num, den = p, np.maximum(goal, EPSILON)
    terms = np.zeros_like(num)
    mask = num > 0.0
    terms[mask] = num[mask] * np.log(num[mask] / den[mask])
    total = float(terms.sum())
    if not math.isfinite(total):
        raise ValueError(f"non-finite calibration objective at temperature {t!r}")
    return total


@dataclass(frozen=True)
class FitResult:
    temperature: Temperature
    objective: float
    config: FitConfig

    def to_dict(self) -> dict:
        return {"temperature": self.temperature.value, "fit": self.config.to_dict(), "objective": self.objective}


def fit_temperature(
    records: Sequence[PredictionRecord],
    targets: Sequence[Example],
    cfg: FitConfig = FitConfig(),
) -> FitResult:
    """Fit the temperature minimizing the summed KL to the target dists.

    Golden-section search over log10 T inside ``cfg.log10_bounds``, refined
    until the bracketing interval is narrower than ``cfg.tolerance`` in T.
    The search assumes a unimodal objective; a ``GRID_POINTS``-point grid
    over the bounds guards against violations, and the grid optimum is
    returned whenever it beats the search result.
    """
    z, goal = _fit_arrays(records, targets, cfg)

    def objective(u: float) -> float:
        return _objective_from_arrays(z, goal, 10.0**u, cfg.direction)

    lo, hi = cfg.log10_bounds
    # Width in T of the bracket [10^a, 10^b] must shrink below tolerance;
    # bound it via the maximum slope of 10^u on the interval.
    max_t = 10.0**hi
    tol_u = cfg.tolerance / (max_t * math.log(10.0))
    span = hi - lo
    steps = max(1, int(math.ceil(math.log(tol_u / span) / math.log(_INV_PHI))))

    a, b = lo, hi
    c = a + _INV_PHI_SQ * span
    d = a + _INV_PHI * span
    fc, fd = objective(c), objective(d)
    width = span
    for _ in range(steps):
        width *= _INV_PHI
        if fc < fd:
            b, d, fd = d, c, fc
            c = a + _INV_PHI_SQ * width
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * width
            fd = objective(d)
    best_u = c if fc < fd else d
    best_f = min(fc, fd)

    grid = np.linspace(lo, hi, GRID_POINTS)
    grid_f = [objective(float(u)) for u in grid]
    grid_best = int(np.argmin(grid_f))
    if grid_f[grid_best] < best_f:
        best_u, best_f = float(grid[grid_best]), grid_f[grid_best]

    return FitResult(temperature=Temperature(10.0**best_u), objective=best_f, config=cfg)


def apply_temperature(
    records: Sequence[PredictionRecord],
    temperature: Temperature | float,
) -> dict[str, CategoricalDist]:
    """Temperature-scale each single-pass record; argmaxes are unchanged."""
    out: dict[str, CategoricalDist] = {}
    for rec in records:
        if rec.k != 1:
            raise ValueError(
                f"record {rec.id!r} has k={rec.k} logit sets; temperature scaling applies to a single "
                "model's logits. Either export k=1 records or aggregate the passes first and accept "
                "that averaging and calibration do not commute."
            )
        out[rec.id] = softmax_with_temperature(rec.logit_sets[0], temperature)
    return out


def distill_relabel(
    teacher: Callable[[Example], CategoricalDist],
    train: Sequence[Example],
) -> list[Example]:
    """Attach the teacher's predicted distribution to every train example.

    The distribution is stored as integer counts at 1e-6 resolution so the
    relabeled set round-trips through the standard schema; original hard
    labels (and graded scores) are preserved alongside.
    """
    relabeled = []
    for ex in train:
        try:
            dist = teacher(ex)
        except Exception as exc:
            raise RuntimeError(f"teacher failed on example {ex.id!r}: {exc}") from exc
        counts = np.rint(dist.as_array() * DISTILL_COUNT_SCALE).astype(np.int64)
        relabeled.append(
            Example(
                id=ex.id,
                features=ex.features,
                text=ex.text,
                hard_label=ex.hard_label,
                counts=AnnotationCounts(tuple(int(c) for c in counts)),
                graded_score=ex.graded_score,
            )
        )
    return relabeled


def distill_train(
    student_config: MlpConfig,
    train_config: TrainConfig,
    relabeled_train: Sequence[Example],
    dev: Sequence[Example],
) -> TrainResult:
    """Train a fresh student on the teacher's soft labels, selecting the
    snapshot with the best dev accuracy."""
    for ex in relabeled_train:
        if ex.counts is None:
            raise ValueError(f"relabeled example {ex.id!r} carries no soft label counts")
        if ex.features is None:
            raise ValueError(f"example {ex.id!r} has no feature payload to train on")
    x = np.asarray([ex.features for ex in relabeled_train], dtype=np.float64)
    soft = np.asarray([dist_from_counts(ex.counts).probs for ex in relabeled_train], dtype=np.float64)
    dev_x = np.asarray([ex.features for ex in dev], dtype=np.float64)
    dev_labels = np.asarray([ex.hard_label for ex in dev], dtype=np.int64)
    cfg = TrainConfig(
        learning_rate=train_config.learning_rate,
        epochs=train_config.epochs,
        batch_size=train_config.batch_size,
        objective=Objective.SOFT_KL,
        shuffle_seed=train_config.shuffle_seed,
    )
    student = model_mod.init(student_config)
    return model_mod.train(student, x, soft, cfg, dev_x, dev_labels)


def chance_baseline(labelspace: LabelSpace, n: int) -> list[CategoricalDist]:
    """n copies of the uniform distribution over the label space."""
    if n < 1:
        raise ValueError(f"need at least one example, got n={n}")
    uniform = CategoricalDist(tuple(1.0 / labelspace.k for _ in range(labelspace.k)))
    return [uniform] * n
