"""End-to-end experiment orchestration and file I/O glue.

Everything here is deterministic given the experiment config: per-seed
models, stochastic passes, and annotator draws all derive their RNG streams
from (seed, purpose, ...) keys, and output files are written with stable
ordering and float formatting, so re-running a command overwrites its
outputs byte-identically. Wall-clock metadata goes to a sidecar
``run_meta.json``, never into the manifest.
"""

from __future__ import annotations

import enum
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from labeldist import bundle_io, estimators, model as model_mod
from labeldist.core import (
    CategoricalDist,
    Example,
    LabelSpace,
    PredictionRecord,
    SplitBundle,
    dist_from_counts,
    validate_bundle,
)
from labeldist.estimators import FitConfig, FitResult, TargetType, Temperature
from labeldist.metrics import (
    Direction,
    MetricsReport,
    curves_to_csv,
    curves_to_svg,
    entropy_quantile,
    evaluate,
    kl_divergence,
    js_distance,
)
from labeldist.model import MlpConfig, ModelParams, Objective, TrainConfig
from labeldist.seeding import derive_rng, derive_seed
from labeldist.simulate import SimConfig, gen_dataset
from labeldist.svgchart import line_chart

MANIFEST_FILE = "manifest.json"
RUN_META_FILE = "run_meta.json"


class Method(enum.Enum):
    BASELINE = "baseline"
    MC_DROPOUT = "mc_dropout"
    ENSEMBLE = "ensemble"
    RECALIBRATION = "recalibration"
    DISTILLATION = "distillation"
    CHANCE = "chance"


@dataclass(frozen=True)
class ModelSettings:
    hidden_dims: tuple[int, ...] = (32,)
    dropout_rate: float = 0.1

    def to_dict(self) -> dict:
        return {"hidden_dims": list(self.hidden_dims), "dropout_rate": self.dropout_rate}


@dataclass(frozen=True)
class TrainSettings:
    learning_rate: float = 1e-2
    epochs: int = 30
    batch_size: int = 32

    def to_dict(self) -> dict:
        return {"learning_rate": self.learning_rate, "epochs": self.epochs, "batch_size": self.batch_size}


@dataclass(frozen=True)
class ExperimentConfig:
    bundle_dir: str
    out_dir: str
    method: Method = Method.BASELINE
    k: int = 10
    seeds: tuple[int, ...] = tuple(range(10))
    fit: FitConfig = FitConfig()
    fit_split: str = "dev_s"
    model: ModelSettings = ModelSettings()
    train: TrainSettings = TrainSettings()
    sim: SimConfig | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if self.fit_split not in ("dev", "dev_s", "test_s"):
            raise ValueError(f"fit_split must be one of dev/dev_s/test_s, got {self.fit_split!r}")

    def to_dict(self) -> dict:
        return {
            "bundle_dir": str(self.bundle_dir),
            "out_dir": str(self.out_dir),
            "method": self.method.value,
            "k": self.k,
            "seeds": list(self.seeds),
            "fit": self.fit.to_dict(),
            "fit_split": self.fit_split,
            "model": self.model.to_dict(),
            "train": self.train.to_dict(),
            "sim": self.sim.to_dict() if self.sim is not None else None,
        }

    @staticmethod
    def from_dict(obj: Mapping) -> "ExperimentConfig":
        fit_obj = obj.get("fit", {})
        fit = FitConfig(
            direction=Direction(fit_obj.get("direction", "gold_vs_pred")),
            log10_bounds=tuple(fit_obj.get("log10_bounds", (-2.0, 2.0))),
            tolerance=fit_obj.get("tolerance", 1e-6),
            target_type=TargetType(fit_obj.get("target_type", "soft_counts")),
        )
        model_obj = obj.get("model", {})
        train_obj = obj.get("train", {})
        return ExperimentConfig(
            bundle_dir=obj["bundle_dir"],
            out_dir=obj["out_dir"],
            method=Method(obj.get("method", "baseline")),
            k=obj.get("k", 10),
            seeds=tuple(obj.get("seeds", range(10))),
            fit=fit,
            fit_split=obj.get("fit_split", "dev_s"),
            model=ModelSettings(
                hidden_dims=tuple(model_obj.get("hidden_dims", (32,))),
                dropout_rate=model_obj.get("dropout_rate", 0.1),
            ),
            train=TrainSettings(
                learning_rate=train_obj.get("learning_rate", 1e-2),
                epochs=train_obj.get("epochs", 30),
                batch_size=train_obj.get("batch_size", 32),
            ),
            sim=SimConfig.from_dict(obj["sim"]) if obj.get("sim") else None,
        )


@dataclass
class RunManifest:
    config: dict
    per_seed: list[dict]
    mean: dict
    std: dict
    best: dict

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "per_seed": self.per_seed,
            "mean": self.mean,
            "std": self.std,
            "best": self.best,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @staticmethod
    def from_dict(obj: Mapping) -> "RunManifest":
        return RunManifest(
            config=dict(obj["config"]),
            per_seed=list(obj["per_seed"]),
            mean=dict(obj["mean"]),
            std=dict(obj["std"]),
            best=dict(obj["best"]),
        )


def _load_valid_bundle(bundle_dir: str | Path) -> tuple[SplitBundle, LabelSpace]:
    bundle, labelspace = bundle_io.read_bundle(bundle_dir)
    violations = validate_bundle(bundle, labelspace)
    if violations:
        preview = "; ".join(str(v) for v in violations[:5])
        raise ValueError(f"bundle {bundle_dir} has {len(violations)} invariant violation(s): {preview}")
    return bundle, labelspace


def _feature_matrix(examples: Sequence[Example]) -> np.ndarray:
    for ex in examples:
        if ex.features is None:
            raise ValueError(f"example {ex.id!r} has no feature payload; this pipeline trains on features")
    return np.asarray([ex.features for ex in examples], dtype=np.float64)


def _hard_labels(examples: Sequence[Example]) -> np.ndarray:
    labels = []
    for ex in examples:
        if ex.hard_label is not None:
            labels.append(ex.hard_label)
        elif ex.counts is not None:
            labels.append(int(np.argmax(ex.counts.as_array())))
        else:
            raise ValueError(f"example {ex.id!r} carries no hard label")
    return np.asarray(labels, dtype=np.int64)


def _train_base_model(
    bundle: SplitBundle,
    labelspace: LabelSpace,
    cfg: ExperimentConfig,
    seed: int,
    role: str = "base",
) -> ModelParams:
    x = _feature_matrix(bundle.train)
    y = _hard_labels(bundle.train)
    dev_x = _feature_matrix(bundle.dev)
    dev_y = _hard_labels(bundle.dev)
    mlp_cfg = MlpConfig(
        input_dim=x.shape[1],
        hidden_dims=cfg.model.hidden_dims,
        n_classes=labelspace.k,
        dropout_rate=cfg.model.dropout_rate,
        init_seed=derive_seed(seed, role, "init"),
    )
    train_cfg = TrainConfig(
        learning_rate=cfg.train.learning_rate,
        epochs=cfg.train.epochs,
        batch_size=cfg.train.batch_size,
        objective=Objective.HARD_CROSS_ENTROPY,
        shuffle_seed=derive_seed(seed, role, "shuffle"),
    )
    return model_mod.train(model_mod.init(mlp_cfg), x, y, train_cfg, dev_x, dev_y).params


def _predict_baseline(params: ModelParams, examples: Sequence[Example]) -> dict[str, CategoricalDist]:
    return {ex.id: estimators.softmax(model_mod.forward_deterministic(params, ex.features)) for ex in examples}


def _predict_mc(
    params: ModelParams, examples: Sequence[Example], k: int, seed: int
) -> dict[str, CategoricalDist]:
    return {ex.id: estimators.mc_dropout_predict(params, ex.features, k, (seed, ex.id)) for ex in examples}


def _records_for(params: ModelParams, examples: Sequence[Example]) -> list[PredictionRecord]:
    return [
        PredictionRecord(
            id=ex.id,
            logit_sets=(tuple(model_mod.forward_deterministic(params, ex.features)),),
            source="deterministic",
        )
        for ex in examples
    ]


def _fit_split_examples(bundle: SplitBundle, cfg: ExperimentConfig) -> tuple[Example, ...]:
    examples = bundle.split(cfg.fit_split)
    if not examples:
        raise ValueError(
            f"fit split {cfg.fit_split!r} is empty; soft recalibration needs soft-labeled examples. "
            "Calibrate on hard labels instead by setting fit options target_type=hard_onehot "
            "and fit_split=dev."
        )
    if cfg.fit.target_type is TargetType.SOFT_COUNTS and any(ex.counts is None for ex in examples):
        raise ValueError(
            f"fit split {cfg.fit_split!r} has examples without annotation counts; soft recalibration "
            "needs soft labels. Set fit options target_type=hard_onehot to fit on one-hot hard labels."
        )
    return examples


def _fit_temperature_for(
    params: ModelParams, bundle: SplitBundle, cfg: ExperimentConfig
) -> FitResult:
    fit_examples = _fit_split_examples(bundle, cfg)
    records = _records_for(params, fit_examples)
    return estimators.fit_temperature(records, fit_examples, cfg.fit)


def _teacher_fn(params: ModelParams, temperature: Temperature):
    def predict(ex: Example) -> CategoricalDist:
        return estimators.softmax_with_temperature(model_mod.forward_deterministic(params, ex.features), temperature)

    return predict


def _run_one_seed(
    bundle: SplitBundle,
    labelspace: LabelSpace,
    cfg: ExperimentConfig,
    seed: int,
    out_dir: Path,
) -> tuple[dict[str, CategoricalDist], dict]:
    """Produce test_s predictions for one seed; returns (preds, artifacts)."""
    artifacts: dict = {}
    test_s = bundle.test_s

    if cfg.method is Method.CHANCE:
        dists = estimators.chance_baseline(labelspace, len(test_s))
        return {ex.id: d for ex, d in zip(test_s, dists)}, artifacts

    if cfg.method is Method.ENSEMBLE:
        members = [
            _train_base_model(bundle, labelspace, cfg, seed, role=f"member-{j}") for j in range(cfg.k)
        ]
        return {ex.id: estimators.ensemble_predict(members, ex.features) for ex in test_s}, artifacts

    params = _train_base_model(bundle, labelspace, cfg, seed)

    if cfg.method is Method.BASELINE:
        return _predict_baseline(params, test_s), artifacts

    if cfg.method is Method.MC_DROPOUT:
        return _predict_mc(params, test_s, cfg.k, seed), artifacts

    if cfg.method is Method.RECALIBRATION:
        fit_result = _fit_temperature_for(params, bundle, cfg)
        temp_file = f"temperature_seed{seed}.json"
        (out_dir / temp_file).write_text(json.dumps(fit_result.to_dict(), indent=2) + "\n", encoding="utf-8")
        artifacts["temperature"] = temp_file
        records = _records_for(params, test_s)
        return estimators.apply_temperature(records, fit_result.temperature), artifacts

    if cfg.method is Method.DISTILLATION:
        fit_result = _fit_temperature_for(params, bundle, cfg)
        temp_file = f"temperature_seed{seed}.json"
        (out_dir / temp_file).write_text(json.dumps(fit_result.to_dict(), indent=2) + "\n", encoding="utf-8")
        artifacts["temperature"] = temp_file
        relabeled = estimators.distill_relabel(_teacher_fn(params, fit_result.temperature), list(bundle.train))
        student_cfg = MlpConfig(
            input_dim=len(bundle.train[0].features),
            hidden_dims=cfg.model.hidden_dims,
            n_classes=labelspace.k,
            dropout_rate=cfg.model.dropout_rate,
            init_seed=derive_seed(seed, "student", "init"),
        )
        student_train = TrainConfig(
            learning_rate=cfg.train.learning_rate,
            epochs=cfg.train.epochs,
            batch_size=cfg.train.batch_size,
            objective=Objective.SOFT_KL,
            shuffle_seed=derive_seed(seed, "student", "shuffle"),
        )
        student = estimators.distill_train(student_cfg, student_train, relabeled, list(bundle.dev)).params
        return _predict_baseline(student, test_s), artifacts

    raise ValueError(f"unhandled method {cfg.method!r}")


_REPORT_KEYS = ("jsd_mean", "kl_mean", "accuracy")


def _summary_stats(reports: Sequence[MetricsReport]) -> tuple[dict, dict]:
    mean: dict = {}
    std: dict = {}
    for key in _REPORT_KEYS:
        values = np.asarray([getattr(r, key) for r in reports], dtype=np.float64)
        mean[key] = float(values.mean())
        std[key] = float(values.std(ddof=1)) if len(values) > 1 else 0.0
    return mean, std


def cmd_run(cfg: ExperimentConfig) -> RunManifest:
    """Train/predict/evaluate per seed; write predictions and a manifest."""
    started = time.time()
    bundle, labelspace = _load_valid_bundle(cfg.bundle_dir)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    per_seed = []
    reports = []
    for seed in cfg.seeds:
        preds, artifacts = _run_one_seed(bundle, labelspace, cfg, seed, out_dir)
        preds_file = f"preds_seed{seed}.jsonl"
        bundle_io.write_predictions(out_dir / preds_file, preds)
        artifacts["predictions"] = preds_file
        report = evaluate(preds, bundle.test_s, direction=cfg.fit.direction)
        reports.append(report)
        per_seed.append({"seed": seed, "report": report.to_dict(), "artifacts": artifacts})

    mean, std = _summary_stats(reports)
    best_idx = min(range(len(reports)), key=lambda i: (reports[i].kl_mean, cfg.seeds[i]))
    manifest = RunManifest(
        config=cfg.to_dict(),
        per_seed=per_seed,
        mean=mean,
        std=std,
        best={"seed": cfg.seeds[best_idx], "criterion": "kl_mean", "report": reports[best_idx].to_dict()},
    )
    (out_dir / MANIFEST_FILE).write_text(manifest.to_json(), encoding="utf-8")
    _write_run_meta(out_dir, started)
    return manifest


def _write_run_meta(out_dir: Path, started: float) -> None:
    # Wall-clock data lives outside the manifest so re-runs stay byte-identical.
    meta = {"started_unix": started, "finished_unix": time.time(), "duration_s": time.time() - started}
    (out_dir / RUN_META_FILE).write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")


def cmd_simulate(sim_cfg: SimConfig, out_dir: str | Path) -> Path:
    """Generate a bundle directory plus its ground-truth table."""
    out_dir = Path(out_dir)
    bundle, truth = gen_dataset(sim_cfg)
    bundle_io.write_bundle(out_dir, bundle, sim_cfg.labelspace())
    bundle_io.write_ground_truth(out_dir / bundle_io.GROUND_TRUTH_FILE, dict(truth.items()))
    return out_dir


def cmd_sweep_samples(cfg: ExperimentConfig, k_values: Sequence[int]) -> list[dict]:
    """Evaluate MC dropout or ensembles at several sample counts k.

    Pass/member streams are shared across k values (pass j is the same draw
    whatever k is), so the k=1 column equals the single-pass result and the
    curve isolates the effect of averaging more samples.
    """
    if not k_values:
        raise ValueError("k sweep needs at least one k value")
    k_values = [int(k) for k in k_values]
    if any(k < 1 for k in k_values):
        raise ValueError(f"k values must be >= 1, got {k_values}")
    if cfg.method not in (Method.MC_DROPOUT, Method.ENSEMBLE):
        raise ValueError(f"sample sweep supports mc_dropout and ensemble, got {cfg.method.value}")
    max_k = max(k_values)
    bundle, labelspace = _load_valid_bundle(cfg.bundle_dir)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    test_s = bundle.test_s

    rows = []
    for seed in cfg.seeds:
        if cfg.method is Method.MC_DROPOUT:
            params = _train_base_model(bundle, labelspace, cfg, seed)
            stacks = {
                ex.id: np.asarray(
                    [
                        estimators.softmax(
                            model_mod.forward_stochastic(params, ex.features, derive_rng((seed, ex.id), "mc", j))
                        ).probs
                        for j in range(max_k)
                    ]
                )
                for ex in test_s
            }
        else:
            members = [
                _train_base_model(bundle, labelspace, cfg, seed, role=f"member-{j}") for j in range(max_k)
            ]
            stacks = {
                ex.id: np.asarray(
                    [estimators.softmax(model_mod.forward_deterministic(m, ex.features)).probs for m in members]
                )
                for ex in test_s
            }
        for k in k_values:
            preds = {ex_id: CategoricalDist(tuple(np.mean(stack[:k], axis=0))) for ex_id, stack in stacks.items()}
            report = evaluate(preds, test_s)
            rows.append({"k": k, "seed": seed, "kl_mean": report.kl_mean, "jsd_mean": report.jsd_mean})

    rows.sort(key=lambda r: (k_values.index(r["k"]), r["seed"]))
    csv_lines = ["k,seed,kl_mean,jsd_mean"]
    csv_lines += [f'{r["k"]},{r["seed"]},{r["kl_mean"]!r},{r["jsd_mean"]!r}' for r in rows]
    (out_dir / "sweep.csv").write_text("\n".join(csv_lines) + "\n", encoding="utf-8")

    ks_sorted = sorted(set(k_values))
    mean_kl = [(float(k), float(np.mean([r["kl_mean"] for r in rows if r["k"] == k]))) for k in ks_sorted]
    mean_jsd = [(float(k), float(np.mean([r["jsd_mean"] for r in rows if r["k"] == k]))) for k in ks_sorted]
    svg = line_chart(
        [("mean KL", mean_kl), ("mean JSD", mean_jsd)],
        title=f"{cfg.method.value}: divergence vs sample count",
        x_label="k samples",
        y_label="divergence",
    )
    (out_dir / "sweep.svg").write_text(svg, encoding="utf-8")
    return rows


def cmd_entropy_curve(
    pred_files: Sequence[str | Path],
    bundle_dir: str | Path,
    out_dir: str | Path,
    split: str = "test_s",
) -> list:
    """Entropy-quantile curves for prediction files plus the human counts."""
    bundle, _ = _load_valid_bundle(bundle_dir)
    examples = bundle.split(split)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    named: dict[str, list[CategoricalDist]] = {"human": [dist_from_counts(ex.counts) for ex in examples]}
    for path in pred_files:
        path = Path(path)
        preds = bundle_io.read_predictions(path)
        missing = [ex.id for ex in examples if ex.id not in preds]
        if missing:
            raise KeyError(f"prediction file {path.name} lacks ids present in {split}: {missing[:5]}")
        named[path.stem] = [preds[ex.id] for ex in examples]

    curves = entropy_quantile(named)
    (out_dir / "entropy_curves.csv").write_text(curves_to_csv(curves), encoding="utf-8")
    (out_dir / "entropy_curves.svg").write_text(curves_to_svg(curves), encoding="utf-8")
    return curves


def cmd_inspect(
    pred_files: Sequence[str | Path],
    bundle_dir: str | Path,
    example_id: str,
    split: str = "test_s",
) -> dict:
    """Per-example view: gold distribution and each method's prediction."""
    bundle, _ = _load_valid_bundle(bundle_dir)
    examples = {ex.id: ex for ex in bundle.split(split)}
    if example_id not in examples:
        raise KeyError(f"example {example_id!r} not found in split {split!r}")
    ex = examples[example_id]
    if ex.counts is None:
        raise ValueError(f"example {example_id!r} carries no annotation counts")
    gold = dist_from_counts(ex.counts)

    methods = []
    for path in pred_files:
        path = Path(path)
        if not path.exists():
            methods.append({"series": path.stem, "status": "missing file"})
            continue
        preds = bundle_io.read_predictions(path)
        if example_id not in preds:
            methods.append({"series": path.stem, "status": "missing id"})
            continue
        pred = preds[example_id]
        methods.append(
            {
                "series": path.stem,
                "status": "ok",
                "dist": list(pred.probs),
                "kl": kl_divergence(gold, pred),
                "jsd": js_distance(gold, pred),
            }
        )
    return {"id": example_id, "split": split, "gold": list(gold.probs), "methods": methods}


def cmd_evaluate(
    bundle_dir: str | Path,
    split: str = "test_s",
    preds_path: str | Path | None = None,
    records_path: str | Path | None = None,
    direction: Direction = Direction.GOLD_VS_PRED,
    per_example: bool = False,
    out_path: str | Path | None = None,
) -> MetricsReport:
    """Score a predictions file (or logit records, aggregated) on a split."""
    if (preds_path is None) == (records_path is None):
        raise ValueError("provide exactly one of a predictions file or a records file")
    bundle, labelspace = _load_valid_bundle(bundle_dir)
    if preds_path is not None:
        preds = bundle_io.read_predictions(preds_path)
    else:
        records = bundle_io.read_records(records_path, labelspace)
        preds = {
            rec.id: estimators.aggregate_mean([estimators.softmax(z) for z in rec.logit_sets]) for rec in records
        }
    report = evaluate(preds, bundle.split(split), direction=direction, per_example=per_example)
    if out_path is not None:
        Path(out_path).write_text(report.to_json(), encoding="utf-8")
    return report


def cmd_fit_temp(
    records_path: str | Path,
    bundle_dir: str | Path,
    split: str = "dev_s",
    fit: FitConfig = FitConfig(),
    out_path: str | Path | None = None,
) -> FitResult:
    """Fit a temperature from a k=1 records file against a split's targets."""
    bundle, labelspace = _load_valid_bundle(bundle_dir)
    records = bundle_io.read_records(records_path, labelspace)
    result = estimators.fit_temperature(records, list(bundle.split(split)), fit)
    if out_path is not None:
        Path(out_path).write_text(json.dumps(result.to_dict(), indent=2) + "\n", encoding="utf-8")
    return result


def cmd_distill(cfg: ExperimentConfig, seed: int | None = None) -> dict:
    """One distillation run: teacher fit, relabeled train set, student model.

    Writes the relabeled train split, the fitted temperature, the student
    checkpoint, and the student's test predictions; returns artifact paths.
    """
    bundle, labelspace = _load_valid_bundle(cfg.bundle_dir)
    seed = cfg.seeds[0] if seed is None else seed
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    params = _train_base_model(bundle, labelspace, cfg, seed)
    fit_result = _fit_temperature_for(params, bundle, cfg)
    relabeled = estimators.distill_relabel(_teacher_fn(params, fit_result.temperature), list(bundle.train))
    bundle_io.write_examples(out_dir / "relabeled_train.jsonl", relabeled)
    (out_dir / "temperature.json").write_text(json.dumps(fit_result.to_dict(), indent=2) + "\n", encoding="utf-8")

    student_cfg = MlpConfig(
        input_dim=len(bundle.train[0].features),
        hidden_dims=cfg.model.hidden_dims,
        n_classes=labelspace.k,
        dropout_rate=cfg.model.dropout_rate,
        init_seed=derive_seed(seed, "student", "init"),
    )
    student_train = TrainConfig(
        learning_rate=cfg.train.learning_rate,
        epochs=cfg.train.epochs,
        batch_size=cfg.train.batch_size,
        objective=Objective.SOFT_KL,
        shuffle_seed=derive_seed(seed, "student", "shuffle"),
    )
    student = estimators.distill_train(student_cfg, student_train, relabeled, list(bundle.dev)).params
    model_mod.save_params(out_dir / "student.json", student)
    preds = _predict_baseline(student, bundle.test_s)
    bundle_io.write_predictions(out_dir / "preds_student.jsonl", preds)
    report = evaluate(preds, bundle.test_s)
    (out_dir / "report_student.json").write_text(report.to_json(), encoding="utf-8")
    return {
        "relabeled_train": "relabeled_train.jsonl",
        "temperature": "temperature.json",
        "student": "student.json",
        "predictions": "preds_student.jsonl",
        "report": "report_student.json",
    }


def cmd_export_report(manifest_path: str | Path, out_csv: str | Path) -> Path:
    """Flatten a run manifest into a CSV of per-seed and summary rows."""
    manifest = RunManifest.from_dict(json.loads(Path(manifest_path).read_text(encoding="utf-8")))
    lines = ["row,seed,jsd_mean,kl_mean,accuracy"]
    for entry in manifest.per_seed:
        report = entry["report"]
        lines.append(
            f'seed,{entry["seed"]},{report["jsd_mean"]!r},{report["kl_mean"]!r},{report["accuracy"]!r}'
        )
    lines.append(f'mean,,{manifest.mean["jsd_mean"]!r},{manifest.mean["kl_mean"]!r},{manifest.mean["accuracy"]!r}')
    lines.append(f'std,,{manifest.std["jsd_mean"]!r},{manifest.std["kl_mean"]!r},{manifest.std["accuracy"]!r}')
    best = manifest.best["report"]
    lines.append(
        f'best,{manifest.best["seed"]},{best["jsd_mean"]!r},{best["kl_mean"]!r},{best["accuracy"]!r}'
    )
    out_csv = Path(out_csv)
    out_csv.parent.mkdir(parents=True, exist_ok=True)
    out_csv.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return out_csv
