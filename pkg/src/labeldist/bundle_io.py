"""File formats: example JSONL, bundle directories, logit records, predictions.

One example per JSONL line:

    {"id": str, "features": [f64...] | null, "text": {"premise": str,
     "hypothesis": str} | null, "label": int | null,
     "label_counts": [int...] | null, "graded": f64 | null}

A bundle directory holds ``train.jsonl``, ``dev.jsonl``, ``dev_s.jsonl``,
``test_s.jsonl`` and ``labelspace.json`` (``{"labels": [str...]}``). Logit
records are JSONL lines ``{"id", "logit_sets", "source"}``, optionally led by
a header line ``{"labels": [...], ...}`` describing the label order (written
by exporters); predictions are JSONL lines ``{"id", "dist"}``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from labeldist.core import (
    AnnotationCounts,
    CategoricalDist,
    Example,
    LabelSpace,
    PredictionRecord,
    SplitBundle,
    TextPair,
)

SPLIT_FILES = {
    "train": "train.jsonl",
    "dev": "dev.jsonl",
    "dev_s": "dev_s.jsonl",
    "test_s": "test_s.jsonl",
}

LABELSPACE_FILE = "labelspace.json"
GROUND_TRUTH_FILE = "ground_truth.jsonl"


def example_to_dict(ex: Example) -> dict:
    return {
        "id": ex.id,
        "features": list(ex.features) if ex.features is not None else None,
        "text": {"premise": ex.text.premise, "hypothesis": ex.text.hypothesis} if ex.text is not None else None,
        "label": ex.hard_label,
        "label_counts": list(ex.counts.counts) if ex.counts is not None else None,
        "graded": ex.graded_score,
    }


def example_from_dict(obj: Mapping) -> Example:
    text = obj.get("text")
    counts = obj.get("label_counts")
    return Example(
        id=obj["id"],
        features=tuple(obj["features"]) if obj.get("features") is not None else None,
        text=TextPair(text["premise"], text["hypothesis"]) if text is not None else None,
        hard_label=obj.get("label"),
        counts=AnnotationCounts(tuple(counts)) if counts is not None else None,
        graded_score=obj.get("graded"),
    )


def _write_jsonl(path: Path, objs: Iterable[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for obj in objs:
            fh.write(json.dumps(obj) + "\n")


def _read_jsonl(path: Path) -> list[dict]:
    with Path(path).open("r", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_examples(path: Path | str, examples: Sequence[Example]) -> None:
    _write_jsonl(Path(path), (example_to_dict(ex) for ex in examples))


def read_examples(path: Path | str) -> list[Example]:
    return [example_from_dict(obj) for obj in _read_jsonl(Path(path))]


def write_labelspace(path: Path | str, labelspace: LabelSpace) -> None:
    Path(path).write_text(json.dumps({"labels": list(labelspace.labels)}) + "\n", encoding="utf-8")


def read_labelspace(path: Path | str) -> LabelSpace:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return LabelSpace(tuple(obj["labels"]))


def write_bundle(directory: Path | str, bundle: SplitBundle, labelspace: LabelSpace) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_labelspace(directory / LABELSPACE_FILE, labelspace)
    for split_name, filename in SPLIT_FILES.items():
        write_examples(directory / filename, bundle.split(split_name))


def read_bundle(directory: Path | str) -> tuple[SplitBundle, LabelSpace]:
    directory = Path(directory)
    labelspace = read_labelspace(directory / LABELSPACE_FILE)
    splits = {name: tuple(read_examples(directory / filename)) for name, filename in SPLIT_FILES.items()}
    return SplitBundle(**splits), labelspace


def write_ground_truth(path: Path | str, table: Mapping[str, CategoricalDist]) -> None:
    _write_jsonl(Path(path), ({"id": ex_id, "p_star": list(dist.probs)} for ex_id, dist in table.items()))


def read_ground_truth(path: Path | str) -> dict[str, CategoricalDist]:
    return {obj["id"]: CategoricalDist(tuple(obj["p_star"])) for obj in _read_jsonl(Path(path))}


def write_predictions(path: Path | str, preds: Mapping[str, CategoricalDist]) -> None:
    _write_jsonl(Path(path), ({"id": ex_id, "dist": list(dist.probs)} for ex_id, dist in preds.items()))


def read_predictions(path: Path | str) -> dict[str, CategoricalDist]:
    return {obj["id"]: CategoricalDist(tuple(obj["dist"])) for obj in _read_jsonl(Path(path))}


def write_records(
    path: Path | str,
    records: Sequence[PredictionRecord],
    header: Mapping | None = None,
) -> None:
    rows: list[dict] = []
    if header is not None:
        rows.append(dict(header))
    rows.extend(
        {"id": rec.id, "logit_sets": [list(row) for row in rec.logit_sets], "source": rec.source} for rec in records
    )
    _write_jsonl(Path(path), rows)


def read_records(path: Path | str, labelspace: LabelSpace | None = None) -> list[PredictionRecord]:
    """Read logit records, tolerating (and checking) a leading header line.

    When a header declares a label order and ``labelspace`` is given, the two
    must match exactly; exporters are expected to have already mapped logits
    into the toolkit's order.
    """
    records: list[PredictionRecord] = []
    for i, obj in enumerate(_read_jsonl(Path(path))):
        if i == 0 and "id" not in obj and "labels" in obj:
            if labelspace is not None and tuple(obj["labels"]) != labelspace.labels:
                raise ValueError(
                    f"record label order {tuple(obj['labels'])!r} does not match label space {labelspace.labels!r}"
                )
            continue
        records.append(
            PredictionRecord(
                id=obj["id"],
                logit_sets=tuple(tuple(row) for row in obj["logit_sets"]),
                source=obj.get("source", "deterministic"),
            )
        )
    return records
