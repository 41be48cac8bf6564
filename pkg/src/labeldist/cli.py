"""Command-line interface.

Verbs: simulate, run, sweep-samples, entropy-curve, inspect, fit-temp,
distill, evaluate, export-report. A JSON config file supplies defaults and
every flag overrides it; the root seed is additionally overridable through
the ``LABELDIST_ROOT_SEED`` environment variable.

Exit codes: 0 success; 2 usage error (argparse); 3 invalid data or config
(ValueError); 4 missing file or id (FileNotFoundError/KeyError); 1 anything
else.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from labeldist.estimators import FitConfig, TargetType
from labeldist.metrics import Direction
from labeldist.pipeline import (
    ExperimentConfig,
    Method,
    cmd_distill,
    cmd_entropy_curve,
    cmd_evaluate,
    cmd_export_report,
    cmd_fit_temp,
    cmd_inspect,
    cmd_run,
    cmd_simulate,
    cmd_sweep_samples,
)
from labeldist.simulate import SimConfig

ROOT_SEED_ENV = "LABELDIST_ROOT_SEED"


def _root_seed(cli_value: int | None, config_value: int | None) -> int:
    env = os.environ.get(ROOT_SEED_ENV)
    if cli_value is not None:
        return cli_value
    if env is not None:
        return int(env)
    if config_value is not None:
        return config_value
    return 0


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _parse_seeds(text: str) -> tuple[int, ...]:
    return tuple(int(s) for s in text.split(",") if s.strip())


def _experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    obj = _load_config(getattr(args, "config", None))
    if args.bundle is not None:
        obj["bundle_dir"] = args.bundle
    if args.out is not None:
        obj["out_dir"] = args.out
    if getattr(args, "method", None) is not None:
        obj["method"] = args.method
    if getattr(args, "k", None) is not None:
        obj["k"] = args.k
    if getattr(args, "seeds", None) is not None:
        obj["seeds"] = list(_parse_seeds(args.seeds))
    elif "seeds" not in obj:
        root = _root_seed(getattr(args, "root_seed", None), obj.get("root_seed"))
        n_seeds = obj.get("n_seeds", 10)
        obj["seeds"] = list(range(root, root + n_seeds))
    obj.pop("root_seed", None)
    obj.pop("n_seeds", None)
    fit = obj.setdefault("fit", {})
    if getattr(args, "direction", None) is not None:
        fit["direction"] = args.direction
    if getattr(args, "target_type", None) is not None:
        fit["target_type"] = args.target_type
    if getattr(args, "fit_split", None) is not None:
        obj["fit_split"] = args.fit_split
    if "bundle_dir" not in obj or "out_dir" not in obj:
        raise ValueError("both a bundle directory (--bundle) and an output directory (--out) are required")
    return ExperimentConfig.from_dict(obj)


def _sim_config(args: argparse.Namespace) -> SimConfig:
    obj = _load_config(getattr(args, "config", None))
    known = dict(obj.get("sim") or obj)
    for flag, key in (
        ("n_train", "n_train"),
        ("n_dev", "n_dev"),
        ("n_dev_s", "n_dev_s"),
        ("n_test_s", "n_test_s"),
        ("annotators", "annotators_per_example"),
        ("feature_dim", "feature_dim"),
        ("noise", "feature_noise_sigma"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            known[key] = value
    if args.alpha is not None:
        known["dirichlet_alpha"] = tuple(float(a) for a in args.alpha.split(","))
    known["seed"] = _root_seed(args.seed, known.get("seed"))
    return SimConfig.from_dict(known)


def _add_fit_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--direction", choices=[d.value for d in Direction], default=None, help="KL direction")
    parser.add_argument(
        "--target-type", dest="target_type", choices=[t.value for t in TargetType], default=None,
        help="fit targets: soft annotator distributions or one-hot hard labels",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="labeldist", description="Human label distribution estimation toolkit.")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic annotated bundle")
    p.add_argument("--out", required=True, help="bundle output directory")
    p.add_argument("--config", help="JSON config file (uses its 'sim' section if present)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--n-train", dest="n_train", type=int, default=None)
    p.add_argument("--n-dev", dest="n_dev", type=int, default=None)
    p.add_argument("--n-dev-s", dest="n_dev_s", type=int, default=None)
    p.add_argument("--n-test-s", dest="n_test_s", type=int, default=None)
    p.add_argument("--annotators", type=int, default=None)
    p.add_argument("--feature-dim", dest="feature_dim", type=int, default=None)
    p.add_argument("--noise", type=float, default=None)
    p.add_argument("--alpha", help="comma-separated Dirichlet concentration, e.g. 1.0,1.0,1.0")

    p = sub.add_parser("run", help="train, predict, and evaluate one method over seeds")
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--bundle", help="bundle directory")
    p.add_argument("--out", help="output directory")
    p.add_argument("--method", choices=[m.value for m in Method], default=None)
    p.add_argument("--k", type=int, default=None, help="passes (mc_dropout) or members (ensemble)")
    p.add_argument("--seeds", help="comma-separated seed list, e.g. 0,1,2")
    p.add_argument("--root-seed", dest="root_seed", type=int, default=None)
    p.add_argument("--fit-split", dest="fit_split", choices=["dev", "dev_s", "test_s"], default=None)
    _add_fit_flags(p)

    p = sub.add_parser("sweep-samples", help="divergence vs number of samples k")
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--bundle", help="bundle directory")
    p.add_argument("--out", help="output directory")
    p.add_argument("--method", choices=["mc_dropout", "ensemble"], default="mc_dropout")
    p.add_argument("--k-values", dest="k_values", required=True, help="comma-separated, e.g. 1,2,5,10,20,30")
    p.add_argument("--seeds", help="comma-separated seed list")
    p.add_argument("--root-seed", dest="root_seed", type=int, default=None)

    p = sub.add_parser("entropy-curve", help="entropy quantile curves for prediction files")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", default="test_s")
    p.add_argument("preds", nargs="+", help="prediction JSONL files; series named by file stem")

    p = sub.add_parser("inspect", help="per-example gold vs method distributions")
    p.add_argument("--bundle", required=True)
    p.add_argument("--split", default="test_s")
    p.add_argument("--id", required=True, dest="example_id")
    p.add_argument("--json", action="store_true", help="emit JSON instead of a table")
    p.add_argument("preds", nargs="*", help="prediction JSONL files")

    p = sub.add_parser("fit-temp", help="fit a softmax temperature on a split")
    p.add_argument("--records", required=True, help="k=1 logit records JSONL")
    p.add_argument("--bundle", required=True)
    p.add_argument("--split", default="dev_s")
    p.add_argument("--out", required=True, help="output temperature JSON")
    _add_fit_flags(p)

    p = sub.add_parser("distill", help="teacher relabeling plus student training (one seed)")
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--bundle", help="bundle directory")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--fit-split", dest="fit_split", choices=["dev", "dev_s", "test_s"], default=None)
    _add_fit_flags(p)

    p = sub.add_parser("evaluate", help="score a predictions or records file against a split")
    p.add_argument("--bundle", required=True)
    p.add_argument("--split", default="test_s")
    p.add_argument("--preds", help="prediction JSONL ({id, dist} lines)")
    p.add_argument("--records", help="logit records JSONL ({id, logit_sets} lines); passes are averaged")
    p.add_argument("--out", help="write the report JSON here")
    p.add_argument("--per-example", dest="per_example", action="store_true")
    p.add_argument("--direction", choices=[d.value for d in Direction], default="gold_vs_pred")

    p = sub.add_parser("export-report", help="flatten a run manifest into CSV")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)

    return parser


def _format_inspect(result: dict) -> str:
    lines = [f"example {result['id']} ({result['split']})"]
    gold = " / ".join(f"{p:.4f}" for p in result["gold"])
    lines.append(f"  {'gold':<24} {gold}")
    for entry in result["methods"]:
        if entry["status"] != "ok":
            lines.append(f"  {entry['series']:<24} [{entry['status']}]")
            continue
        dist = " / ".join(f"{p:.4f}" for p in entry["dist"])
        lines.append(f"  {entry['series']:<24} {dist}   kl={entry['kl']:.4f} jsd={entry['jsd']:.4f}")
    return "\n".join(lines)


def _dispatch(args: argparse.Namespace) -> int:
    if args.verb == "simulate":
        out = cmd_simulate(_sim_config(args), args.out)
        print(f"bundle written to {out}")
    elif args.verb == "run":
        manifest = cmd_run(_experiment_config(args))
        mean = manifest.mean
        print(
            f"method={manifest.config['method']} seeds={len(manifest.per_seed)} "
            f"jsd={mean['jsd_mean']:.4f} kl={mean['kl_mean']:.4f} acc={mean['accuracy']:.4f}"
        )
    elif args.verb == "sweep-samples":
        cfg = _experiment_config(args)
        rows = cmd_sweep_samples(cfg, [int(k) for k in args.k_values.split(",")])
        print(f"swept {len(rows)} (k, seed) points into {cfg.out_dir}")
    elif args.verb == "entropy-curve":
        curves = cmd_entropy_curve(args.preds, args.bundle, args.out, args.split)
        print(f"wrote {len(curves)} curves to {args.out}")
    elif args.verb == "inspect":
        result = cmd_inspect(args.preds, args.bundle, args.example_id, args.split)
        print(json.dumps(result, indent=2) if args.json else _format_inspect(result))
    elif args.verb == "fit-temp":
        fit = FitConfig(
            direction=Direction(args.direction) if args.direction else Direction.GOLD_VS_PRED,
            target_type=TargetType(args.target_type) if args.target_type else TargetType.SOFT_COUNTS,
        )
        result = cmd_fit_temp(args.records, args.bundle, args.split, fit, args.out)
        print(f"temperature={result.temperature.value:.6f} objective={result.objective:.6f}")
    elif args.verb == "distill":
        cfg = _experiment_config(args)
        artifacts = cmd_distill(cfg, args.seed)
        print(f"distillation artifacts in {cfg.out_dir}: {', '.join(sorted(artifacts))}")
    elif args.verb == "evaluate":
        report = cmd_evaluate(
            args.bundle,
            args.split,
            preds_path=args.preds,
            records_path=args.records,
            direction=Direction(args.direction),
            per_example=args.per_example,
            out_path=args.out,
        )
        print(f"jsd={report.jsd_mean:.4f} kl={report.kl_mean:.4f} acc={report.accuracy:.4f} n={report.n_examples}")
    elif args.verb == "export-report":
        out = cmd_export_report(args.manifest, args.out)
        print(f"wrote {out}")
    else:  # pragma: no cover - argparse enforces the verb set
        raise ValueError(f"unknown verb {args.verb!r}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # pragma: no cover - defensive
        print(f"unexpected error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
