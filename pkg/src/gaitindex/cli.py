"""Command-line entry point: ``gaitindex {synth,train,score,eval,export-weights}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import pipeline
from .config import CONFIG_ENV, load_config

log = logging.getLogger("gaitindex")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help=f"JSON run config (default: ${CONFIG_ENV})")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry, e.g. train.epochs=50 (repeatable)")
    common.add_argument("--seed", type=int)
    common.add_argument("--jobs", type=int, help="parallel axis trainings")
    common.add_argument("--dataset-dir")
    common.add_argument("--model-dir")
    common.add_argument("--output-dir")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="gaitindex", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("synth", parents=[common], help="write a synthetic dataset")
    sub.add_parser("train", parents=[common], help="train the three axis models")
    p = sub.add_parser("score", parents=[common], help="score test sequences")
    p.add_argument("--include-train", action="store_true", help="also score train-split sequences")
    p = sub.add_parser("eval", parents=[common], help="ROC report from score files")
    p.add_argument("--threshold", type=float, help="fixed operating threshold instead of the EER one")
    p.add_argument("--roc-points", action="store_true", help="also write ROC curve CSVs")
    sub.add_parser("export-weights", parents=[common], help="dump encoder input weights")
    sub.add_parser("show-config", parents=[common], help="print the effective config")
    return parser


def _config(args):
    overrides = list(args.overrides)
    for flag, key in (("seed", "seed"), ("jobs", "jobs"), ("dataset_dir", "paths.dataset_dir"),
                      ("model_dir", "paths.model_dir"), ("output_dir", "paths.output_dir")):
        value = getattr(args, flag)
        if value is not None:
            overrides.append(f"{key}={json.dumps(value)}")
    if getattr(args, "threshold", None) is not None:
        overrides.append(f"eval_threshold={args.threshold!r}")
    return load_config(args.config, overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
    except (OSError, ValueError, TypeError) as exc:
        print(f"gaitindex config: error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "synth":
            print(pipeline.cmd_synth(cfg))
        elif args.command == "train":
            models = pipeline.cmd_train(cfg)
            for variant, per_axis in models.items():
                for axis, m in per_axis.items():
                    print(f"{variant} {axis} train_mse={m.train_mse:.6g}")
        elif args.command == "score":
            for variant, path in pipeline.cmd_score(cfg, include_train=args.include_train or None).items():
                print(f"{variant}: {path}")
        elif args.command == "eval":
            report = pipeline.cmd_eval(cfg, roc_points=args.roc_points)
            print(f"# positive class: {report['positive_class']}")
            print(f"{'granularity':<13} {'index':<22} {'AUC':>6} {'EER':>6} {'sens':>6} {'spec':>6} "
                  f"{'prec':>6} {'acc':>6} {'F1':>6}")
            for r in report["rows"]:
                print(f"{r['granularity']:<13} {r['index']:<22} " + " ".join(
                    f"{r[k]:6.3f}" for k in ("auc", "eer", "sensitivity", "specificity", "precision", "accuracy", "f1")))
        elif args.command == "export-weights":
            for path in pipeline.cmd_export_weights(cfg):
                print(path)
        elif args.command == "show-config":
            print(json.dumps(cfg.to_dict(), indent=1))
    except pipeline.PipelineError as exc:
        print(f"gaitindex {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, FloatingPointError) as exc:
        print(f"gaitindex {args.command}: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
