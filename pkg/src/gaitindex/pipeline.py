"""The synth -> train -> score -> eval -> export-weights workflow.

Every command reads a RunConfig and writes plain files, so each step can be
rerun on its own. Layout under the configured directories::

    dataset_dir/manifest.json, <sequence>.csv
    model_dir/<variant>/model_{X,Y,Z}.json, fusion.json, loss_{X,Y,Z}.csv
    output_dir/scores/<variant>/segments.csv, sequences.csv
    output_dir/report.json, roc/*.csv
    output_dir/weights/<variant>_{X,Y,Z}.csv

``plain`` is the model set trained with ``train.dropout_keep``; ``dropout``
is the optional second set trained with ``dropout_variant_keep``.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .autoencoder import AxisModel, load_model, save_model
from .config import RunConfig, seeded
from .dataset import MANIFEST_NAME, generate_synthetic, load_manifest, prepare_windows
from .gait_index import (
    fusion_weights, load_fusion, read_scores, save_fusion, score_sequence, write_scores,
)
from .metrics import evaluate, roc
from .skeleton import AXES
from .training import train_axis_model

log = logging.getLogger(__name__)

VARIANTS = ("plain", "dropout")


class PipelineError(RuntimeError):
    """A command failed; the message names the step and the offending input."""


def _variants(cfg: RunConfig) -> dict[str, float]:
    out = {"plain": cfg.train.dropout_keep}
    if cfg.dropout_variant_keep is not None:
        out["dropout"] = cfg.dropout_variant_keep
    return out


def _manifest(cfg: RunConfig) -> Path:
    return Path(cfg.paths.dataset_dir) / MANIFEST_NAME


def cmd_synth(cfg: RunConfig) -> Path:
    cfg = seeded(cfg)
    if cfg.synth.frames < cfg.window.T:
        raise PipelineError(
            f"synth: frames per sequence ({cfg.synth.frames}) must be at least the window length T={cfg.window.T}"
        )
    return generate_synthetic(cfg.synth, cfg.paths.dataset_dir)


def training_windows(cfg: RunConfig) -> dict[str, np.ndarray]:
    try:
        splits = load_manifest(_manifest(cfg))
    except (OSError, ValueError) as exc:
        raise PipelineError(f"train: cannot load dataset: {exc}") from exc
    per_axis: dict[str, list[np.ndarray]] = {a: [] for a in AXES}
    for rec in splits.train:
        try:
            windows = prepare_windows(rec.frames, cfg.window)
        except ValueError as exc:
            raise PipelineError(f"train: sequence {rec.id}: {exc}") from exc
        for a in AXES:
            per_axis[a].append(windows[a])
    return {a: np.concatenate(v) for a, v in per_axis.items()}


def _train_job(args):
    axis, xs, tcfg = args
    model, report = train_axis_model(xs, tcfg, axis=axis)
    return axis, model, report


def cmd_train(cfg: RunConfig) -> dict[str, dict[str, AxisModel]]:
    windows = training_windows(cfg)
    log.info("training on %d windows per axis", len(windows["X"]))
    jobs = []
    for variant, keep in _variants(cfg).items():
        for k, axis in enumerate(AXES):
            tcfg = replace(cfg.train, seed=cfg.seed + k, dropout_keep=keep)
            jobs.append((variant, (axis, windows[axis], tcfg)))

    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.jobs, len(jobs))) as pool:
            results = list(pool.map(_train_job, [j[1] for j in jobs]))
    else:
        results = [_train_job(j[1]) for j in jobs]

    out: dict[str, dict[str, AxisModel]] = {}
    for (variant, _), (axis, model, report) in zip(jobs, results):
        vdir = Path(cfg.paths.model_dir) / variant
        vdir.mkdir(parents=True, exist_ok=True)
        save_model(model, vdir / f"model_{axis}.json")
        report.write_csv(vdir / f"loss_{axis}.csv")
        out.setdefault(variant, {})[axis] = model
    for variant, models in out.items():
        try:
            weights = fusion_weights(*(models[a].train_mse for a in AXES))
        except ValueError as exc:
            raise PipelineError(f"train: variant {variant}: {exc}") from exc
        save_fusion(weights, Path(cfg.paths.model_dir) / variant / "fusion.json")
    return out


def load_model_set(model_dir: str | Path, variant: str):
    vdir = Path(model_dir) / variant
    try:
        models = {a: load_model(vdir / f"model_{a}.json") for a in AXES}
        weights = load_fusion(vdir / "fusion.json")
    except FileNotFoundError as exc:
        raise PipelineError(f"missing model file for variant {variant}: {exc.filename}") from exc
    return models, weights


def available_variants(cfg: RunConfig) -> list[str]:
    return [v for v in VARIANTS if (Path(cfg.paths.model_dir) / v / "fusion.json").exists()]


def cmd_score(cfg: RunConfig, include_train: bool | None = None) -> dict[str, Path]:
    include_train = cfg.score_train if include_train is None else include_train
    variants = available_variants(cfg)
    if "plain" not in variants:
        raise PipelineError(f"score: no trained model set in {cfg.paths.model_dir}")
    try:
        splits = load_manifest(_manifest(cfg))
    except (OSError, ValueError) as exc:
        raise PipelineError(f"score: cannot load dataset: {exc}") from exc
    records = list(splits.test) + (list(splits.train_all) if include_train else [])
    written = {}
    for variant in variants:
        models, weights = load_model_set(cfg.paths.model_dir, variant)
        scored = []
        for rec in records:
            try:
                scored.append(score_sequence(models, weights, rec.frames, cfg.window.T, rec.id, rec.label))
            except ValueError as exc:
                raise PipelineError(f"score: sequence {rec.id}: {exc}") from exc
        sdir = Path(cfg.paths.output_dir) / "scores" / variant
        sdir.mkdir(parents=True, exist_ok=True)
        write_scores(scored, sdir / "segments.csv", sdir / "sequences.csv")
        written[variant] = sdir
    return written


def _index_columns(scores: dict, weights) -> dict[str, np.ndarray]:
    mse = np.stack([scores["mse_x"], scores["mse_y"], scores["mse_z"]], axis=1)
    return {
        "x-axis": mse[:, 0],
        "y-axis": mse[:, 1],
        "z-axis": mse[:, 2],
        "non-weighted": mse.sum(axis=1),
        "weighted": mse @ np.array(weights.weights),
    }


def _write_roc(path: Path, scores, labels) -> None:
    r = roc(scores, labels)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fpr", "tpr", "threshold"])
        for f, t, thr in r.points:
            w.writerow([repr(f), repr(t), repr(thr)])


def cmd_eval(cfg: RunConfig, roc_points: bool = False) -> dict:
    """Table-style report: per-axis, non-weighted and weighted rows at two granularities."""
    variants = available_variants(cfg)
    if "plain" not in variants:
        raise PipelineError(f"eval: no trained model set in {cfg.paths.model_dir}")
    rows = []
    out_dir = Path(cfg.paths.output_dir)
    for granularity, fname in (("per-segment", "segments.csv"), ("per-sequence", "sequences.csv")):
        for variant in variants:
            path = out_dir / "scores" / variant / fname
            try:
                scores = read_scores(path)
            except FileNotFoundError as exc:
                raise PipelineError(f"eval: missing score file {path}") from exc
            except ValueError as exc:
                raise PipelineError(f"eval: {exc}") from exc
            weights = load_fusion(Path(cfg.paths.model_dir) / variant / "fusion.json")
            columns = _index_columns(scores, weights)
            if variant == "plain":
                wanted = ["x-axis", "y-axis", "z-axis"] if granularity == "per-segment" else []
                wanted += ["non-weighted", "weighted"]
            else:
                wanted = ["weighted"]
            for name in wanted:
                try:
                    row = evaluate(columns[name], scores["label"], cfg.eval_threshold)
                except ValueError as exc:
                    raise PipelineError(f"eval: {path} ({name}): {exc}") from exc
                label = name if variant == "plain" else f"{name}+dropout"
                rows.append({"granularity": granularity, "index": label, "variant": variant, **row})
                if roc_points:
                    (out_dir / "roc").mkdir(parents=True, exist_ok=True)
                    _write_roc(out_dir / "roc" / f"{granularity}_{label}.csv", columns[name], scores["label"])
    report = {
        "positive_class": "abnormal (higher index = more abnormal; positive when index >= threshold)",
        "operating_point": "eer_threshold" if cfg.eval_threshold is None else "fixed",
        "rows": rows,
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "report.json", "w") as fh:
        json.dump(report, fh, indent=1)
        fh.write("\n")
    return report


GATE_ROWS = (("input", "W_ix"), ("forget", "W_fx"), ("candidate", "W_cx"), ("output", "W_ox"))


def export_weights(model: AxisModel, path: str | Path) -> None:
    """Encoder input-connection weights: one row per (gate, hidden unit)."""
    arrays = model.encoder.arrays()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["gate", "unit"] + [f"w{j}" for j in range(model.input_dim)])
        for gate, name in GATE_ROWS:
            for unit, row in enumerate(arrays[name]):
                w.writerow([gate, unit] + [repr(float(v)) for v in row])


def read_exported_weights(path: str | Path) -> dict[str, np.ndarray]:
    out: dict[str, list] = {name: [] for _, name in GATE_ROWS}
    names = dict(GATE_ROWS)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            vals = [float(v) for k, v in row.items() if k.startswith("w")]
            out[names[row["gate"]]].append(vals)
    return {k: np.array(v) for k, v in out.items()}


def cmd_export_weights(cfg: RunConfig) -> list[Path]:
    written = []
    wdir = Path(cfg.paths.output_dir) / "weights"
    variants = available_variants(cfg)
    if not variants:
        raise PipelineError(f"export-weights: no trained model set in {cfg.paths.model_dir}")
    wdir.mkdir(parents=True, exist_ok=True)
    for variant in variants:
        models, _ = load_model_set(cfg.paths.model_dir, variant)
        for axis in AXES:
            path = wdir / f"{variant}_{axis}.csv"
            export_weights(models[axis], path)
            written.append(path)
    return written
