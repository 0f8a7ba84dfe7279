"""Fusion of the three per-axis reconstruction errors into one gait index."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .autoencoder import AxisModel, reconstruct
from .dataset import WindowConfig, prepare_windows
from .skeleton import AXES

FORMAT_VERSION = 1


@dataclass(frozen=True)
class FusionWeights:
    e_x: float
    e_y: float
    e_z: float
    w_x: float
    w_y: float
    w_z: float

    @property
    def weights(self) -> tuple[float, float, float]:
        return (self.w_x, self.w_y, self.w_z)


UNIT_WEIGHTS = FusionWeights(1.0, 1.0, 1.0, 1.0, 1.0, 1.0)


def fusion_weights(e_x: float, e_y: float, e_z: float) -> FusionWeights:
    """Weight each axis by the total training error over its own error.

    Scaling all three errors by a common factor leaves the weights unchanged.
    """
    errors = (e_x, e_y, e_z)
    for axis, e in zip(AXES, errors):
        if not (math.isfinite(e) and e > 0):
            raise ValueError(f"training MSE for axis {axis} must be positive and finite, got {e!r}")
    total = e_x + e_y + e_z
    return FusionWeights(e_x, e_y, e_z, total / e_x, total / e_y, total / e_z)


def segment_index(weights: FusionWeights, mse_x, mse_y, mse_z):
    """Weighted sum of per-axis errors; works elementwise on arrays."""
    return weights.w_x * mse_x + weights.w_y * mse_y + weights.w_z * mse_z


def sequence_index(per_segment: Sequence[float]) -> float:
    values = np.asarray(per_segment, dtype=np.float64)
    if values.size == 0:
        raise ValueError("cannot average an empty list of segment indices")
    return float(values.mean())


@dataclass
class ScoredSequence:
    id: str
    label: str
    axis_mse: np.ndarray  # (n_segments, 3) columns X, Y, Z
    fused: np.ndarray  # (n_segments,)
    index: float = field(init=False)

    def __post_init__(self):
        self.index = sequence_index(self.fused)

    @property
    def n_segments(self) -> int:
        return len(self.fused)


def score_sequence(
    models: dict[str, AxisModel],
    weights: FusionWeights,
    frames25: np.ndarray,
    T: int,
    seq_id: str = "",
    label: str = "",
) -> ScoredSequence:
    """Score consecutive non-overlapping windows of one raw sequence."""
    windows = prepare_windows(frames25, WindowConfig(T=T, stride=T))
    mse = np.stack([reconstruct(models[a], windows[a]).mse for a in AXES], axis=1)
    fused = segment_index(weights, mse[:, 0], mse[:, 1], mse[:, 2])
    return ScoredSequence(seq_id, label, mse, fused)


def save_fusion(weights: FusionWeights, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump({"format_version": FORMAT_VERSION, **asdict(weights)}, fh, indent=1)
        fh.write("\n")


def load_fusion(path: str | Path) -> FusionWeights:
    with open(path) as fh:
        obj = json.load(fh)
    if obj.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported fusion format version")
    return FusionWeights(*(float(obj[k]) for k in ("e_x", "e_y", "e_z", "w_x", "w_y", "w_z")))


SEGMENT_COLUMNS = ("sequence_id", "label", "segment_idx", "mse_x", "mse_y", "mse_z", "fused_index")
SEQUENCE_COLUMNS = ("sequence_id", "label", "n_segments", "mse_x", "mse_y", "mse_z", "fused_index")


def write_scores(scored: Sequence[ScoredSequence], segment_path: str | Path, sequence_path: str | Path) -> None:
    with open(segment_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SEGMENT_COLUMNS)
        for s in scored:
            for k in range(s.n_segments):
                w.writerow([s.id, s.label, k, *(repr(float(v)) for v in s.axis_mse[k]), repr(float(s.fused[k]))])
    with open(sequence_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SEQUENCE_COLUMNS)
        for s in scored:
            means = s.axis_mse.mean(axis=0)
            w.writerow([s.id, s.label, s.n_segments, *(repr(float(v)) for v in means), repr(s.index)])


def read_scores(path: str | Path) -> dict[str, np.ndarray]:
    """Load a segment or sequence score CSV into column arrays."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no scores")
    out = {"sequence_id": np.array([r["sequence_id"] for r in rows]),
           "label": np.array([r["label"] for r in rows])}
    for col in ("mse_x", "mse_y", "mse_z", "fused_index"):
        out[col] = np.array([float(r[col]) for r in rows])
    return out
