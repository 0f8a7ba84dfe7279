"""Skeleton ingestion: joint selection, axis split and per-segment normalization.

Frames use the Kinect-v2 25-joint enumeration in camera coordinates (meters).
A sequence is stored as an array of shape (N, 25, 3) before selection and
(N, 17, 3) after.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

N_RAW_JOINTS = 25
N_JOINTS = 17
AXES = ("X", "Y", "Z")

JOINT_NAMES = (
    "spine_base", "spine_mid", "neck", "head",
    "shoulder_left", "elbow_left", "wrist_left", "hand_left",
    "shoulder_right", "elbow_right", "wrist_right", "hand_right",
    "hip_left", "knee_left", "ankle_left", "foot_left",
    "hip_right", "knee_right", "ankle_right", "foot_right",
    "spine_shoulder", "hand_tip_left", "thumb_left", "hand_tip_right", "thumb_right",
)

# spine-mid, neck, both wrists, both hand tips, both thumbs
DISCARDED_JOINTS = (1, 2, 6, 10, 21, 22, 23, 24)
KEPT_JOINTS = tuple(j for j in range(N_RAW_JOINTS) if j not in DISCARDED_JOINTS)


class IngestionError(ValueError):
    """Malformed skeleton data."""


@dataclass(frozen=True)
class AxisSegment:
    """One axis of a window of frames: ``values`` has shape (T, 17)."""

    axis: str
    values: np.ndarray

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"unknown axis {self.axis!r}")

    @property
    def T(self) -> int:
        return self.values.shape[0]


def _check_frames(frames: np.ndarray, n_joints: int) -> np.ndarray:
    frames = np.asarray(frames, dtype=np.float64)
    single = frames.ndim == 2
    seq = frames[None] if single else frames
    if seq.ndim != 3 or seq.shape[1:] != (n_joints, 3):
        raise IngestionError(
            f"expected frames of shape ({n_joints}, 3), got {frames.shape[-2:] if frames.ndim >= 2 else frames.shape}"
        )
    bad = ~np.isfinite(seq).all(axis=(1, 2))
    if bad.any():
        raise IngestionError(f"non-finite coordinate in frame {int(np.argmax(bad))}")
    return seq


def select_joints(frames: np.ndarray) -> np.ndarray:
    """Drop the 8 low-information joints; accepts (25, 3) or (N, 25, 3)."""
    seq = _check_frames(frames, N_RAW_JOINTS)
    out = seq[:, KEPT_JOINTS, :]
    return out[0] if np.ndim(frames) == 2 else out


def split_axes(seq: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split an (N, 17, 3) sequence into three raw (N, 17) matrices."""
    seq = np.asarray(seq, dtype=np.float64)
    if seq.ndim != 3 or seq.shape[0] == 0:
        raise IngestionError("split_axes needs a non-empty (N, 17, 3) sequence")
    if seq.shape[1:] != (N_JOINTS, 3):
        raise IngestionError(f"expected (N, {N_JOINTS}, 3), got {seq.shape}")
    return seq[..., 0].copy(), seq[..., 1].copy(), seq[..., 2].copy()


def normalize_axis(raw: np.ndarray) -> np.ndarray:
    """Min-max scale a window into [0, 1].

    The min and max are taken over all entries of the window (the last two
    dimensions); leading dimensions are treated as independent windows. A
    constant window maps to 0.5 everywhere.
    """
    raw = np.asarray(raw, dtype=np.float64)
    lo = raw.min(axis=(-2, -1), keepdims=True)
    hi = raw.max(axis=(-2, -1), keepdims=True)
    span = hi - lo
    flat = span == 0
    out = (raw - lo) / np.where(flat, 1.0, span)
    return np.where(flat, 0.5, out)


def read_sequence_csv(path: str | Path) -> np.ndarray:
    """Read one gait sequence file into an (N, 25, 3) array.

    One row per frame with 75 columns (joint0_x, joint0_y, joint0_z, ...);
    lines starting with ``#`` are skipped.
    """
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 3 * N_RAW_JOINTS:
                raise IngestionError(
                    f"{path}: line {lineno} (frame {len(rows)}) has {len(parts)} columns, expected {3 * N_RAW_JOINTS}"
                )
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise IngestionError(f"{path}: frame {len(rows)}: {exc}") from None
    if not rows:
        raise IngestionError(f"{path}: no frames")
    seq = np.asarray(rows, dtype=np.float64).reshape(-1, N_RAW_JOINTS, 3)
    try:
        return _check_frames(seq, N_RAW_JOINTS)
    except IngestionError as exc:
        raise IngestionError(f"{path}: {exc}") from None


def write_sequence_csv(path: str | Path, frames: np.ndarray, decimals: int = 6) -> None:
    frames = _check_frames(frames, N_RAW_JOINTS)
    header = "# " + ",".join(f"{name}_{a}" for name in JOINT_NAMES for a in "xyz")
    fmt = f"%.{decimals}f"
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for frame in frames.reshape(len(frames), -1):
            fh.write(",".join(fmt % v for v in frame) + "\n")
