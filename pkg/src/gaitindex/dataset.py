"""Windowing, manifest loading and a synthetic treadmill-gait generator.

The generator writes sequences in the 75-column skeleton CSV format so the
rest of the pipeline cannot tell it apart from recorded data. Each subject
gets one normal sequence and eight abnormal ones: a padded sole of three
thicknesses under either foot, or a weighted ankle on either side.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .skeleton import (
    AXES, N_RAW_JOINTS, normalize_axis, read_sequence_csv, select_joints, split_axes, write_sequence_csv,
)

log = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
LABELS = ("normal", "abnormal")
SPLITS = ("train", "test")


@dataclass(frozen=True)
class WindowConfig:
    T: int = 12
    stride: int = 6

    def __post_init__(self):
        if self.T < 1 or not 1 <= self.stride <= self.T:
            raise ValueError(f"need T >= 1 and 1 <= stride <= T, got T={self.T}, stride={self.stride}")


def window_offsets(n_frames: int, T: int, stride: int) -> range:
    if n_frames < T:
        raise ValueError(f"sequence of {n_frames} frames is shorter than the window length {T}")
    return range(0, n_frames - T + 1, stride)


def window_sequence(frames: np.ndarray, cfg: WindowConfig) -> np.ndarray:
    """Cut a sequence into windows of ``cfg.T`` frames every ``cfg.stride`` frames.

    Returns an array with a new leading window axis; trailing frames that do
    not fill a window are dropped.
    """
    frames = np.asarray(frames)
    offsets = window_offsets(len(frames), cfg.T, cfg.stride)
    return np.stack([frames[k:k + cfg.T] for k in offsets])


def prepare_windows(frames25: np.ndarray, cfg: WindowConfig) -> dict[str, np.ndarray]:
    """Raw (N, 25, 3) sequence -> per-axis normalized windows of shape (W, T, 17)."""
    frames17 = select_joints(frames25)
    if frames17.ndim == 2:
        frames17 = frames17[None]
    windows = window_sequence(frames17, cfg)
    per_axis = split_axes(windows.reshape(-1, *windows.shape[2:]))
    return {
        axis: normalize_axis(raw.reshape(len(windows), cfg.T, -1))
        for axis, raw in zip(AXES, per_axis)
    }


# --- manifest --------------------------------------------------------------

@dataclass
class SequenceRecord:
    id: str
    path: Path
    subject: str
    label: str
    split: str
    frames: np.ndarray | None = None


@dataclass
class DatasetSplits:
    train: list[SequenceRecord]
    test: list[SequenceRecord]
    train_all: list[SequenceRecord] = field(default_factory=list)


def load_manifest(path: str | Path, load_frames: bool = True) -> DatasetSplits:
    """Read a manifest and return subject-disjoint splits.

    ``train`` holds only the normal sequences of train-split subjects;
    ``test`` holds every sequence of test-split subjects. ``train_all`` keeps
    every train-split sequence for optional scoring.
    """
    path = Path(path)
    with open(path) as fh:
        obj = json.load(fh)
    entries = obj["sequences"] if isinstance(obj, dict) else obj
    records = []
    subject_split: dict[str, str] = {}
    for k, e in enumerate(entries):
        label, split, subject = e.get("label"), e.get("split"), str(e.get("subject"))
        if label not in LABELS:
            raise ValueError(f"{path}: entry {k} has unknown label {label!r}")
        if split not in SPLITS:
            raise ValueError(f"{path}: entry {k} has unknown split {split!r}")
        if subject_split.setdefault(subject, split) != split:
            raise ValueError(f"{path}: subject {subject} appears in both splits")
        seq_path = path.parent / e["path"]
        if not seq_path.exists():
            raise FileNotFoundError(f"{path}: entry {k} points to missing file {seq_path}")
        rec = SequenceRecord(str(e.get("id", Path(e["path"]).stem)), seq_path, subject, label, split)
        if load_frames:
            rec.frames = read_sequence_csv(seq_path)
        records.append(rec)
    train_all = [r for r in records if r.split == "train"]
    train = [r for r in train_all if r.label == "normal"]
    test = [r for r in records if r.split == "test"]
    if not train:
        raise ValueError(f"{path}: empty training set")
    return DatasetSplits(train, test, train_all)


# --- synthetic generator ---------------------------------------------------

def _default_styles() -> dict[str, tuple[str, str, float]]:
    styles = {}
    for side in ("left", "right"):
        for cm in (5, 10, 15):
            styles[f"sole_{side}_{cm:02d}cm"] = ("sole", side, cm / 100.0)
    for side in ("left", "right"):
        styles[f"weight_{side}"] = ("weight", side, 0.2)
    return styles


@dataclass
class SynthConfig:
    """Synthetic treadmill dataset.

    ``styles`` maps a style name to (kind, side, level): for ``sole`` the
    level is the added height of that leg in meters; for ``weight`` it is the
    fractional loss of swing amplitude on that side. Level 0 is normal gait.
    """

    subjects: int = 9
    train_subjects: int = 5
    frames: int = 1200
    fps: float = 30.0
    cadence: float = 1.25  # steps per second
    noise_xy: float = 0.006
    noise_z: float = 0.02
    subject_variation: float = 1.0
    seed: int = 0
    styles: dict = field(default_factory=_default_styles)

    def __post_init__(self):
        if self.subjects < 2 or not 1 <= self.train_subjects < self.subjects:
            raise ValueError("need at least one train and one test subject")
        if self.frames < 1 or self.fps <= 0 or self.cadence <= 0:
            raise ValueError("frames, fps and cadence must be positive")
        if self.noise_xy < 0 or self.noise_z < 0:
            raise ValueError("noise amplitudes must be nonnegative")
        self.styles = {k: (str(v[0]), str(v[1]), float(v[2])) for k, v in self.styles.items()}
        for name, (kind, side, level) in self.styles.items():
            if kind not in ("sole", "weight") or side not in ("left", "right") or level < 0:
                raise ValueError(f"bad style {name}: {(kind, side, level)}")


@dataclass(frozen=True)
class Body:
    """Per-subject anatomy and walking parameters."""

    scale: float = 1.0
    depth: float = 2.5
    floor: float = -1.0
    cycle_frames: float = 48.0
    phase: float = 0.0
    hip_swing: float = 0.35
    knee_flex: float = 0.6
    arm_swing: float = 0.25
    sway: float = 0.02
    bob: float = 0.02
    joint_offsets: np.ndarray | None = None


def sample_body(rng: np.random.Generator, cfg: SynthConfig) -> Body:
    v = cfg.subject_variation
    cycle = 2.0 * cfg.fps / cfg.cadence
    return Body(
        scale=1.0 + v * rng.uniform(-0.06, 0.06),
        depth=2.5 + v * rng.uniform(-0.2, 0.2),
        floor=-1.0,
        cycle_frames=cycle * (1.0 + v * rng.uniform(-0.05, 0.05)),
        phase=rng.uniform(0.0, 2 * np.pi),
        hip_swing=0.35 * (1.0 + v * rng.uniform(-0.08, 0.08)),
        knee_flex=0.6 * (1.0 + v * rng.uniform(-0.08, 0.08)),
        arm_swing=0.25 * (1.0 + v * rng.uniform(-0.15, 0.15)),
        sway=0.02 * (1.0 + v * rng.uniform(-0.2, 0.2)),
        bob=0.02 * (1.0 + v * rng.uniform(-0.2, 0.2)),
        joint_offsets=v * rng.normal(0.0, 0.008, size=(N_RAW_JOINTS, 3)),
    )


def _limb(root, length, angle):
    # angle > 0 swings the segment toward the camera (-z)
    return root + length * np.stack([np.zeros_like(angle), -np.cos(angle), -np.sin(angle)], axis=-1)


def gait_template(t: np.ndarray, body: Body, style: tuple[str, str, float] | None = None) -> np.ndarray:
    """Noise-free 25-joint skeletons at (possibly fractional) frame times ``t``.

    Left joints sit at +x. With no style, the right side at t + half a cycle
    is the mirror image (x -> -x) of the left side at t.
    """
    t = np.asarray(t, dtype=np.float64)
    s = body.scale
    phi = 2 * np.pi * t / body.cycle_frames + body.phase
    kind, side, level = style if style else ("none", "left", 0.0)

    swing = {"left": body.hip_swing, "right": body.hip_swing}
    flex = {"left": body.knee_flex, "right": body.knee_flex}
    lift = {"left": 0.0, "right": 0.0}
    lean = 0.0
    sign = 1.0 if side == "left" else -1.0
    if kind == "weight":
        swing[side] *= 1.0 - level
        flex[side] *= 1.0 - level
        lean = 0.03 * level * sign
    elif kind == "sole":
        lift[side] = level
        # pelvis tilts, trunk leans away from the raised side
        lean = -0.1 * level * sign

    J = np.zeros(t.shape + (N_RAW_JOINTS, 3))
    zero = np.zeros_like(t)
    pelvis = np.stack([
        body.sway * np.sin(phi),
        body.floor + 0.95 * s + body.bob * np.cos(2 * phi),
        body.depth + zero,
    ], axis=-1)
    J[..., 0, :] = pelvis
    up = np.array([0.0, 1.0, 0.0])
    trunk_x = np.stack([lean + 0.3 * body.sway * np.sin(phi), zero, zero], axis=-1)
    J[..., 1, :] = pelvis + 0.25 * s * up + 0.4 * trunk_x
    J[..., 20, :] = pelvis + 0.50 * s * up + trunk_x
    J[..., 2, :] = pelvis + 0.58 * s * up + 1.1 * trunk_x
    J[..., 3, :] = pelvis + 0.70 * s * up + 1.2 * trunk_x

    legs = {"left": (12, 13, 14, 15, 0.0), "right": (16, 17, 18, 19, np.pi)}
    for leg_side, (hip, knee, ankle, foot, shift) in legs.items():
        lx = 1.0 if leg_side == "left" else -1.0
        theta = swing[leg_side] * np.sin(phi + shift)
        kappa = flex[leg_side] * 0.5 * (1.0 - np.cos(phi + shift + 0.6))
        raise_ = np.array([0.0, lift[leg_side], 0.0])
        J[..., hip, :] = pelvis + np.array([lx * 0.09 * s, -0.03 * s, 0.0]) + raise_
        J[..., knee, :] = _limb(J[..., hip, :], 0.45 * s, theta)
        J[..., ankle, :] = _limb(J[..., knee, :], 0.43 * s, theta - kappa)
        J[..., foot, :] = J[..., ankle, :] + np.array([0.0, -0.05 * s, -0.10 * s])

    arms = {"left": (4, 5, 6, 7, 21, 22, np.pi), "right": (8, 9, 10, 11, 23, 24, 0.0)}
    for arm_side, (sh, el, wr, ha, tip, th, shift) in arms.items():
        lx = 1.0 if arm_side == "left" else -1.0
        alpha = body.arm_swing * np.sin(phi + shift)
        J[..., sh, :] = J[..., 20, :] + np.array([lx * 0.18 * s, -0.02 * s, 0.0])
        J[..., el, :] = _limb(J[..., sh, :], 0.28 * s, alpha)
        J[..., wr, :] = _limb(J[..., el, :], 0.25 * s, alpha + 0.2)
        J[..., ha, :] = _limb(J[..., wr, :], 0.08 * s, alpha + 0.2)
        J[..., tip, :] = _limb(J[..., ha, :], 0.06 * s, alpha + 0.2)
        J[..., th, :] = J[..., ha, :] + np.array([-lx * 0.03 * s, -0.02 * s, -0.02 * s])

    if body.joint_offsets is not None:
        offs = body.joint_offsets.copy()
        # keep the left/right mirror symmetry of the anatomy
        for left, right in ((4, 8), (5, 9), (6, 10), (7, 11), (12, 16), (13, 17), (14, 18), (15, 19), (21, 23), (22, 24)):
            offs[right] = offs[left] * np.array([-1.0, 1.0, 1.0])
        offs[[0, 1, 2, 3, 20], 0] = 0.0
        J = J + offs
    return J


def synthesize_sequence(
    body: Body,
    style: tuple[str, str, float] | None,
    cfg: SynthConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    frames = gait_template(np.arange(cfg.frames, dtype=np.float64), body, style)
    sigma = np.array([cfg.noise_xy, cfg.noise_xy, cfg.noise_z])
    return frames + rng.normal(size=frames.shape) * sigma


def generate_synthetic(cfg: SynthConfig, out_dir: str | Path, decimals: int = 6) -> Path:
    """Write a full dataset (CSV per sequence plus manifest.json); returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    root = np.random.SeedSequence(cfg.seed)
    entries = []
    for subj, child in enumerate(root.spawn(cfg.subjects)):
        rng = np.random.default_rng(child)
        body = sample_body(rng, cfg)
        subject = f"s{subj + 1:02d}"
        split = "train" if subj < cfg.train_subjects else "test"
        conditions = [("normal", None)] + list(cfg.styles.items())
        for name, style in conditions:
            frames = synthesize_sequence(body, style, cfg, rng)
            seq_id = f"{subject}_{name}"
            write_sequence_csv(out_dir / f"{seq_id}.csv", frames, decimals)
            label = "normal" if style is None or style[2] == 0 else "abnormal"
            entries.append({"id": seq_id, "path": f"{seq_id}.csv", "subject": subject,
                            "label": label, "split": split, "style": name})
    manifest = out_dir / MANIFEST_NAME
    with open(manifest, "w") as fh:
        json.dump({"format_version": 1, "sequences": entries}, fh, indent=1)
        fh.write("\n")
    log.info("wrote %d sequences to %s", len(entries), out_dir)
    return manifest
