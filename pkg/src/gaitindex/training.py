"""Mini-batch BPTT training of one per-axis autoencoder with Adam."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .autoencoder import HIDDEN_DIM, AxisModel, loss_and_grads, new_model, reconstruct

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    epochs: int = 100
    learning_rate: float = 1e-3
    batch_size: int = 32
    dropout_keep: float = 1.0
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    clip_norm: float | None = None
    teacher_forcing: bool = False
    hidden_dim: int = HIDDEN_DIM

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.hidden_dim < 1:
            raise ValueError("epochs, batch_size and hidden_dim must be positive")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 < self.dropout_keep <= 1.0:
            raise ValueError("dropout_keep must be in (0, 1]")
        if self.clip_norm is not None and not self.clip_norm > 0:
            raise ValueError("clip_norm must be positive when set")


@dataclass
class TrainReport:
    epoch_losses: list[float]
    train_mse: float
    wall_time: float
    config: dict = field(default_factory=dict)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write("epoch,mean_mse\n")
            for k, loss in enumerate(self.epoch_losses):
                fh.write(f"{k},{loss!r}\n")


class Adam:
    def __init__(self, params: dict[str, np.ndarray], lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for k, p in self.params.items():
            g = grads[k]
            m, v = self.m[k], self.v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            # in place: params are views held by the model
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def apply_input_dropout(x: np.ndarray, keep: float, rng: np.random.Generator) -> np.ndarray:
    """Inverted dropout: zero each entry with probability 1 - keep, scale the rest by 1/keep."""
    if not 0.0 < keep <= 1.0:
        raise ValueError("keep must be in (0, 1]")
    x = np.asarray(x, dtype=np.float64)
    if keep == 1.0:
        return x.copy()
    mask = rng.random(x.shape) < keep
    return np.where(mask, x / keep, 0.0)


def clip_by_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> float:
    norm = float(np.sqrt(sum(float((g * g).sum()) for g in grads.values())))
    if norm > max_norm:
        for g in grads.values():
            g *= max_norm / norm
    return norm


def _stack_segments(segments, axis: str | None) -> tuple[np.ndarray, str]:
    if isinstance(segments, np.ndarray):
        if axis is None:
            raise ValueError("axis is required when training from a bare array")
        xs = np.asarray(segments, dtype=np.float64)
    else:
        segments = list(segments)
        if not segments:
            raise ValueError("no training segments")
        axes = {s.axis for s in segments}
        if len(axes) != 1:
            raise ValueError(f"segments mix axes {sorted(axes)}")
        seg_axis = axes.pop()
        if axis is not None and axis != seg_axis:
            raise ValueError(f"segments are axis {seg_axis}, expected {axis}")
        axis = seg_axis
        if len({s.values.shape for s in segments}) != 1:
            raise ValueError("segments differ in shape")
        xs = np.stack([s.values for s in segments]).astype(np.float64)
    if xs.ndim != 3 or len(xs) == 0:
        raise ValueError("no training segments")
    if xs.shape[1] < 2:
        raise ValueError("segments need at least 2 frames")
    if not np.isfinite(xs).all() or xs.min() < 0.0 or xs.max() > 1.0:
        raise ValueError("training values must be finite and within [0, 1]")
    return xs, axis


def evaluate_mse(model: AxisModel, xs: np.ndarray, chunk: int = 256) -> np.ndarray:
    """Per-segment reconstruction MSE for a (N, T, D) array, no dropout."""
    return np.concatenate(
        [reconstruct(model, xs[k:k + chunk]).mse for k in range(0, len(xs), chunk)]
    )


def train_axis_model(
    segments,
    cfg: TrainConfig,
    axis: str | None = None,
    model: AxisModel | None = None,
) -> tuple[AxisModel, TrainReport]:
    """Fit an autoencoder to normal-gait windows of one axis.

    ``segments`` is a list of AxisSegment or an (N, T, 17) array (then
    ``axis`` must be given). A fresh model is initialized from ``cfg.seed``
    unless ``model`` is supplied, in which case it is trained in place.
    """
    if axis is None and model is not None:
        axis = model.axis
    xs, axis = _stack_segments(segments, axis)
    rng = np.random.default_rng(cfg.seed)
    if model is None:
        model = new_model(axis, rng, input_dim=xs.shape[2], hidden_dim=cfg.hidden_dim)
    opt = Adam(model.parameters(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps)

    start = time.perf_counter()
    n = len(xs)
    losses = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for b, lo in enumerate(range(0, n, cfg.batch_size)):
            batch = xs[order[lo:lo + cfg.batch_size]]
            enc_in = apply_input_dropout(batch, cfg.dropout_keep, rng) if cfg.dropout_keep < 1.0 else None
            loss, grads = loss_and_grads(model, batch, enc_in, cfg.teacher_forcing)
            if not np.isfinite(loss):
                raise FloatingPointError(f"axis {axis}: non-finite loss at epoch {epoch}, batch {b}")
            if cfg.clip_norm is not None:
                clip_by_global_norm(grads, cfg.clip_norm)
            opt.step(grads)
            total += loss * len(batch)
        losses.append(total / n)
        log.debug("axis %s epoch %d loss %.6g", axis, epoch, losses[-1])

    model.train_mse = float(evaluate_mse(model, xs).mean())
    report = TrainReport(losses, model.train_mse, time.perf_counter() - start, asdict(cfg))
    log.info("axis %s trained on %d windows: train mse %.6g (%.1fs)", axis, n, model.train_mse, report.wall_time)
    return model, report
