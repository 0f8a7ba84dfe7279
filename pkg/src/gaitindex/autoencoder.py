"""Per-axis sequence autoencoder: encoder LSTM, latent handoff, decoder LSTM.

The decoder starts from the encoder's final (c, h), is fed a zero frame on
its first step and its own previous output afterwards, and emits the
reconstruction in reverse time order. A linear projection maps each decoder
output h to a 17-value frame.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .lstm import (
    LstmParams, LstmState, init_params, lstm_backward, lstm_forward, lstm_step, lstm_step_backward,
)
from .skeleton import AXES, N_JOINTS, AxisSegment

FORMAT_VERSION = 1
HIDDEN_DIM = 256


@dataclass
class AxisModel:
    axis: str
    encoder: LstmParams
    decoder: LstmParams
    W_out: np.ndarray  # (input_dim, hidden_dim)
    b_out: np.ndarray  # (input_dim,)
    train_mse: float | None = None

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"unknown axis {self.axis!r}")
        dims = (self.encoder.input_dim, self.encoder.hidden_dim)
        if (self.decoder.input_dim, self.decoder.hidden_dim) != dims:
            raise ValueError("encoder and decoder dimensions differ")
        if self.W_out.shape != dims or self.b_out.shape != (dims[0],):
            raise ValueError("output projection does not match the LSTM dimensions")

    @property
    def input_dim(self) -> int:
        return self.encoder.input_dim

    @property
    def hidden_dim(self) -> int:
        return self.encoder.hidden_dim

    def parameters(self) -> dict[str, np.ndarray]:
        """Live references to every trainable tensor, keyed by name."""
        out = {f"encoder.{k}": v for k, v in self.encoder.tensors().items()}
        out.update({f"decoder.{k}": v for k, v in self.decoder.tensors().items()})
        out["W_out"] = self.W_out
        out["b_out"] = self.b_out
        return out

    def copy(self) -> "AxisModel":
        return AxisModel(
            self.axis, self.encoder.copy(), self.decoder.copy(),
            self.W_out.copy(), self.b_out.copy(), self.train_mse,
        )


def new_model(
    axis: str,
    rng: np.random.Generator,
    input_dim: int = N_JOINTS,
    hidden_dim: int = HIDDEN_DIM,
) -> AxisModel:
    encoder = init_params(input_dim, hidden_dim, rng)
    decoder = init_params(input_dim, hidden_dim, rng)
    s = 1.0 / np.sqrt(hidden_dim)
    W_out = rng.uniform(-s, s, size=(input_dim, hidden_dim))
    return AxisModel(axis, encoder, decoder, W_out, np.zeros(input_dim))


@dataclass
class Reconstruction:
    """Reconstructed frames in forward time order plus the per-segment MSE.

    For a batch input of shape (B, T, D), ``ys`` has the same shape and
    ``mse`` is an array of B values.
    """

    ys: np.ndarray
    mse: float | np.ndarray


def _as_windows(model: AxisModel, seg) -> tuple[np.ndarray, bool]:
    if isinstance(seg, AxisSegment):
        if seg.axis != model.axis:
            raise ValueError(f"segment axis {seg.axis} does not match model axis {model.axis}")
        seg = seg.values
    xs = np.asarray(seg, dtype=np.float64)
    single = xs.ndim == 2
    if single:
        xs = xs[None]
    if xs.ndim != 3 or xs.shape[2] != model.input_dim or xs.shape[1] < 1:
        raise ValueError(f"expected (T, {model.input_dim}) windows, got {np.shape(seg)}")
    return xs, single


def encode(model: AxisModel, seg) -> LstmState:
    """Final encoder state for a (T, D) segment or a (B, T, D) batch."""
    xs, single = _as_windows(model, seg)
    init = LstmState.zeros(model.hidden_dim, xs.shape[0])
    states, _ = lstm_forward(model.encoder, xs.transpose(1, 0, 2), init)
    c, h = states[-1]
    return LstmState(c[0], h[0]) if single else LstmState(c, h)


def _decode(model: AxisModel, latent: LstmState, T: int, targets=None):
    """Run the decoder; returns emitted frames (in emission order) and traces.

    With ``targets`` (time-major ground truth), step s+1 is fed the true frame
    that step s was reconstructing instead of the emitted one.
    """
    state = latent
    u = np.zeros(latent.h.shape[:-1] + (model.input_dim,))
    emitted, traces = [], []
    for s in range(T):
        state, tr = lstm_step(model.decoder, state, u)
        y = state.h @ model.W_out.T + model.b_out
        emitted.append(y)
        traces.append(tr)
        u = y if targets is None else targets[T - 1 - s]
    return emitted, traces


def decode(model: AxisModel, latent: LstmState, T: int) -> np.ndarray:
    """Reconstruct T frames from a latent state, returned in forward time order."""
    if T < 1:
        raise ValueError("T must be at least 1")
    emitted, _ = _decode(model, latent, T)
    ys = np.stack(emitted[::-1])
    return ys if ys.ndim == 2 else ys.transpose(1, 0, 2)


def reconstruct(model: AxisModel, seg) -> Reconstruction:
    xs, single = _as_windows(model, seg)
    latent = encode(model, xs)
    ys = decode(model, latent, xs.shape[1])
    mse = ((xs - ys) ** 2).mean(axis=(1, 2))
    if single:
        return Reconstruction(ys[0], float(mse[0]))
    return Reconstruction(ys, mse)


def loss_and_grads(
    model: AxisModel,
    xs: np.ndarray,
    enc_inputs: np.ndarray | None = None,
    teacher_forcing: bool = False,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean reconstruction MSE over a (B, T, D) batch and its exact gradient.

    ``enc_inputs`` replaces the encoder's view of ``xs`` (used for input
    dropout); the reconstruction target is always ``xs``.
    """
    xs = np.asarray(xs, dtype=np.float64)
    B, T, D = xs.shape
    targets = xs.transpose(1, 0, 2)
    enc_xs = targets if enc_inputs is None else np.asarray(enc_inputs).transpose(1, 0, 2)

    init = LstmState.zeros(model.hidden_dim, B)
    enc_states, enc_traces = lstm_forward(model.encoder, enc_xs, init)
    emitted, dec_traces = _decode(model, enc_states[-1], T, targets if teacher_forcing else None)

    # emitted[s] reconstructs targets[T-1-s]
    diffs = [emitted[s] - targets[T - 1 - s] for s in range(T)]
    loss = float(sum((d * d).sum() for d in diffs) / (B * T * D))
    scale = 2.0 / (B * T * D)

    dec_grads = LstmParams.zeros(D, model.hidden_dim)
    gW_out = np.zeros_like(model.W_out)
    gb_out = np.zeros_like(model.b_out)
    dh = np.zeros((B, model.hidden_dim))
    dc = np.zeros((B, model.hidden_dim))
    du_next = np.zeros((B, D))
    for s in range(T - 1, -1, -1):
        dy = scale * diffs[s]
        if not teacher_forcing:
            dy = dy + du_next
        gW_out += dy.T @ dec_traces[s].h
        gb_out += dy.sum(axis=0)
        dh = dh + dy @ model.W_out
        du_next, dh, dc = lstm_step_backward(model.decoder, dec_traces[s], dh, dc, dec_grads)

    enc_grads, _, _ = lstm_backward(model.encoder, enc_traces, None, LstmState(dc, dh))

    grads = {f"encoder.{k}": v for k, v in enc_grads.tensors().items()}
    grads.update({f"decoder.{k}": v for k, v in dec_grads.tensors().items()})
    grads["W_out"] = gW_out
    grads["b_out"] = gb_out
    return loss, grads


def _encode_array(a: np.ndarray) -> dict:
    return {"shape": list(a.shape), "data": [float(v) for v in a.ravel()]}


def _decode_array(obj: dict) -> np.ndarray:
    return np.asarray(obj["data"], dtype=np.float64).reshape(obj["shape"])


def model_to_dict(model: AxisModel) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "axis": model.axis,
        "input_dim": model.input_dim,
        "hidden_dim": model.hidden_dim,
        "train_mse": model.train_mse,
        "encoder": {k: _encode_array(v) for k, v in model.encoder.arrays().items()},
        "decoder": {k: _encode_array(v) for k, v in model.decoder.arrays().items()},
        "out_proj": {"W": _encode_array(model.W_out), "b": _encode_array(model.b_out)},
    }


def model_from_dict(obj: dict) -> AxisModel:
    if obj.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {obj.get('format_version')!r}")
    model = AxisModel(
        obj["axis"],
        LstmParams.from_arrays({k: _decode_array(v) for k, v in obj["encoder"].items()}),
        LstmParams.from_arrays({k: _decode_array(v) for k, v in obj["decoder"].items()}),
        _decode_array(obj["out_proj"]["W"]),
        _decode_array(obj["out_proj"]["b"]),
        obj.get("train_mse"),
    )
    if (model.input_dim, model.hidden_dim) != (obj["input_dim"], obj["hidden_dim"]):
        raise ValueError("model file dimensions do not match its arrays")
    return model


def save_model(model: AxisModel, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh)
        fh.write("\n")


def load_model(path: str | Path) -> AxisModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
