"""Peephole LSTM cell with explicit forward and reverse-mode passes.

Gate pre-activations are stored stacked in the order (i, f, c, o) so that one
matrix product per source serves all four gates; the per-gate matrices are
exposed as views. Peephole weights are kept as vectors (the diagonals), so
they cannot leave the diagonal.

Every function accepts either single vectors or batches with a leading batch
dimension; time always comes first for sequences.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

GATES = ("i", "f", "c", "o")
PEEPHOLES = ("i", "f", "o")


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass
class LstmParams:
    """All weights of one cell.

    ``Wx`` is (4H, D), ``Wh`` is (4H, H), ``b`` is (4H,), rows stacked in gate
    order i, f, c, o. ``peep`` is (3, H) holding the diagonals of the
    peephole matrices for i, f and o.
    """

    Wx: np.ndarray
    Wh: np.ndarray
    peep: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        H4, D = self.Wx.shape
        if H4 % 4 or H4 == 0 or D == 0:
            raise ValueError(f"bad input weight shape {self.Wx.shape}")
        H = H4 // 4
        if self.Wh.shape != (H4, H) or self.peep.shape != (3, H) or self.b.shape != (H4,):
            raise ValueError("inconsistent LSTM parameter shapes")

    @property
    def input_dim(self) -> int:
        return self.Wx.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.Wh.shape[1]

    @classmethod
    def zeros(cls, input_dim: int, hidden_dim: int) -> "LstmParams":
        H = hidden_dim
        return cls(
            np.zeros((4 * H, input_dim)), np.zeros((4 * H, H)), np.zeros((3, H)), np.zeros(4 * H)
        )

    def arrays(self) -> dict[str, np.ndarray]:
        """Named per-gate views, e.g. ``W_ix``, ``W_fh``, ``p_o``, ``b_c``."""
        H = self.hidden_dim
        out = {}
        for k, g in enumerate(GATES):
            out[f"W_{g}x"] = self.Wx[k * H:(k + 1) * H]
        for k, g in enumerate(GATES):
            out[f"W_{g}h"] = self.Wh[k * H:(k + 1) * H]
        for k, g in enumerate(PEEPHOLES):
            out[f"p_{g}"] = self.peep[k]
        for k, g in enumerate(GATES):
            out[f"b_{g}"] = self.b[k * H:(k + 1) * H]
        return out

    @classmethod
    def from_arrays(cls, arrays: dict[str, np.ndarray]) -> "LstmParams":
        a = {k: np.asarray(v, dtype=np.float64) for k, v in arrays.items()}
        return cls(
            np.concatenate([a[f"W_{g}x"] for g in GATES]),
            np.concatenate([a[f"W_{g}h"] for g in GATES]),
            np.stack([a[f"p_{g}"] for g in PEEPHOLES]),
            np.concatenate([a[f"b_{g}"] for g in GATES]),
        )

    def tensors(self) -> dict[str, np.ndarray]:
        return {"Wx": self.Wx, "Wh": self.Wh, "peep": self.peep, "b": self.b}

    def copy(self) -> "LstmParams":
        return LstmParams(self.Wx.copy(), self.Wh.copy(), self.peep.copy(), self.b.copy())


def init_params(input_dim: int, hidden_dim: int, rng: np.random.Generator) -> LstmParams:
    """Uniform(-s, s) weights with s = 1/sqrt(hidden_dim); forget bias 1, rest 0."""
    s = 1.0 / np.sqrt(hidden_dim)
    H = hidden_dim
    p = LstmParams(
        rng.uniform(-s, s, size=(4 * H, input_dim)),
        rng.uniform(-s, s, size=(4 * H, H)),
        np.zeros((3, H)),
        np.zeros(4 * H),
    )
    p.b[H:2 * H] = 1.0
    return p


class LstmState(NamedTuple):
    c: np.ndarray
    h: np.ndarray

    @classmethod
    def zeros(cls, hidden_dim: int, batch: int | None = None) -> "LstmState":
        shape = (hidden_dim,) if batch is None else (batch, hidden_dim)
        return cls(np.zeros(shape), np.zeros(shape))


class GateTrace(NamedTuple):
    x: np.ndarray
    c_prev: np.ndarray
    h_prev: np.ndarray
    i: np.ndarray
    f: np.ndarray
    g: np.ndarray
    o: np.ndarray
    c: np.ndarray
    tanh_c: np.ndarray
    h: np.ndarray


def _check_finite(trace: GateTrace) -> None:
    if np.isfinite(trace.c).all() and np.isfinite(trace.h).all():
        return
    for name in ("i", "f", "g", "c", "o", "h"):
        if not np.isfinite(getattr(trace, name)).all():
            gate = "c_hat" if name == "g" else name
            raise FloatingPointError(f"non-finite value in LSTM gate {gate}")


def lstm_step(params: LstmParams, prev: LstmState, x: np.ndarray) -> tuple[LstmState, GateTrace]:
    x = np.asarray(x, dtype=np.float64)
    H = params.hidden_dim
    if x.shape[-1] != params.input_dim or prev.c.shape[-1] != H or prev.h.shape[-1] != H:
        raise ValueError(
            f"shape mismatch: x {x.shape}, c {prev.c.shape}, h {prev.h.shape} "
            f"for cell ({params.input_dim}, {H})"
        )
    c_prev, h_prev = prev
    a = x @ params.Wx.T + h_prev @ params.Wh.T + params.b
    pi, pf, po = params.peep
    i = sigmoid(a[..., :H] + pi * c_prev)
    f = sigmoid(a[..., H:2 * H] + pf * c_prev)
    g = np.tanh(a[..., 2 * H:3 * H])
    c = f * c_prev + i * g
    # output gate peeks at the updated cell
    o = sigmoid(a[..., 3 * H:] + po * c)
    tanh_c = np.tanh(c)
    h = o * tanh_c
    trace = GateTrace(x, c_prev, h_prev, i, f, g, o, c, tanh_c, h)
    _check_finite(trace)
    return LstmState(c, h), trace


def lstm_forward(
    params: LstmParams, xs: Sequence[np.ndarray], init: LstmState
) -> tuple[list[LstmState], list[GateTrace]]:
    if len(xs) == 0:
        raise ValueError("lstm_forward needs at least one input")
    states, traces = [], []
    state = init
    for t, x in enumerate(xs):
        try:
            state, trace = lstm_step(params, state, x)
        except (ValueError, FloatingPointError) as exc:
            raise type(exc)(f"timestep {t}: {exc}") from None
        states.append(state)
        traces.append(trace)
    return states, traces


def lstm_step_backward(
    params: LstmParams,
    trace: GateTrace,
    dh: np.ndarray,
    dc: np.ndarray,
    grads: LstmParams,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Backpropagate one step.

    ``dh`` and ``dc`` are the total sensitivities of the loss on this step's
    h_t and c_t arriving from later computation. Parameter gradients are
    added into ``grads``; returns (dx, dh_prev, dc_prev).
    """
    H = params.hidden_dim
    D = params.input_dim
    x = trace.x.reshape(-1, D)
    c_prev = trace.c_prev.reshape(-1, H)
    h_prev = trace.h_prev.reshape(-1, H)
    i, f, g, o, c, tc = (v.reshape(-1, H) for v in trace[3:9])
    dh = np.asarray(dh).reshape(-1, H)
    dc = np.asarray(dc).reshape(-1, H)
    pi, pf, po = params.peep

    da_o = dh * tc * o * (1.0 - o)
    dc = dc + dh * o * (1.0 - tc * tc) + da_o * po
    da_i = dc * g * i * (1.0 - i)
    da_f = dc * c_prev * f * (1.0 - f)
    da_g = dc * i * (1.0 - g * g)
    dc_prev = dc * f + da_i * pi + da_f * pf

    da = np.concatenate([da_i, da_f, da_g, da_o], axis=1)
    grads.Wx += da.T @ x
    grads.Wh += da.T @ h_prev
    grads.b += da.sum(axis=0)
    grads.peep[0] += (da_i * c_prev).sum(axis=0)
    grads.peep[1] += (da_f * c_prev).sum(axis=0)
    grads.peep[2] += (da_o * c).sum(axis=0)

    dx = da @ params.Wx
    dh_prev = da @ params.Wh
    shape = trace.c_prev.shape
    return dx.reshape(trace.x.shape), dh_prev.reshape(shape), dc_prev.reshape(shape)


def lstm_backward(
    params: LstmParams,
    traces: Sequence[GateTrace],
    grad_h_seq: np.ndarray | None,
    grad_final: LstmState | None = None,
) -> tuple[LstmParams, np.ndarray, LstmState]:
    """Reverse-mode pass over a full ``lstm_forward``.

    ``grad_h_seq[t]`` is dL/dh_t contributed directly at step t (None means
    zeros); ``grad_final`` holds dL/dc_T and dL/dh_T from beyond the sequence.
    Returns (parameter gradients, input gradients stacked over time,
    gradient on the initial state).
    """
    if not traces:
        raise ValueError("no traces to backpropagate")
    grads = LstmParams.zeros(params.input_dim, params.hidden_dim)
    last = traces[-1]
    if grad_final is None:
        dc = np.zeros_like(last.c)
        dh = np.zeros_like(last.h)
    else:
        dc, dh = grad_final
    dxs = [None] * len(traces)
    for t in range(len(traces) - 1, -1, -1):
        tr = traces[t]
        if tr.x.shape[-1] != params.input_dim or tr.c.shape[-1] != params.hidden_dim:
            raise ValueError(f"trace at timestep {t} does not match the parameters")
        dh_t = dh if grad_h_seq is None else dh + grad_h_seq[t]
        dxs[t], dh, dc = lstm_step_backward(params, tr, dh_t, dc, grads)
    return grads, np.stack(dxs), LstmState(dc, dh)
