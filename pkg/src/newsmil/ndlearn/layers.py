"""Layers for the detection and extraction networks.

Parameter containers are plain dataclasses of Tensors so the optimizer,
checkpointing and the gradient checker can all iterate one flat
name -> Tensor mapping. Initialization: Glorot uniform for weight
matrices, zeros for biases, except the forget-gate bias which starts at
1.0 (keeps the cell state flowing early in training).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .tensor import (
    GraphError,
    Tensor,
    add,
    clamp,
    concat,
    log,
    matmul,
    max_over_rows,
    mul,
    relu,
    scale,
    sigmoid,
    softmax,
    stack_rows,
    tanh,
)

GATES = ("i", "f", "g", "o")


def glorot(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


@dataclass
class LstmDirection:
    """One direction of an LSTM: per-gate input weights (H x in),
    recurrent weights (H x H) and biases (H)."""

    w: dict[str, Tensor]
    u: dict[str, Tensor]
    b: dict[str, Tensor]

    def tensors(self, prefix: str) -> dict[str, Tensor]:
        out = {}
        for gate in GATES:
            out[f"{prefix}.w_{gate}"] = self.w[gate]
            out[f"{prefix}.u_{gate}"] = self.u[gate]
            out[f"{prefix}.b_{gate}"] = self.b[gate]
        return out


@dataclass
class BiLstmParams:
    input_dim: int
    hidden_dim: int
    fwd: LstmDirection
    bwd: LstmDirection

    def tensors(self, prefix: str = "bilstm") -> dict[str, Tensor]:
        return {**self.fwd.tensors(f"{prefix}.fwd"), **self.bwd.tensors(f"{prefix}.bwd")}


def init_lstm_direction(rng: np.random.Generator, input_dim: int, hidden_dim: int) -> LstmDirection:
    w = {g: Tensor(glorot(rng, hidden_dim, input_dim), requires_grad=True) for g in GATES}
    u = {g: Tensor(glorot(rng, hidden_dim, hidden_dim), requires_grad=True) for g in GATES}
    b = {g: Tensor(np.zeros(hidden_dim), requires_grad=True) for g in GATES}
    b["f"].data[:] = 1.0
    return LstmDirection(w, u, b)


def init_bilstm(rng: np.random.Generator, input_dim: int, hidden_dim: int) -> BiLstmParams:
    if input_dim <= 0 or hidden_dim <= 0:
        raise GraphError("LSTM dims must be positive")
    return BiLstmParams(
        input_dim=input_dim,
        hidden_dim=hidden_dim,
        fwd=init_lstm_direction(rng, input_dim, hidden_dim),
        bwd=init_lstm_direction(rng, input_dim, hidden_dim),
    )


def _lstm_run(seq: Sequence[Tensor], d: LstmDirection, hidden_dim: int) -> list[Tensor]:
    h = Tensor(np.zeros(hidden_dim))
    c = Tensor(np.zeros(hidden_dim))
    states = []
    for x in seq:
        i = sigmoid(add(add(matmul(d.w["i"], x), matmul(d.u["i"], h)), d.b["i"]))
        f = sigmoid(add(add(matmul(d.w["f"], x), matmul(d.u["f"], h)), d.b["f"]))
        g = tanh(add(add(matmul(d.w["g"], x), matmul(d.u["g"], h)), d.b["g"]))
        o = sigmoid(add(add(matmul(d.w["o"], x), matmul(d.u["o"], h)), d.b["o"]))
        c = add(mul(f, c), mul(i, g))
        h = mul(o, tanh(c))
        states.append(h)
    return states


def bilstm_forward(seq: Sequence[Tensor], params: BiLstmParams) -> tuple[list[Tensor], Tensor]:
    """Run both directions over `seq`.

    Returns per-step states (each 2H: forward state at t concatenated
    with backward state at t) and the summary vector (final forward
    state concatenated with final backward state).
    """
    seq = list(seq)
    if not seq:
        raise GraphError("bilstm_forward on an empty sequence")
    for x in seq:
        if x.data.shape != (params.input_dim,):
            raise GraphError(
                f"input vector shape {x.data.shape} does not match input_dim {params.input_dim}")
    fwd_states = _lstm_run(seq, params.fwd, params.hidden_dim)
    bwd_states_rev = _lstm_run(list(reversed(seq)), params.bwd, params.hidden_dim)
    bwd_states = list(reversed(bwd_states_rev))
    states = [concat([f, b]) for f, b in zip(fwd_states, bwd_states)]
    summary = concat([fwd_states[-1], bwd_states_rev[-1]])
    return states, summary


@dataclass
class ConvBankParams:
    """One bank of text-CNN filters per width; kernels are stored
    flattened as (n_filters, width * input_dim)."""

    input_dim: int
    widths: tuple[int, ...]
    n_filters: int
    kernels: dict[int, Tensor]
    biases: dict[int, Tensor]

    @property
    def output_dim(self) -> int:
        return self.n_filters * len(self.widths)

    def tensors(self, prefix: str = "conv") -> dict[str, Tensor]:
        out = {}
        for w in self.widths:
            out[f"{prefix}.k{w}"] = self.kernels[w]
            out[f"{prefix}.b{w}"] = self.biases[w]
        return out


def init_conv_bank(rng: np.random.Generator, input_dim: int,
                   widths: Sequence[int] = (2, 3, 4), n_filters: int = 50) -> ConvBankParams:
    widths = tuple(widths)
    if not widths or any(w <= 0 for w in widths) or list(widths) != sorted(widths):
        raise GraphError("conv widths must be positive and sorted")
    if n_filters < 1:
        raise GraphError("n_filters must be >= 1")
    kernels = {w: Tensor(glorot(rng, n_filters, w * input_dim), requires_grad=True) for w in widths}
    biases = {w: Tensor(np.zeros(n_filters), requires_grad=True) for w in widths}
    return ConvBankParams(input_dim, widths, n_filters, kernels, biases)


def conv_bank_forward(seq: Sequence[Tensor], params: ConvBankParams) -> Tensor:
    """Slide each width's kernels over the sequence (stride 1), ReLU,
    max-pool over positions, concatenate across widths.

    Sequences shorter than a width are padded with zero vectors so every
    width yields at least one window.
    """
    seq = list(seq)
    if not seq:
        raise GraphError("conv_bank_forward on an empty sequence")
    pooled = []
    for w in params.widths:
        padded = seq + [Tensor(np.zeros(params.input_dim))] * max(0, w - len(seq))
        windows = [concat(padded[p:p + w]) for p in range(len(padded) - w + 1)]
        scores = add(matmul(stack_rows(windows), _transpose(params.kernels[w])),
                     params.biases[w])
        pooled.append(max_over_rows(relu(scores)))
    return concat(pooled)


def _transpose(t: Tensor) -> Tensor:
    data = t.data.T.copy()

    def backward(g):
        t._accumulate(g.T)

    return Tensor._make(data, (t,), backward)


@dataclass
class DenseParams:
    weight: Tensor  # (out, in)
    bias: Tensor    # (out,)

    def tensors(self, prefix: str = "dense") -> dict[str, Tensor]:
        return {f"{prefix}.weight": self.weight, f"{prefix}.bias": self.bias}


def init_dense(rng: np.random.Generator, in_dim: int, out_dim: int,
               zero_init: bool = False) -> DenseParams:
    """Output heads use zero init so an untrained model scores exactly
    sigmoid(0)=0.5 / uniform softmax; hidden layers use Glorot."""
    if zero_init:
        weight = np.zeros((out_dim, in_dim))
    else:
        weight = glorot(rng, out_dim, in_dim)
    return DenseParams(Tensor(weight, requires_grad=True),
                       Tensor(np.zeros(out_dim), requires_grad=True))


def dense(x: Tensor, params: DenseParams, activation: str = "identity") -> Tensor:
    if x.data.shape != (params.weight.data.shape[1],):
        raise GraphError(
            f"dense input shape {x.data.shape} does not match weight {params.weight.data.shape}")
    z = add(matmul(params.weight, x), params.bias)
    if activation == "identity":
        return z
    if activation == "sigmoid":
        return sigmoid(z)
    if activation == "softmax":
        return softmax(z)
    raise GraphError(f"unknown activation {activation!r}")


def dropout(x: Tensor, rate: float, rng: np.random.Generator, training: bool) -> Tensor:
    """Inverted dropout: zero components with probability `rate` and
    scale survivors by 1/(1-rate); the identity at inference time."""
    if not 0.0 <= rate < 1.0:
        raise GraphError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    mask = (rng.random(x.data.shape) >= rate) / (1.0 - rate)
    return mul(x, Tensor(mask))


PROB_EPS = 1e-7


def bce_loss(pred: Tensor, label: int) -> Tensor:
    """Binary cross-entropy -[y ln p + (1-y) ln(1-p)], with the
    prediction clamped to [1e-7, 1-1e-7] before the logs."""
    if label not in (0, 1):
        raise GraphError(f"binary label must be 0 or 1, got {label}")
    p = clamp(pred, PROB_EPS, 1.0 - PROB_EPS)
    if label == 1:
        return scale(log(p), -1.0)
    return scale(log(add(Tensor(1.0), scale(p, -1.0))), -1.0)


def cross_entropy(probs: Tensor, label_index: int) -> Tensor:
    """-ln p[label] over a probability vector (softmax output)."""
    if not 0 <= label_index < probs.data.size:
        raise GraphError(f"label index {label_index} out of range for {probs.data.size} classes")
    p = clamp(probs[label_index], PROB_EPS, 1.0)
    return scale(log(p), -1.0)
