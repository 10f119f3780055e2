"""Minimal differentiable-computation core: float64 tensors, the layer
set used by the detection and extraction networks, reverse-mode
gradients, Adam, and a finite-difference gradient checker."""

from .tensor import (
    GraphError,
    Tensor,
    assert_finite,
    collect_grads,
    concat,
    softmax,
    stack_rows,
    zero_grads,
)
from .layers import (
    BiLstmParams,
    ConvBankParams,
    DenseParams,
    LstmDirection,
    bce_loss,
    bilstm_forward,
    conv_bank_forward,
    cross_entropy,
    dense,
    dropout,
    init_bilstm,
    init_conv_bank,
    init_dense,
)
from .optim import AdamState, adam_step
from .gradcheck import grad_check
from . import checkpoint

__all__ = [
    "AdamState",
    "BiLstmParams",
    "ConvBankParams",
    "DenseParams",
    "GraphError",
    "LstmDirection",
    "Tensor",
    "adam_step",
    "assert_finite",
    "bce_loss",
    "bilstm_forward",
    "checkpoint",
    "collect_grads",
    "concat",
    "conv_bank_forward",
    "cross_entropy",
    "dense",
    "dropout",
    "grad_check",
    "init_bilstm",
    "init_conv_bank",
    "init_dense",
    "softmax",
    "stack_rows",
    "zero_grads",
]
