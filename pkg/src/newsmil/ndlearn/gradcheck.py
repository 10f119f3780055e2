"""Finite-difference verification of reverse-mode gradients.

The forward function is re-run with each sampled parameter coordinate
nudged by +/- eps; the central difference is compared against the
analytic gradient from one backward pass. This is the backbone of the
numerical acceptance checks, so it runs in double precision with a
per-coordinate relative error defined as |a - n| / max(|a|, |n|, 1e-8).
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .tensor import GraphError, Tensor, collect_grads, zero_grads


def grad_check(forward_fn: Callable[[], Tensor], params: dict[str, Tensor],
               eps: float = 1e-5, max_coords_per_tensor: int = 25,
               seed: int = 0) -> float:
    """Max relative error between analytic and numeric gradients.

    `forward_fn` must rebuild the graph from the current parameter data
    and return a scalar loss, deterministically (no live dropout).
    Tensors larger than `max_coords_per_tensor` are spot-checked at that
    many seeded random coordinates; smaller ones are checked in full.
    """
    loss = forward_fn()
    if loss.data.size != 1:
        raise GraphError("grad_check needs a scalar loss")
    if not np.isfinite(loss.data):
        raise GraphError("non-finite loss in grad_check")
    zero_grads(params.values())
    loss.backward()
    analytic = collect_grads(params)

    rng = np.random.default_rng(seed)
    worst = 0.0
    for name, p in params.items():
        flat = p.data.reshape(-1)
        n = flat.size
        if n <= max_coords_per_tensor:
            coords = np.arange(n)
        else:
            coords = rng.choice(n, size=max_coords_per_tensor, replace=False)
        a_flat = analytic[name].reshape(-1)
        for c in coords:
            orig = flat[c]
            flat[c] = orig + eps
            f_plus = float(forward_fn().data)
            flat[c] = orig - eps
            f_minus = float(forward_fn().data)
            flat[c] = orig
            if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                raise GraphError("non-finite loss in grad_check")
            numeric = (f_plus - f_minus) / (2.0 * eps)
            a = a_flat[c]
            err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, err)
    return worst
