"""Differentiable ops sufficient for the two networks in this package.

Every op takes the tape first, batch-first float64 arrays inside Vars, and
records a backward closure on the output node. Convolution delegates its
heavy lifting (im2col + GEMM) to the selected compute kernel backend.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .. import kernels
from ..errors import DimensionError
from .graph import Parameter, Tape, Var


def constant(tape: Tape, value) -> Var:
    return tape.record(value, requires_grad=False)


def conv2d(tape: Tape, x: Var, w: Parameter, b: Parameter, stride: int) -> Var:
    """Valid (no padding) cross-correlation. x: (B,C,H,W), w: (F,C,kh,kw)."""
    xv, wv = x.value, w.value
    if xv.ndim != 4 or wv.ndim != 4:
        raise DimensionError(f"conv2d wants 4-d input and kernel, "
                             f"got {xv.shape} and {wv.shape}")
    if xv.shape[1] != wv.shape[1]:
        raise DimensionError(f"conv2d channel mismatch: input {xv.shape} "
                             f"vs kernel {wv.shape}")
    if wv.shape[2] > xv.shape[2] or wv.shape[3] > xv.shape[3]:
        raise DimensionError(f"conv2d kernel {wv.shape} larger than input {xv.shape}")
    if stride < 1:
        raise DimensionError(f"conv2d stride must be >= 1, got {stride}")
    y, cols = kernels.conv2d_forward(xv, wv, b.value, stride)
    x_shape = xv.shape

    def _bw(g: np.ndarray):
        need_dx = x.requires_grad
        dx, dw, db = kernels.conv2d_backward(x_shape, wv, stride, cols, g)
        if need_dx:
            x.accumulate(dx)
        w.accumulate(dw)
        b.accumulate(db)

    out = tape.record(y, backward=_bw)
    return out


def dense(tape: Tape, x: Var, w: Parameter, b: Parameter) -> Var:
    """Affine map. x: (B,n), w: (m,n), b: (m) -> (B,m)."""
    xv, wv = x.value, w.value
    if xv.ndim != 2 or wv.ndim != 2 or xv.shape[1] != wv.shape[1]:
        raise DimensionError(f"dense shape mismatch: input {xv.shape} vs weight {wv.shape}")
    y = xv @ wv.T + b.value

    def _bw(g: np.ndarray):
        if x.requires_grad:
            x.accumulate(g @ wv)
        w.accumulate(g.T @ xv)
        b.accumulate(g.sum(axis=0))

    return tape.record(y, backward=_bw)


def relu(tape: Tape, x: Var) -> Var:
    # np.maximum (unlike np.where on x > 0) propagates NaN, so a poisoned
    # activation surfaces as a non-finite loss instead of silently reading
    # as a dead unit
    y = np.maximum(x.value, 0.0)
    mask = x.value > 0.0

    def _bw(g: np.ndarray):
        x.accumulate(np.where(mask, g, 0.0))

    return tape.record(y, backward=_bw)


def flatten(tape: Tape, x: Var) -> Var:
    """(B, ...) -> (B, K), row-major."""
    shape = x.value.shape
    y = x.value.reshape(shape[0], -1)

    def _bw(g: np.ndarray):
        x.accumulate(g.reshape(shape))

    return tape.record(y, backward=_bw)


def concat(tape: Tape, xs: Sequence[Var]) -> Var:
    """Concatenate along the vector axis (axis 1 of (B, k_i) inputs)."""
    widths = [v.value.shape[1] for v in xs]
    y = np.concatenate([v.value for v in xs], axis=1)

    def _bw(g: np.ndarray):
        start = 0
        for v, k in zip(xs, widths):
            v.accumulate(g[:, start:start + k])
            start += k

    return tape.record(y, backward=_bw)


def dropout(tape: Tape, x: Var, rate: float, mode: str,
            rng: np.random.Generator | None = None) -> Var:
    """Inverted dropout; identity in eval mode."""
    if not 0.0 <= rate < 1.0:
        raise DimensionError(f"dropout rate must be in [0,1), got {rate}")
    if mode not in ("train", "eval"):
        raise DimensionError(f"dropout mode must be 'train' or 'eval', got {mode!r}")
    if mode == "eval" or rate == 0.0:
        def _bw_id(g: np.ndarray):
            x.accumulate(g)
        return tape.record(x.value, backward=_bw_id)
    if rng is None:
        raise DimensionError("train-mode dropout requires an rng")
    mask = (rng.random(x.value.shape) >= rate) / (1.0 - rate)

    def _bw(g: np.ndarray):
        x.accumulate(g * mask)

    return tape.record(x.value * mask, backward=_bw)


def mse_loss(tape: Tape, pred: Var, target: Var) -> Var:
    if pred.value.shape != target.value.shape:
        raise DimensionError(f"mse_loss shape mismatch: {pred.value.shape} "
                             f"vs {target.value.shape}")
    diff = pred.value - target.value
    n = diff.size
    y = np.array(np.mean(diff * diff))

    def _bw(g: np.ndarray):
        scale = 2.0 / n
        coeff = scale * float(g)
        pred.accumulate(coeff * diff)
        if target.requires_grad:
            target.accumulate(-coeff * diff)

    return tape.record(y, backward=_bw)


def sum_all(tape: Tape, x: Var) -> Var:
    y = np.array(np.sum(x.value))

    def _bw(g: np.ndarray):
        x.accumulate(np.full_like(x.value, float(g)))

    return tape.record(y, backward=_bw)


def squash_actions(tape: Tape, z: Var) -> Var:
    """(B,3) raw head -> (tanh, sigmoid, sigmoid) columns, the action ranges."""
    if z.value.ndim != 2 or z.value.shape[1] != 3:
        raise DimensionError(f"squash_actions wants (B,3), got {z.value.shape}")
    y = np.empty_like(z.value)
    y[:, 0] = np.tanh(z.value[:, 0])
    y[:, 1] = 1.0 / (1.0 + np.exp(-z.value[:, 1]))
    y[:, 2] = 1.0 / (1.0 + np.exp(-z.value[:, 2]))

    def _bw(g: np.ndarray):
        d = np.empty_like(y)
        d[:, 0] = 1.0 - y[:, 0] * y[:, 0]
        d[:, 1] = y[:, 1] * (1.0 - y[:, 1])
        d[:, 2] = y[:, 2] * (1.0 - y[:, 2])
        z.accumulate(g * d)

    return tape.record(y, backward=_bw)
