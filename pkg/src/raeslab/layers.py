"""Differentiable layers: GRU, dense output head, 1D convolution and pooling.

All layers work on single examples (feature vectors, [length, channels]
sequences) and transparently on batches carrying one extra leading axis.
Weights are float64 tensors initialized Glorot-uniform; biases start at zero.
"""

from __future__ import annotations

import numpy as np

from .tensor import (
    ShapeError,
    Tensor,
    accumulate_grad,
    linear,
    mul,
    record_op,
    sigmoid,
    swap_last_axes,
    tanh_op,
)

__all__ = [
    "init_params",
    "GRULayer",
    "DenseLayer",
    "Conv1DLayer",
    "MaxPool1D",
    "gru_step",
    "gru_forward",
    "conv1d_forward",
    "maxpool1d_forward",
    "transpose_seq_channels",
    "time_distributed_dense",
]


def init_params(shape, rng: np.random.Generator, name: str | None = None) -> Tensor:
    """Glorot-uniform weight tensor; 1-D shapes are biases and start at zero.

    Fan sizes: [out, in] weights use (in, out); [filters, kernel, in_channels]
    convolution kernels use the receptive-field convention
    (in_channels * kernel, filters * kernel).
    """
    shape = tuple(int(s) for s in shape)
    if len(shape) == 1:
        return Tensor(np.zeros(shape), requires_grad=True, name=name)
    if len(shape) == 2:
        fan_out, fan_in = shape
    elif len(shape) == 3:
        filters, kernel, in_ch = shape
        fan_in = in_ch * kernel
        fan_out = filters * kernel
    else:
        raise ShapeError(f"init_params supports 1-D to 3-D shapes, got {shape}")
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-limit, limit, size=shape), requires_grad=True, name=name)


class GRULayer:
    """Single gated recurrent cell.

    Gates: z = sig(W_z x + U_z h + b_z), r = sig(W_r x + U_r h + b_r),
    candidate h~ = tanh(W_h x + U_h (r*h) + b_h), and the new state is the
    convex combination h' = (1 - z)*h + z*h~.
    """

    def __init__(self, input_size: int, hidden_size: int, rng: np.random.Generator):
        if input_size < 1 or hidden_size < 1:
            raise ValueError(f"GRULayer sizes must be >= 1, got ({input_size}, {hidden_size})")
        self.input_size = input_size
        self.hidden_size = hidden_size
        h, i = hidden_size, input_size
        self.W_z = init_params((h, i), rng, "W_z")
        self.U_z = init_params((h, h), rng, "U_z")
        self.b_z = init_params((h,), rng, "b_z")
        self.W_r = init_params((h, i), rng, "W_r")
        self.U_r = init_params((h, h), rng, "U_r")
        self.b_r = init_params((h,), rng, "b_r")
        self.W_h = init_params((h, i), rng, "W_h")
        self.U_h = init_params((h, h), rng, "U_h")
        self.b_h = init_params((h,), rng, "b_h")

    def parameters(self) -> list[Tensor]:
        return [
            self.W_z, self.U_z, self.b_z,
            self.W_r, self.U_r, self.b_r,
            self.W_h, self.U_h, self.b_h,
        ]


class DenseLayer:
    """Affine layer with weights [out_features, in_features]."""

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator):
        if in_features < 1 or out_features < 1:
            raise ValueError(f"DenseLayer sizes must be >= 1, got ({in_features}, {out_features})")
        self.in_features = in_features
        self.out_features = out_features
        self.W = init_params((out_features, in_features), rng, "W")
        self.b = init_params((out_features,), rng, "b")

    def parameters(self) -> list[Tensor]:
        return [self.W, self.b]


class Conv1DLayer:
    """Valid (no padding) 1D cross-correlation with per-filter bias.

    Weights are stored [filters, kernel_size, in_channels].
    """

    def __init__(self, in_channels: int, filters: int, kernel_size: int, rng: np.random.Generator):
        if kernel_size < 1:
            raise ValueError(f"kernel_size must be >= 1, got {kernel_size}")
        if filters < 1:
            raise ValueError(f"filters must be >= 1, got {filters}")
        if in_channels < 1:
            raise ValueError(f"in_channels must be >= 1, got {in_channels}")
        self.in_channels = in_channels
        self.filters = filters
        self.kernel_size = kernel_size
        self.w = init_params((filters, kernel_size, in_channels), rng, "w")
        self.b = init_params((filters,), rng, "b")

    def parameters(self) -> list[Tensor]:
        return [self.w, self.b]


class MaxPool1D:
    """Windowed maximum along the sequence axis; parameter-free."""

    def __init__(self, pool_size: int = 2, stride: int = 2):
        if pool_size < 1:
            raise ValueError(f"pool_size must be >= 1, got {pool_size}")
        if stride < 1:
            raise ValueError(f"stride must be >= 1, got {stride}")
        self.pool_size = pool_size
        self.stride = stride


def _gate_preact(x: Tensor, w: Tensor, b: Tensor, h: Tensor, u: Tensor) -> Tensor:
    """x @ w.T + h @ u.T + b as one tape record (the hot path of every gate)."""
    single = x.ndim == 1
    x2 = x.data[None] if single else x.data
    h2 = h.data[None] if single else h.data
    out = x2 @ w.data.T + h2 @ u.data.T + b.data
    if single:
        out = out[0]

    def back(g, x=x, w=w, b=b, h=h, u=u, x2=x2, h2=h2, single=single):
        g2 = g[None] if single else g
        if x.requires_grad:
            gx = g2 @ w.data
            accumulate_grad(x, gx[0] if single else gx)
        if w.requires_grad:
            accumulate_grad(w, g2.T @ x2)
        if h.requires_grad:
            gh = g2 @ u.data
            accumulate_grad(h, gh[0] if single else gh)
        if u.requires_grad:
            accumulate_grad(u, g2.T @ h2)
        if b.requires_grad:
            accumulate_grad(b, g2.sum(axis=0))

    return record_op("gate_preact", out, (x, w, b, h, u), back)


def _gate_blend(z: Tensor, h: Tensor, cand: Tensor) -> Tensor:
    """(1 - z) * h + z * cand as one tape record."""
    zd = z.data
    out = (1.0 - zd) * h.data + zd * cand.data

    def back(g, z=z, h=h, cand=cand, zd=zd):
        if z.requires_grad:
            accumulate_grad(z, g * (cand.data - h.data))
        if h.requires_grad:
            accumulate_grad(h, g * (1.0 - zd))
        if cand.requires_grad:
            accumulate_grad(cand, g * zd)

    return record_op("gate_blend", out, (z, h, cand), back)


def gru_step(layer: GRULayer, x: Tensor, h: Tensor) -> Tensor:
    """One recurrence step; x is [input] or [B, input], h is [hidden] or [B, hidden]."""
    if x.shape[-1] != layer.input_size:
        raise ShapeError(f"gru_step input features {x.shape} do not match input_size {layer.input_size}")
    if h.shape[-1] != layer.hidden_size:
        raise ShapeError(f"gru_step state {h.shape} does not match hidden_size {layer.hidden_size}")
    z = sigmoid(_gate_preact(x, layer.W_z, layer.b_z, h, layer.U_z))
    r = sigmoid(_gate_preact(x, layer.W_r, layer.b_r, h, layer.U_r))
    cand = tanh_op(_gate_preact(x, layer.W_h, layer.b_h, mul(r, h), layer.U_h))
    return _gate_blend(z, h, cand)


def gru_forward(layer: GRULayer, xs, h0: Tensor) -> tuple[list[Tensor], Tensor]:
    """Unroll the cell over a step sequence; returns (all states, final state)."""
    xs = list(xs)
    if not xs:
        raise ValueError("gru_forward needs at least one input step")
    outputs = []
    h = h0
    for x in xs:
        h = gru_step(layer, x, h)
        outputs.append(h)
    return outputs, h


def _promote_seq(seq: Tensor, op: str) -> tuple[np.ndarray, bool]:
    if seq.ndim == 2:
        return seq.data[None], True
    if seq.ndim == 3:
        return seq.data, False
    raise ShapeError(f"{op} needs [length, channels] or [batch, length, channels], got {seq.shape}")


def conv1d_forward(layer: Conv1DLayer, seq: Tensor) -> Tensor:
    """Valid cross-correlation: out[i, f] = b[f] + sum_k sum_l seq[i+k, l] w[f, k, l]."""
    x3, squeeze = _promote_seq(seq, "conv1d_forward")
    batch, length, channels = x3.shape
    k = layer.kernel_size
    if channels != layer.in_channels:
        raise ShapeError(f"conv1d_forward channels {channels} do not match in_channels {layer.in_channels}")
    if length < k:
        raise ShapeError(f"conv1d_forward sequence length {length} shorter than kernel size {k}")
    out_len = length - k + 1
    w = layer.w.data
    out = np.empty((batch, out_len, layer.filters))
    out[:] = layer.b.data
    # term-by-term accumulation (k outer, channel inner) so the result is
    # bit-identical to a naive triple-loop evaluation of the same sum
    for kk in range(k):
        xs = x3[:, kk : kk + out_len, :]
        for c in range(channels):
            out += xs[:, :, c, None] * w[:, kk, c]

    def back(g, seq=seq, layer=layer, x3=x3, squeeze=squeeze, k=k, out_len=out_len):
        g3 = g[None] if squeeze else g
        if layer.b.requires_grad:
            accumulate_grad(layer.b, g3.sum(axis=(0, 1)))
        if layer.w.requires_grad:
            gw = np.empty_like(layer.w.data)
            for kk in range(k):
                gw[:, kk, :] = np.tensordot(g3, x3[:, kk : kk + out_len, :], axes=([0, 1], [0, 1]))
            accumulate_grad(layer.w, gw)
        if seq.requires_grad:
            gx = np.zeros_like(x3)
            for kk in range(k):
                gx[:, kk : kk + out_len, :] += g3 @ layer.w.data[:, kk, :]
            accumulate_grad(seq, gx[0] if squeeze else gx)

    return record_op("conv1d", out[0] if squeeze else out, (seq, layer.w, layer.b), back)


def maxpool1d_forward(pool: MaxPool1D, seq: Tensor) -> Tensor:
    """Per-channel windowed maximum; trailing partial windows are dropped.

    The gradient routes to the window's argmax element, first occurrence on ties.
    """
    x3, squeeze = _promote_seq(seq, "maxpool1d_forward")
    batch, length, channels = x3.shape
    p, s = pool.pool_size, pool.stride
    if length < p:
        raise ShapeError(f"maxpool1d_forward sequence length {length} shorter than pool size {p}")
    out_len = (length - p) // s + 1
    out = np.empty((batch, out_len, channels))
    argmax = np.empty((batch, out_len, channels), dtype=np.intp)
    for j in range(out_len):
        win = x3[:, j * s : j * s + p, :]
        idx = win.argmax(axis=1)
        argmax[:, j, :] = idx
        out[:, j, :] = np.take_along_axis(win, idx[:, None, :], axis=1)[:, 0, :]

    def back(g, seq=seq, x3=x3, squeeze=squeeze, argmax=argmax, s=s, out_len=out_len):
        if not seq.requires_grad:
            return
        g3 = g[None] if squeeze else g
        gx = np.zeros_like(x3)
        bidx = np.arange(x3.shape[0])[:, None]
        cidx = np.arange(x3.shape[2])[None, :]
        for j in range(out_len):
            gx[bidx, j * s + argmax[:, j, :], cidx] += g3[:, j, :]
        accumulate_grad(seq, gx[0] if squeeze else gx)

    return record_op("maxpool1d", out[0] if squeeze else out, (seq,), back)


def transpose_seq_channels(seq: Tensor) -> Tensor:
    """Swap sequence and channel axes so each channel becomes a sequence element."""
    return swap_last_axes(seq)


def time_distributed_dense(layer: DenseLayer, seq) -> list[Tensor]:
    """Apply one shared affine layer independently at every time step."""
    return [linear(x, layer.W, layer.b) for x in seq]
