"""Context bookkeeping and the context-decoding strategies.

All four variants share the same encoder (a GRU whose final hidden state is
the context vector), the same GRU decoder and the same time-distributed dense
head; they differ only in how the flat context becomes the decoder's input
sequence:

* ``rae``: the context vector is repeated at every decoder step.
* ``raes``: the context is reshaped into seq_len steps of equal feature
  chunks, which requires the context size to be a multiple of seq_len.
* ``raesc``: a 1D convolution (one filter per output step) plus max-pooling
  runs over the context, and the result is transposed so each filter's
  response becomes one decoder step; no divisibility constraint.
* ``raes-stretch``: the context is linearly interpolated up to seq_len
  univariate steps (only defined when the context is not longer than the
  sequence).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .layers import (
    Conv1DLayer,
    DenseLayer,
    GRULayer,
    MaxPool1D,
    conv1d_forward,
    gru_forward,
    maxpool1d_forward,
    time_distributed_dense,
    transpose_seq_channels,
)
from .tensor import (
    ShapeError,
    Tensor,
    matmul,
    reshape,
    stack_steps,
    unstack_steps,
)

__all__ = [
    "RAE",
    "RAES",
    "RAESC",
    "RAES_STRETCH",
    "VARIANT_KINDS",
    "ModelVariant",
    "ContextSpec",
    "AutoencoderModel",
    "context_size_from_sigma",
    "raes_feasible",
    "transform_context",
    "stretch_context",
    "rae_forward",
    "raes_forward",
    "raesc_forward",
    "raes_stretch_forward",
    "decoder_input_features",
    "infeasibility_reason",
]

RAE = "rae"
RAES = "raes"
RAESC = "raesc"
RAES_STRETCH = "raes-stretch"
VARIANT_KINDS = (RAE, RAES, RAESC, RAES_STRETCH)


@dataclass(frozen=True)
class ModelVariant:
    """A decoding strategy plus the convolution hyperparameters it may need."""

    kind: str
    kernel_size: int = 3
    pool_size: int = 2
    pool_stride: int = 2

    def __post_init__(self):
        if self.kind not in VARIANT_KINDS:
            raise ValueError(f"unknown variant {self.kind!r}, expected one of {VARIANT_KINDS}")
        if self.kernel_size < 1 or self.pool_size < 1 or self.pool_stride < 1:
            raise ValueError("kernel_size, pool_size and pool_stride must all be >= 1")


def context_size_from_sigma(sigma: float, n_features: int, seq_len: int) -> int:
    """Context length for a given size ratio: round(sigma * n_features * seq_len)."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if n_features < 1 or seq_len < 1:
        raise ValueError(f"n_features and seq_len must be >= 1, got ({n_features}, {seq_len})")
    n = int(round(sigma * n_features * seq_len))
    if n < 1:
        raise ValueError(f"sigma {sigma} with {n_features} features over {seq_len} steps gives an empty context")
    return n


def raes_feasible(context_size: int, seq_len: int) -> int | None:
    """Per-step feature count when the context divides evenly, else None."""
    if context_size < 1 or seq_len < 1:
        raise ValueError(f"context_size and seq_len must be >= 1, got ({context_size}, {seq_len})")
    if context_size % seq_len != 0:
        return None
    return context_size // seq_len


@dataclass(frozen=True)
class ContextSpec:
    """Sizes shared by every variant: sequence geometry and context length."""

    seq_len: int
    n_features: int
    out_len: int
    out_features: int
    sigma: float
    context_size: int

    def __post_init__(self):
        for field in ("seq_len", "n_features", "out_len", "out_features"):
            if getattr(self, field) < 1:
                raise ValueError(f"ContextSpec.{field} must be >= 1")
        expected = context_size_from_sigma(self.sigma, self.n_features, self.seq_len)
        if self.context_size != expected:
            raise ValueError(
                f"context_size {self.context_size} does not match "
                f"round(sigma * n_features * seq_len) = {expected}"
            )

    @classmethod
    def autoencoding(cls, seq_len: int, n_features: int, sigma: float) -> "ContextSpec":
        """Spec for reconstruction runs, where the output mirrors the input."""
        return cls(
            seq_len=seq_len,
            n_features=n_features,
            out_len=seq_len,
            out_features=n_features,
            sigma=sigma,
            context_size=context_size_from_sigma(sigma, n_features, seq_len),
        )

    @property
    def step_features(self) -> int | None:
        """Features per step after the even reshape (None when indivisible)."""
        return raes_feasible(self.context_size, self.seq_len)


def transform_context(context: Tensor, seq_len: int) -> Tensor:
    """Reinterpret a flat context as seq_len steps of contiguous feature chunks.

    out[i, j] = context[i * lam + j] with lam = context_size / seq_len; a pure
    reshape, so it is a bijection and differentiable. Accepts a batched
    context [B, context_size] as well.
    """
    n = context.shape[-1]
    lam = raes_feasible(n, seq_len)
    if lam is None:
        raise ShapeError(
            f"context size {n} is not a multiple of sequence length {seq_len}; "
            "the sequence reinterpretation needs an integer per-step feature count"
        )
    if context.ndim == 1:
        return reshape(context, (seq_len, lam))
    if context.ndim == 2:
        return reshape(context, (context.shape[0], seq_len, lam))
    raise ShapeError(f"transform_context expects a vector or batch of vectors, got {context.shape}")


@lru_cache(maxsize=None)
def _stretch_matrix(context_size: int, seq_len: int) -> np.ndarray:
    """[context_size, seq_len] interpolation weights, endpoints preserved."""
    m = np.zeros((context_size, seq_len))
    if context_size == 1:
        m[0, :] = 1.0
        return m
    for t in range(seq_len):
        pos = t * (context_size - 1) / (seq_len - 1) if seq_len > 1 else 0.0
        lo = int(np.floor(pos))
        frac = pos - lo
        m[lo, t] += 1.0 - frac
        if frac > 0.0:
            m[lo + 1, t] += frac
    return m


def stretch_context(context: Tensor, seq_len: int) -> Tensor:
    """Upsample a short context to seq_len univariate steps by linear interpolation.

    Endpoints are preserved and interior gaps are filled with the linear
    average of their neighbours. Accepts a batched context [B, context_size].
    """
    n = context.shape[-1]
    if n > seq_len:
        raise ShapeError(f"stretch only upsamples: context size {n} exceeds target length {seq_len}")
    weights = Tensor(_stretch_matrix(n, seq_len))
    if context.ndim == 1:
        out = matmul(reshape(context, (1, n)), weights)
        return reshape(out, (seq_len, 1))
    if context.ndim == 2:
        out = matmul(context, weights)
        return reshape(out, (context.shape[0], seq_len, 1))
    raise ShapeError(f"stretch_context expects a vector or batch of vectors, got {context.shape}")


def raesc_feature_len(context_size: int, kernel_size: int, pool_size: int, pool_stride: int) -> int:
    """Decoder step feature count after convolution and pooling of the context."""
    conv_len = context_size - kernel_size + 1
    return (conv_len - pool_size) // pool_stride + 1


def decoder_input_features(variant: ModelVariant, context: ContextSpec) -> int:
    """Per-step decoder input size for a variant, or raise if it cannot apply."""
    if variant.kind == RAE:
        return context.context_size
    if variant.kind == RAES:
        if context.out_len != context.seq_len:
            raise ValueError("the sequence reinterpretation decodes exactly seq_len steps, so out_len must equal seq_len")
        lam = context.step_features
        if lam is None:
            raise ValueError(
                f"context size {context.context_size} is not a multiple of "
                f"sequence length {context.seq_len}"
            )
        return lam
    if variant.kind == RAESC:
        minimum = variant.kernel_size + variant.pool_size - 1
        if context.context_size < minimum:
            raise ValueError(
                f"context size {context.context_size} too small for kernel "
                f"{variant.kernel_size} and pool {variant.pool_size}; needs at least {minimum}"
            )
        return raesc_feature_len(
            context.context_size, variant.kernel_size, variant.pool_size, variant.pool_stride
        )
    if variant.kind == RAES_STRETCH:
        if context.out_len != context.seq_len:
            raise ValueError("stretched decoding produces exactly seq_len steps, so out_len must equal seq_len")
        if context.context_size > context.seq_len:
            raise ValueError(
                f"stretch only upsamples: context size {context.context_size} exceeds "
                f"sequence length {context.seq_len}"
            )
        return 1
    raise ValueError(f"unknown variant {variant.kind!r}")


def infeasibility_reason(variant: ModelVariant, context: ContextSpec) -> str | None:
    """Human-readable reason a variant cannot run on this context, or None."""
    try:
        decoder_input_features(variant, context)
    except ValueError as exc:
        return str(exc)
    return None


@dataclass
class AutoencoderModel:
    """Encoder, context transform, decoder and output head for one variant."""

    variant: ModelVariant
    context: ContextSpec
    encoder: GRULayer
    decoder: GRULayer
    head: DenseLayer
    conv: Conv1DLayer | None = None
    pool: MaxPool1D | None = None

    @classmethod
    def build(
        cls,
        variant: ModelVariant,
        context: ContextSpec,
        rng: np.random.Generator,
        decoder_hidden: int | None = None,
    ) -> "AutoencoderModel":
        """Construct fresh layers; parameters are drawn in a fixed order.

        The encoder hidden size equals the context size (the context is the
        final hidden state); the decoder hidden size defaults to the context
        size so parameter counts stay comparable across variants.
        """
        feat = decoder_input_features(variant, context)
        hidden = context.context_size if decoder_hidden is None else decoder_hidden
        encoder = GRULayer(context.n_features, context.context_size, rng)
        conv = pool = None
        if variant.kind == RAESC:
            conv = Conv1DLayer(1, context.out_len, variant.kernel_size, rng)
            pool = MaxPool1D(variant.pool_size, variant.pool_stride)
        decoder = GRULayer(feat, hidden, rng)
        head = DenseLayer(hidden, context.out_features, rng)
        model = cls(variant, context, encoder, decoder, head, conv, pool)
        for prefix, layer in model._named_layers():
            for p in layer.parameters():
                p.name = f"{prefix}.{p.name}"
        return model

    def _named_layers(self):
        layers = [("encoder", self.encoder), ("decoder", self.decoder), ("head", self.head)]
        if self.conv is not None:
            layers.insert(1, ("conv", self.conv))
        return layers

    def parameters(self) -> list[Tensor]:
        out = []
        for _, layer in self._named_layers():
            out.extend(layer.parameters())
        return out

    def forward(self, x: Tensor) -> Tensor:
        dispatch = {
            RAE: rae_forward,
            RAES: raes_forward,
            RAESC: raesc_forward,
            RAES_STRETCH: raes_stretch_forward,
        }
        return dispatch[self.variant.kind](self, x)


def _check_variant(model: AutoencoderModel, expected: str) -> None:
    if model.variant.kind != expected:
        raise ValueError(f"model variant is {model.variant.kind!r}, expected {expected!r}")


def _zeros_like_state(x: Tensor, hidden: int) -> Tensor:
    if x.ndim == 3:
        return Tensor(np.zeros((x.shape[0], hidden)))
    return Tensor(np.zeros(hidden))


def encode_context(model: AutoencoderModel, x: Tensor) -> Tensor:
    """Run the encoder; the context is its final hidden state."""
    if x.ndim not in (2, 3) or x.shape[-2] != model.context.seq_len or x.shape[-1] != model.context.n_features:
        raise ShapeError(
            f"input {x.shape} does not match [seq_len={model.context.seq_len}, "
            f"n_features={model.context.n_features}] (optionally batched)"
        )
    steps = unstack_steps(x)
    h0 = _zeros_like_state(x, model.encoder.hidden_size)
    _, context = gru_forward(model.encoder, steps, h0)
    return context


def decode_steps(model: AutoencoderModel, steps, like: Tensor) -> Tensor:
    """Run the decoder from a zero state and stack the per-step head outputs."""
    h0 = _zeros_like_state(like, model.decoder.hidden_size)
    outputs, _ = gru_forward(model.decoder, steps, h0)
    return stack_steps(time_distributed_dense(model.head, outputs))


def decoder_input_steps(model: AutoencoderModel, context: Tensor) -> list[Tensor]:
    """Turn the flat context into the decoder's input sequence for this variant."""
    kind = model.variant.kind
    spec = model.context
    if kind == RAE:
        return [context] * spec.out_len
    if kind == RAES:
        return unstack_steps(transform_context(context, spec.seq_len))
    if kind == RAESC:
        if context.ndim == 1:
            seq = reshape(context, (spec.context_size, 1))
        else:
            seq = reshape(context, (context.shape[0], spec.context_size, 1))
        responses = conv1d_forward(model.conv, seq)
        pooled = maxpool1d_forward(model.pool, responses)
        return unstack_steps(transpose_seq_channels(pooled))
    if kind == RAES_STRETCH:
        return unstack_steps(stretch_context(context, spec.seq_len))
    raise ValueError(f"unknown variant {kind!r}")


def rae_forward(model: AutoencoderModel, x: Tensor) -> Tensor:
    """Baseline decoding: the context vector is the decoder input at every step."""
    _check_variant(model, RAE)
    context = encode_context(model, x)
    return decode_steps(model, decoder_input_steps(model, context), x)


def raes_forward(model: AutoencoderModel, x: Tensor) -> Tensor:
    """Sequence decoding: the reshaped context is consumed step by step."""
    _check_variant(model, RAES)
    context = encode_context(model, x)
    return decode_steps(model, decoder_input_steps(model, context), x)


def raesc_forward(model: AutoencoderModel, x: Tensor) -> Tensor:
    """Convolutional decoding: conv + pool over the context, channels become steps."""
    _check_variant(model, RAESC)
    context = encode_context(model, x)
    return decode_steps(model, decoder_input_steps(model, context), x)


def raes_stretch_forward(model: AutoencoderModel, x: Tensor) -> Tensor:
    """Interpolated decoding: the context is stretched to one feature per step."""
    _check_variant(model, RAES_STRETCH)
    context = encode_context(model, x)
    return decode_steps(model, decoder_input_steps(model, context), x)
