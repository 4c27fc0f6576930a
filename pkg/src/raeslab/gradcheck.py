"""Finite-difference verification of every differentiable building block.

Analytic gradients from the tape are compared against central differences
(step 1e-5) with the relative error |analytic - numeric| / max(1, |numeric|).
The numeric side only re-evaluates forward passes, so it is independent of
the backward implementation it checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import models
from .layers import (
    Conv1DLayer,
    DenseLayer,
    GRULayer,
    MaxPool1D,
    conv1d_forward,
    gru_forward,
    gru_step,
    maxpool1d_forward,
    time_distributed_dense,
    transpose_seq_channels,
)
from .optim import mse_loss
from .tensor import (
    Tape,
    Tensor,
    backward,
    mean_all,
    mul,
    reshape,
    sigmoid,
    stack_steps,
    sum_all,
    tanh_op,
    zero_grads,
)

__all__ = ["check_gradients", "max_relative_error", "CheckResult", "default_suite"]

STEP = 1e-5
TOLERANCE = 1e-4


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    err = np.abs(analytic - numeric) / np.maximum(1.0, np.abs(numeric))
    return float(err.max()) if err.size else 0.0


def check_gradients(build_loss, tensors, step: float = STEP) -> float:
    """Worst relative error between tape and central-difference gradients.

    ``build_loss`` must return a scalar Tensor computed from the current
    values of ``tensors`` (re-invoked for every perturbation).
    """
    tensors = list(tensors)
    zero_grads(tensors)
    with Tape() as tape:
        loss = build_loss()
        backward(tape, loss)
    analytic = [np.zeros_like(t.data) if t.grad is None else t.grad.copy() for t in tensors]

    worst = 0.0
    for t, ga in zip(tensors, analytic):
        flat = t.data.reshape(-1)
        numeric = np.zeros_like(flat)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + step
            up = float(build_loss().data)
            flat[i] = keep - step
            down = float(build_loss().data)
            flat[i] = keep
            numeric[i] = (up - down) / (2.0 * step)
        worst = max(worst, max_relative_error(ga.reshape(-1), numeric))
    return worst


@dataclass
class CheckResult:
    name: str
    max_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_error < self.tolerance


def _rand(rng, *shape) -> Tensor:
    return Tensor(rng.uniform(-1.0, 1.0, size=shape), requires_grad=True)


def _check_core_ops(rng) -> float:
    x = _rand(rng, 3, 4)
    w = _rand(rng, 4, 3)

    def build():
        y = tanh_op(x @ w)
        z = sigmoid(reshape(y, (9,)))
        s = stack_steps([z, mul(z, z), 1.0 - z])
        return mean_all(mul(s, s))

    return check_gradients(build, [x, w])


def _check_dense(rng) -> float:
    layer = DenseLayer(int(rng.integers(1, 5)), int(rng.integers(1, 5)), rng)
    steps = [_rand(rng, 2, layer.in_features) for _ in range(int(rng.integers(1, 5)))]
    r = Tensor(rng.uniform(-1.0, 1.0, size=(2, len(steps), layer.out_features)))

    def build():
        outs = time_distributed_dense(layer, steps)
        return sum_all(mul(stack_steps(outs), r))

    return check_gradients(build, layer.parameters() + steps)


def _check_gru_step(rng) -> float:
    layer = GRULayer(int(rng.integers(1, 5)), int(rng.integers(1, 7)), rng)
    x = _rand(rng, 2, layer.input_size)
    h = _rand(rng, 2, layer.hidden_size)
    r = Tensor(rng.uniform(-1.0, 1.0, size=(2, layer.hidden_size)))

    def build():
        return sum_all(mul(gru_step(layer, x, h), r))

    return check_gradients(build, layer.parameters() + [x, h])


def _check_gru_forward(rng) -> float:
    layer = GRULayer(int(rng.integers(1, 4)), int(rng.integers(1, 6)), rng)
    steps = [_rand(rng, layer.input_size) for _ in range(int(rng.integers(1, 8)))]
    h0 = Tensor(np.zeros(layer.hidden_size))
    r = Tensor(rng.uniform(-1.0, 1.0, size=(layer.hidden_size, len(steps))))

    def build():
        outs, _ = gru_forward(layer, steps, h0)
        return sum_all(mul(stack_steps(outs), Tensor(r.data.T)))

    return check_gradients(build, layer.parameters() + steps)


def _check_conv1d(rng) -> float:
    in_ch = int(rng.integers(1, 4))
    kernel = int(rng.integers(1, 4))
    filters = int(rng.integers(1, 4))
    length = kernel + int(rng.integers(0, 5))
    layer = Conv1DLayer(in_ch, filters, kernel, rng)
    layer.b.data[:] = rng.uniform(-0.5, 0.5, size=filters)
    seq = _rand(rng, length, in_ch)
    r = Tensor(rng.uniform(-1.0, 1.0, size=(length - kernel + 1, filters)))

    def build():
        return sum_all(mul(conv1d_forward(layer, seq), r))

    return check_gradients(build, layer.parameters() + [seq])


def _check_maxpool(rng) -> float:
    pool = MaxPool1D(int(rng.integers(1, 4)), int(rng.integers(1, 4)))
    channels = int(rng.integers(1, 4))
    length = pool.pool_size + int(rng.integers(0, 6))
    # well-separated values: ties or near-ties would break finite differences
    vals = np.linspace(-1.0, 1.0, length * channels)
    seq = Tensor(rng.permutation(vals).reshape(length, channels), requires_grad=True)
    out_len = (length - pool.pool_size) // pool.stride + 1
    r = Tensor(rng.uniform(-1.0, 1.0, size=(out_len, channels)))

    def build():
        return sum_all(mul(maxpool1d_forward(pool, seq), r))

    return check_gradients(build, [seq])


def _check_transpose(rng) -> float:
    seq = _rand(rng, int(rng.integers(1, 6)), int(rng.integers(1, 6)))
    r = Tensor(rng.uniform(-1.0, 1.0, size=seq.shape[::-1]))

    def build():
        return sum_all(mul(transpose_seq_channels(seq), r))

    return check_gradients(build, [seq])


def _toy_context(kind: str, rng) -> tuple[models.ModelVariant, models.ContextSpec]:
    if kind == models.RAE:
        variant = models.ModelVariant(models.RAE)
        spec = models.ContextSpec.autoencoding(seq_len=4, n_features=1, sigma=1.25)
    elif kind == models.RAES:
        variant = models.ModelVariant(models.RAES)
        spec = models.ContextSpec.autoencoding(seq_len=4, n_features=1, sigma=2.0)
    elif kind == models.RAESC:
        variant = models.ModelVariant(models.RAESC, kernel_size=2, pool_size=2, pool_stride=2)
        spec = models.ContextSpec.autoencoding(seq_len=4, n_features=1, sigma=1.5)
    else:
        variant = models.ModelVariant(models.RAES_STRETCH)
        spec = models.ContextSpec.autoencoding(seq_len=4, n_features=1, sigma=0.75)
    return variant, spec


def _check_model(kind: str, rng) -> float:
    variant, spec = _toy_context(kind, rng)
    model = models.AutoencoderModel.build(variant, spec, rng)
    x = Tensor(rng.uniform(-1.0, 1.0, size=(2, spec.seq_len, spec.n_features)))
    target = rng.uniform(-1.0, 1.0, size=(2, spec.out_len, spec.out_features))

    def build():
        return mse_loss(model.forward(x), target)

    return check_gradients(build, model.parameters())


def default_suite(instances: int = 10, seed: int = 2024) -> list[CheckResult]:
    """Run every check ``instances`` times; worst error per check is reported."""
    named = [
        ("core-ops", _check_core_ops),
        ("dense-head", _check_dense),
        ("gru-step", _check_gru_step),
        ("gru-sequence", _check_gru_forward),
        ("conv1d", _check_conv1d),
        ("maxpool1d", _check_maxpool),
        ("transpose", _check_transpose),
        ("rae-full", lambda r: _check_model(models.RAE, r)),
        ("raes-full", lambda r: _check_model(models.RAES, r)),
        ("raesc-full", lambda r: _check_model(models.RAESC, r)),
        ("raes-stretch-full", lambda r: _check_model(models.RAES_STRETCH, r)),
    ]
    results = []
    for name, fn in named:
        worst = 0.0
        for k in range(instances):
            rng = np.random.default_rng([seed, k] + [ord(c) for c in name])
            worst = max(worst, fn(rng))
        results.append(CheckResult(name, worst, TOLERANCE))
    return results
