"""Seeded synthetic signal datasets with an 80:20 train/validation split.

Each feature channel is an independent sum of random sinusoids (amplitude,
whole-cycle count and phase drawn from one seeded generator) rescaled so the
channel's largest magnitude is exactly 1. The generator, the shuffle and the
batching are all pure functions of their configuration and seeds.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .tensor import Tensor

__all__ = [
    "SignalConfig",
    "Dataset",
    "generate_dataset",
    "shuffle_split",
    "batches",
    "save_dataset",
    "load_dataset",
]

_FILE_TAG = "raes-dataset"
_FILE_VERSION = "v1"


@dataclass(frozen=True)
class SignalConfig:
    n_sequences: int = 5000
    seq_len: int = 200
    n_features: int = 1
    components_per_feature: int = 3
    seed: int = 0

    def __post_init__(self):
        for field in ("n_sequences", "seq_len", "n_features", "components_per_feature"):
            if getattr(self, field) < 1:
                raise ValueError(f"SignalConfig.{field} must be >= 1")


@dataclass
class Dataset:
    """Signal array [n_sequences, seq_len, n_features] plus split index lists."""

    sequences: np.ndarray
    train_indices: np.ndarray
    val_indices: np.ndarray
    seed: int = 0

    @property
    def n_sequences(self) -> int:
        return self.sequences.shape[0]

    @property
    def seq_len(self) -> int:
        return self.sequences.shape[1]

    @property
    def n_features(self) -> int:
        return self.sequences.shape[2]


def _default_split(n: int) -> tuple[np.ndarray, np.ndarray]:
    cut = n * 4 // 5
    idx = np.arange(n)
    return idx[:cut], idx[cut:]


def generate_dataset(cfg: SignalConfig) -> Dataset:
    """Draw the signal collection; deterministic in the config's seed.

    Per channel: components_per_feature sinusoids with amplitude ~ U(0.5, 1),
    an integer number of cycles ~ U{1..10} over the window and phase
    ~ U(0, 2*pi), summed and rescaled by the channel's own max magnitude.
    The split starts as the unshuffled first-80% assignment; use
    :func:`shuffle_split` for a randomized one.
    """
    rng = np.random.default_rng(cfg.seed)
    n, length, feats, comps = cfg.n_sequences, cfg.seq_len, cfg.n_features, cfg.components_per_feature
    amps = rng.uniform(0.5, 1.0, size=(n, feats, comps))
    cycles = rng.integers(1, 11, size=(n, feats, comps))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(n, feats, comps))
    t = np.arange(length) / length
    signals = np.zeros((n, feats, length))
    for c in range(comps):
        signals += amps[:, :, c, None] * np.sin(
            2.0 * np.pi * cycles[:, :, c, None] * t + phases[:, :, c, None]
        )
    peak = np.abs(signals).max(axis=2, keepdims=True)
    signals /= np.where(peak > 0.0, peak, 1.0)
    sequences = np.ascontiguousarray(signals.transpose(0, 2, 1))
    train_idx, val_idx = _default_split(n)
    return Dataset(sequences, train_idx, val_idx, seed=cfg.seed)


def shuffle_split(dataset: Dataset, seed: int) -> Dataset:
    """Assign a fresh uniformly shuffled 80:20 split; the data is shared."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(dataset.n_sequences)
    cut = dataset.n_sequences * 4 // 5
    return Dataset(dataset.sequences, perm[:cut], perm[cut:], seed=dataset.seed)


def batches(dataset: Dataset, which: str, batch_size: int) -> list[Tensor]:
    """Contiguous chunks of one split, in index order; the last may be partial."""
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    if which == "train":
        idx = dataset.train_indices
    elif which == "val":
        idx = dataset.val_indices
    else:
        raise ValueError(f"which must be 'train' or 'val', got {which!r}")
    return [
        Tensor(dataset.sequences[idx[i : i + batch_size]])
        for i in range(0, len(idx), batch_size)
    ]


def save_dataset(dataset: Dataset, path) -> None:
    """Write the portable text format: a header line, then one CSV line of
    feature values per (sequence, time step), 9 significant digits."""
    path = Path(path)
    n, length, feats = dataset.sequences.shape
    with path.open("w") as fh:
        fh.write(f"{_FILE_TAG} {_FILE_VERSION} {n} {length} {feats} {dataset.seed}\n")
        for s in range(n):
            for t in range(length):
                fh.write(",".join(format(v, ".9g") for v in dataset.sequences[s, t]) + "\n")


def load_dataset(path) -> Dataset:
    """Read the text format back, validating the declared shape.

    The file stores no split; the loaded dataset gets the default unshuffled
    assignment (re-split with :func:`shuffle_split` as needed).
    """
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().split()
        if len(header) != 6 or header[0] != _FILE_TAG or header[1] != _FILE_VERSION:
            raise ValueError(f"{path}: not a {_FILE_TAG} {_FILE_VERSION} file")
        n, length, feats, seed = (int(x) for x in header[2:])
        values = np.empty((n * length, feats))
        row = 0
        for line in fh:
            if row >= n * length:
                raise ValueError(f"{path}: more data lines than the declared {n}x{length}")
            parts = line.split(",")
            if len(parts) != feats:
                raise ValueError(f"{path}: line {row + 2} has {len(parts)} values, expected {feats}")
            values[row] = [float(p) for p in parts]
            row += 1
        if row != n * length:
            raise ValueError(f"{path}: {row} data lines, expected {n * length}")
    sequences = values.reshape(n, length, feats)
    train_idx, val_idx = _default_split(n)
    return Dataset(sequences, train_idx, val_idx, seed=seed)
