"""Block-Rayleigh multiple-access channel with reproducible substreams.

Model: Y = sqrt(snr_linear) * sum_k H_k X_k + W, with H_k an n_r x n_t
matrix of i.i.d. unit-variance circularly-symmetric complex Gaussians held
constant over the T channel uses of one session (independent across
sessions), and W unit-variance complex Gaussian noise.  Codebooks are
normalized to unit average energy per transmit antenna per channel use, so
the received signal-to-noise ratio per receive antenna per channel use is
snr_linear * n_t * K_active.

Randomness: Philox counter substreams.  trial_rng(master_seed, *path) keys
the generator with the 64-bit master seed and places the path words (trial
index, grid index, ...) in the upper counter words, so distinct paths get
non-overlapping streams and every draw is a pure function of
(master_seed, path) no matter the execution order or worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def trial_rng(master_seed: int, *path: int) -> np.random.Generator:
    """Counter-based substream for one trial (up to three path words)."""
    seed = int(master_seed)
    if not 0 <= seed < 2**64:
        raise ValueError("master seed must fit in 64 bits")
    if len(path) > 3:
        raise ValueError("at most three path words are supported")
    counter = [0, 0, 0, 0]
    for i, word in enumerate(path, start=1):
        word = int(word)
        if not 0 <= word < 2**64:
            raise ValueError("path words must fit in 64 bits")
        counter[i] = word
    return np.random.Generator(np.random.Philox(key=seed, counter=counter))


def draw_cn(rng: np.random.Generator, shape) -> np.ndarray:
    """i.i.d. CN(0, 1) samples: E[|z|^2] = 1, independent re/im parts."""
    z = rng.standard_normal(size=(*shape, 2))
    return (z[..., 0] + 1j * z[..., 1]) / math.sqrt(2.0)


@dataclass(frozen=True)
class SnrPoint:
    snr_db: float

    @property
    def snr_linear(self) -> float:
        return 10.0 ** (self.snr_db / 10.0)


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """Per-user fading matrices, shape (k_active, n_r, n_t)."""

    per_user: np.ndarray


@dataclass(frozen=True, eq=False)
class NoiseBlock:
    """Additive noise for one session, shape (n_r, T)."""

    w: np.ndarray


def draw_session(
    rng: np.random.Generator, n_r: int, n_t: int, k_active: int, T: int
) -> tuple[ChannelRealization, NoiseBlock]:
    """Fresh fading and noise for one session (channel first, then noise)."""
    if min(n_r, n_t, k_active, T) < 1:
        raise ValueError("all dimensions must be positive")
    h = draw_cn(rng, (k_active, n_r, n_t))
    w = draw_cn(rng, (n_r, T))
    return ChannelRealization(h), NoiseBlock(w)


def zero_noise(n_r: int, T: int) -> NoiseBlock:
    """All-zero noise block, for forced-noiseless pipeline checks."""
    return NoiseBlock(np.zeros((n_r, T), dtype=complex))


def transmit(X, chan: ChannelRealization, noise: NoiseBlock, snr: SnrPoint) -> np.ndarray:
    """Received matrix Y = sqrt(snr) * sum_k H_k X_k + W, shape (n_r, T)."""
    per_user = chan.per_user
    k, n_r, n_t = per_user.shape
    entries = X.entries
    if X.k_active != k or entries.shape[0] != k * n_t:
        raise ValueError(
            f"codeword rows {entries.shape[0]} do not match {k} users x {n_t} antennas"
        )
    if noise.w.shape != (n_r, entries.shape[1]):
        raise ValueError(f"noise shape {noise.w.shape} != ({n_r}, {entries.shape[1]})")
    h_all = per_user.transpose(1, 0, 2).reshape(n_r, k * n_t)
    return math.sqrt(snr.snr_linear) * (h_all @ entries) + noise.w
