"""Per-session space-time code matrices and the vectorized linear system.

Each active helper transmits the three real embeddings of its lattice point
over T = 3 channel uses, one row per helper, so a pair session sends

    [ sigma_0(x_1)  sigma_1(x_1)  sigma_2(x_1) ]
    [ sigma_0(x_2)  sigma_1(x_2)  sigma_2(x_2) ]

and a single-helper (TDMA or leftover) session sends just one such row.
Rows are scaled by a constellation-wide normalizer so the codebook averages
unit energy per transmit antenna per channel use; with unit-variance noise
the channel module's sqrt(SNR) scaling then makes received SNR comparisons
between schemes fair.

In dispersion form the codeword is X = sum_{k,l} x_{k,l} C_{k,l} with
Gaussian-integer symbols x_{k,l} (the QAM coordinates) and fixed basis rows
C_{k,l} given by the embeddings of the basis elements {1, eta, eta^2}.
Stacking the receive samples column-major turns a session into the linear
system y = H x whose column (k, l) is vec(H_k C_{k,l}); columns are ordered
user-major, then basis index, matching x = [x_{1,1} .. x_{1,s} .. x_{K,s}].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .algebra import ETA, ONE, ROOTS, embed
from .lift import LatticePoint, pam_levels

#: basis elements whose embeddings form the dispersion rows, in symbol order
_BASIS_ELEMENTS = (ONE, ETA, ETA * ETA)


def average_row_energy(m: int) -> float:
    """Mean squared norm per channel use of one unnormalized codeword row.

    QAM coordinates are independent and zero-mean, so the constellation
    average separates into the per-axis QAM power times the mean of
    1 + rho^2 + rho^4 over the three embeddings.  The lift module's tests
    reproduce this value by exhaustive enumeration.
    """
    order = 1 << (m // 2)
    qam_power = 2.0 * (order * order - 1) / 3.0
    basis_power = sum(1.0 + r * r + r**4 for r in ROOTS) / 3.0
    return qam_power * basis_power


def normalizer(m: int) -> float:
    """Row scale factor making average energy 1 per antenna per channel use."""
    return 1.0 / math.sqrt(average_row_energy(m))


@dataclass(frozen=True, eq=False)
class CodeMatrix:
    """A transmit matrix: k_active stacked single-antenna rows over T uses."""

    entries: np.ndarray
    k_active: int

    def __post_init__(self) -> None:
        if self.entries.shape[0] != self.k_active:
            raise ValueError("one row per active single-antenna helper expected")

    @property
    def T(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True, eq=False)
class DispersionBasis:
    """Fixed basis matrices C_{k,l}: per user, one n_t x T matrix per symbol."""

    matrices: tuple[tuple[np.ndarray, ...], ...]
    s: int
    T: int

    @property
    def k_active(self) -> int:
        return len(self.matrices)


@lru_cache(maxsize=None)
def dispersion_basis(m: int, k_active: int) -> DispersionBasis:
    """Basis for k_active helpers on the 2^m-QAM constellation.

    C_{k,l} is the normalized 1 x 3 embedding row of the l-th basis element;
    the user index only dictates which antenna row it occupies when stacked.
    """
    pam_levels(m)  # validates m
    alpha = normalizer(m)
    row_for = tuple(
        alpha * np.array([[embed(b, j) for j in range(3)]], dtype=complex)
        for b in _BASIS_ELEMENTS
    )
    per_user = tuple(tuple(r.copy() for r in row_for) for _ in range(k_active))
    return DispersionBasis(per_user, s=3, T=3)


def build_pair_codeword(p1: LatticePoint, p2: LatticePoint, m: int) -> CodeMatrix:
    """2 x 3 codeword of a pair session: row j is helper j's embedded row."""
    alpha = normalizer(m)
    rows = np.array([p1.embedded_row, p2.embedded_row], dtype=complex)
    return CodeMatrix(alpha * rows, k_active=2)


def build_tdma_codeword(p: LatticePoint, m: int) -> CodeMatrix:
    """1 x 3 codeword of a single-helper session (TDMA / odd-K leftover)."""
    alpha = normalizer(m)
    return CodeMatrix(alpha * np.array([p.embedded_row], dtype=complex), k_active=1)


@dataclass(frozen=True, eq=False)
class EquivalentChannel:
    """Flattened system matrix H with y = H x, shape (n_r*T, k_active*s)."""

    matrix: np.ndarray
    k_active: int
    s: int
    n_r: int
    T: int


def build_equivalent_channel(
    channels: Sequence[np.ndarray], basis: DispersionBasis
) -> EquivalentChannel:
    """Column (k, l) is the column-major vectorization of H_k C_{k,l}."""
    if len(channels) != basis.k_active:
        raise ValueError(
            f"expected {basis.k_active} per-user channels, got {len(channels)}"
        )
    mats = [np.asarray(h, dtype=complex) for h in channels]
    n_t = basis.matrices[0][0].shape[0]
    n_r = mats[0].shape[0]
    for h in mats:
        if h.shape != (n_r, n_t):
            raise ValueError(f"channel shape {h.shape} != ({n_r}, {n_t})")
    cols = [
        (mats[k] @ basis.matrices[k][l]).reshape(-1, order="F")
        for k in range(basis.k_active)
        for l in range(basis.s)
    ]
    return EquivalentChannel(
        np.column_stack(cols), k_active=basis.k_active, s=basis.s, n_r=n_r, T=basis.T
    )


def realify(H, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Expand a complex system to a real one over integer PAM coordinates.

    Every complex entry h becomes the 2x2 block [[Re h, -Im h], [Im h, Re h]]
    and every complex sample splits into adjacent (re, im) coordinates, so
    real coordinates 2j and 2j+1 are the real and imaginary parts of complex
    symbol j.
    """
    mat = np.asarray(H.matrix if isinstance(H, EquivalentChannel) else H, dtype=complex)
    vec = np.asarray(y, dtype=complex).reshape(-1)
    rows, cols = mat.shape
    if vec.shape[0] != rows:
        raise ValueError(f"observation length {vec.shape[0]} != {rows} rows")
    out = np.empty((2 * rows, 2 * cols))
    out[0::2, 0::2] = mat.real
    out[0::2, 1::2] = -mat.imag
    out[1::2, 0::2] = mat.imag
    out[1::2, 1::2] = mat.real
    obs = np.empty(2 * rows)
    obs[0::2] = vec.real
    obs[1::2] = vec.imag
    return out, obs


def sphere_decodable(s: int, T: int, n_r: int, K: int) -> bool:
    """True iff the session's linear system is square-or-tall: n_r*T >= K*s."""
    if min(s, T, n_r, K) < 1:
        raise ValueError("all parameters must be positive")
    return n_r * T >= K * s
