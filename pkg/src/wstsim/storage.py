"""(n, k) systematic MDS erasure code over GF(256) and node repair.

GF(256) arithmetic uses the AES reduction polynomial x^8+x^4+x^3+x+1 (0x11B)
with log/exp tables built from the generator 0x03.  Shares come from the
systematic Vandermonde generator G = V * V_k^{-1}, where V[i, j] = x_i^j and
the evaluation point of node i is x_i = i + 1 (node ids run 0..n-1).  Share i
is then p(i + 1) for the unique polynomial of degree < k through the k data
chunks, shares 0..k-1 equal the data chunks themselves, and any k shares
reconstruct the file.  The padded file is split into k contiguous chunks, so
share length = ceil(padded_len / k).

Repair is functional: rebuild the file from any k helper shares, then
re-encode the lost share, which is therefore byte-identical to the original.

Serialized share format (also in the README): an 8-byte header

    magic "WS" (2) | version (1) | n (1) | k (1) | node_id (1) | pad_len (2, BE)

followed by the raw share payload.  Corruption detection is out of scope: a
tampered share decodes to a different file without any error being raised.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

_GF_POLY = 0x11B
_GF_GENERATOR = 0x03

_SHARE_MAGIC = b"WS"
_SHARE_VERSION = 1
_SHARE_HEADER = struct.Struct(">2sBBBBH")


def _build_tables() -> tuple[list[int], list[int]]:
    exp = [0] * 510
    log = [0] * 256
    v = 1
    for i in range(255):
        exp[i] = v
        log[v] = i
        v <<= 1
        if v & 0x100:
            v ^= _GF_POLY
        v ^= exp[i]  # multiply by 0x03 = x + 1
    for i in range(255, 510):
        exp[i] = exp[i - 255]
    return exp, log


_EXP, _LOG = _build_tables()


def gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return _EXP[_LOG[a] + _LOG[b]]


def gf_inv(a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("0 has no inverse in GF(256)")
    return _EXP[255 - _LOG[a]]


def gf_pow(a: int, e: int) -> int:
    if e == 0:
        return 1
    if a == 0:
        return 0
    return _EXP[(_LOG[a] * e) % 255]


@lru_cache(maxsize=None)
def _mul_table() -> np.ndarray:
    """256 x 256 product table, built lazily on first encode."""
    logs = np.array(_LOG, dtype=np.int64)
    exps = np.array(_EXP, dtype=np.uint8)
    table = exps[logs[:, None] + logs[None, :]]
    table[0, :] = 0
    table[:, 0] = 0
    return table


def _gf_matrix_inverse(m: list[list[int]]) -> list[list[int]]:
    k = len(m)
    aug = [row[:] + [1 if i == j else 0 for j in range(k)] for i, row in enumerate(m)]
    for col in range(k):
        pivot = next((r for r in range(col, k) if aug[r][col]), None)
        if pivot is None:
            raise ValueError("matrix is singular over GF(256)")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = gf_inv(aug[col][col])
        aug[col] = [gf_mul(x, inv) for x in aug[col]]
        for r in range(k):
            if r != col and aug[r][col]:
                factor = aug[r][col]
                aug[r] = [x ^ gf_mul(factor, y) for x, y in zip(aug[r], aug[col])]
    return [row[k:] for row in aug]


@lru_cache(maxsize=None)
def _generator_matrix(n: int, k: int) -> tuple[tuple[int, ...], ...]:
    vand = [[gf_pow(i + 1, j) for j in range(k)] for i in range(n)]
    vk_inv = _gf_matrix_inverse([row[:] for row in vand[:k]])
    rows = []
    for i in range(n):
        rows.append(
            tuple(
                _xor_dot(vand[i], [vk_inv[t][j] for t in range(k)]) for j in range(k)
            )
        )
    return tuple(rows)


def _xor_dot(a: list[int], b: list[int]) -> int:
    acc = 0
    for x, y in zip(a, b):
        acc ^= gf_mul(x, y)
    return acc


def _apply_rows(rows, data: np.ndarray) -> np.ndarray:
    """Multiply GF matrix rows (len-k int tuples) by data of shape (k, L)."""
    table = _mul_table()
    length = data.shape[1]
    out = np.zeros((len(rows), length), dtype=np.uint8)
    for i, row in enumerate(rows):
        acc = np.zeros(length, dtype=np.uint8)
        for coef, chunk in zip(row, data):
            if coef:
                acc ^= table[coef, chunk]
        out[i] = acc
    return out


@dataclass(frozen=True)
class StorageConfig:
    """DSS parameters: n nodes, any k reconstruct, d helpers repair.

    fragment_bits fixes the per-share payload used by the transmission
    protocol (a multiple of 8; blocks of 3m bits are cut from it, the last
    one zero-padded when 3m does not divide it).
    """

    n: int
    k: int
    d: int | None = None
    fragment_bits: int | None = None

    def __post_init__(self) -> None:
        if not 1 <= self.k <= self.n:
            raise ValueError(f"need n >= k >= 1, got n={self.n}, k={self.k}")
        if self.n > 255:
            raise ValueError("GF(256) supports at most 255 nodes")
        if self.d is not None and not self.k <= self.d <= self.n - 1:
            raise ValueError(f"repair degree must satisfy k <= d <= n-1, got d={self.d}")
        if self.fragment_bits is not None and (
            self.fragment_bits <= 0 or self.fragment_bits % 8
        ):
            raise ValueError("fragment_bits must be a positive multiple of 8")


@dataclass(frozen=True)
class NodeContent:
    """One node's share.  pad_len is the file-level padding byte count; it is
    identical across the shares of one file and travels with them so that
    reconstruction needs no out-of-band state."""

    node_id: int
    fragment: bytes
    pad_len: int = 0


def mds_encode(file: bytes, cfg: StorageConfig) -> list[NodeContent]:
    """Encode a file into n shares; any k of them reconstruct it."""
    pad_len = (-len(file)) % cfg.k
    padded = file + b"\0" * pad_len
    length = len(padded) // cfg.k
    data = np.frombuffer(padded, dtype=np.uint8).reshape(cfg.k, length)
    shares = _apply_rows(_generator_matrix(cfg.n, cfg.k), data)
    return [NodeContent(i, shares[i].tobytes(), pad_len) for i in range(cfg.n)]


def mds_reconstruct(shares: list[NodeContent], cfg: StorageConfig) -> bytes:
    """Rebuild the exact file from any >= k distinct shares.

    Deterministic: the k shares with the smallest node ids are used.
    """
    by_id = {}
    for s in shares:
        if not 0 <= s.node_id < cfg.n:
            raise ValueError(f"node id {s.node_id} out of range for n={cfg.n}")
        by_id.setdefault(s.node_id, s)
    if len(by_id) < cfg.k:
        raise ValueError(f"need at least k={cfg.k} distinct shares, got {len(by_id)}")
    chosen = [by_id[i] for i in sorted(by_id)[: cfg.k]]
    lengths = {len(s.fragment) for s in chosen}
    pads = {s.pad_len for s in chosen}
    if len(lengths) != 1 or len(pads) != 1:
        raise ValueError("inconsistent share lengths or padding metadata")
    gen = _generator_matrix(cfg.n, cfg.k)
    sub = [list(gen[s.node_id]) for s in chosen]
    inv = _gf_matrix_inverse(sub)
    stacked = np.stack(
        [np.frombuffer(s.fragment, dtype=np.uint8) for s in chosen]
    )
    data = _apply_rows([tuple(r) for r in inv], stacked)
    padded = data.tobytes()
    pad_len = chosen[0].pad_len
    return padded[: len(padded) - pad_len] if pad_len else padded


def repair_node(lost: int, helpers: list[NodeContent], cfg: StorageConfig) -> NodeContent:
    """Regenerate the lost share exactly from >= k helper shares."""
    if not 0 <= lost < cfg.n:
        raise ValueError(f"node id {lost} out of range for n={cfg.n}")
    if any(h.node_id == lost for h in helpers):
        raise ValueError("helpers must not include the lost node")
    file = mds_reconstruct(helpers, cfg)
    return mds_encode(file, cfg)[lost]


def share_to_bytes(share: NodeContent, cfg: StorageConfig) -> bytes:
    """Serialize one share with the 8-byte header described above."""
    if not 0 <= share.pad_len < cfg.k:
        raise ValueError("pad_len must lie in [0, k)")
    header = _SHARE_HEADER.pack(
        _SHARE_MAGIC, _SHARE_VERSION, cfg.n, cfg.k, share.node_id, share.pad_len
    )
    return header + share.fragment


def share_from_bytes(blob: bytes) -> tuple[NodeContent, int, int]:
    """Parse a serialized share; returns (share, n, k)."""
    if len(blob) < _SHARE_HEADER.size:
        raise ValueError("share blob shorter than its header")
    magic, version, n, k, node_id, pad_len = _SHARE_HEADER.unpack_from(blob)
    if magic != _SHARE_MAGIC:
        raise ValueError(f"bad share magic {magic!r}")
    if version != _SHARE_VERSION:
        raise ValueError(f"unsupported share version {version}")
    if not (1 <= k <= n and node_id < n and pad_len < k):
        raise ValueError("inconsistent share header fields")
    return NodeContent(node_id, blob[_SHARE_HEADER.size :], pad_len), n, k
