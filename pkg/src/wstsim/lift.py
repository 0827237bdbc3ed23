"""Bit fragments <-> transmit constellation.

A fragment of 3*m bits is chunked in order into three m-bit blocks.  Each
block is Gray-mapped onto a square 2^m-QAM symbol: the first m/2 bits select
the in-phase level through the reflected binary Gray code over the odd
levels -(M-1), ..., M-1 (ascending, M = 2^(m/2)), the last m/2 bits select
the quadrature level the same way.  The three QAM symbols then become the
basis coefficients of the field element x = q1 + q2*eta + q3*eta^2, and the
transmitted row is the triple of real embeddings of x.  Every step is exact
and invertible, so the composite map is a bijection between {0,1}^(3m) and
the 2^(3m)-point constellation.
"""

from __future__ import annotations

from dataclasses import dataclass

from .algebra import FieldElement, GaussianInt, embed


def _check_m(m: int) -> None:
    if not isinstance(m, int) or m < 2 or m % 2:
        raise ValueError(f"m must be an even integer >= 2, got {m!r}")


def pam_levels(m: int) -> tuple[int, ...]:
    """Odd per-axis amplitudes of square 2^m-QAM: -(M-1), ..., M-1."""
    _check_m(m)
    levels = 1 << (m // 2)
    return tuple(range(-(levels - 1), levels, 2))


def _gray_rank(bits: str) -> int:
    """Position of a reflected-Gray word in the Gray sequence."""
    n = int(bits, 2)
    mask = n >> 1
    while mask:
        n ^= mask
        mask >>= 1
    return n


def _gray_word(rank: int, width: int) -> str:
    return format(rank ^ (rank >> 1), f"0{width}b")


def _check_bits(bits: str) -> None:
    if not bits or set(bits) - {"0", "1"}:
        raise ValueError(f"expected a nonempty string of 0/1, got {bits!r}")


@dataclass(frozen=True)
class QamSymbol:
    """One Gray-labelled 2^m-QAM symbol; both coordinates odd and in range."""

    value: GaussianInt
    m: int

    def __post_init__(self) -> None:
        _check_m(self.m)
        bound = (1 << (self.m // 2)) - 1
        for c in (self.value.re, self.value.im):
            if c % 2 == 0 or abs(c) > bound:
                raise ValueError(
                    f"{self.value!r} is not a {1 << self.m}-QAM symbol "
                    f"(coordinates must be odd with magnitude <= {bound})"
                )


def gray_encode(bits: str) -> QamSymbol:
    """Map an m-bit string to a QAM symbol (in-phase bits first)."""
    _check_bits(bits)
    m = len(bits)
    _check_m(m)
    half = m // 2
    top = (1 << half) - 1
    i_level = 2 * _gray_rank(bits[:half]) - top
    q_level = 2 * _gray_rank(bits[half:]) - top
    return QamSymbol(GaussianInt(i_level, q_level), m)


def gray_decode(q: QamSymbol) -> str:
    """Exact inverse of gray_encode."""
    half = q.m // 2
    top = (1 << half) - 1
    return _gray_word((q.value.re + top) // 2, half) + _gray_word(
        (q.value.im + top) // 2, half
    )


@dataclass(frozen=True)
class Fragment:
    """An encoded-share chunk of exactly 3*m bits (one lattice point)."""

    bits: str
    m: int

    def __post_init__(self) -> None:
        _check_m(self.m)
        _check_bits(self.bits)
        if len(self.bits) != 3 * self.m:
            raise ValueError(
                f"fragment must hold 3*m = {3 * self.m} bits, got {len(self.bits)}"
            )

    @classmethod
    def of(cls, bits: str) -> Fragment:
        """Build a fragment inferring m = len(bits) / 3."""
        _check_bits(bits)
        if len(bits) % 3:
            raise ValueError(f"fragment length must be a multiple of 3, got {len(bits)}")
        return cls(bits, len(bits) // 3)


@dataclass(frozen=True)
class LatticePoint:
    """A constellation point: field element plus its three embeddings."""

    element: FieldElement
    embedded_row: tuple[complex, complex, complex]

    @classmethod
    def from_element(cls, element: FieldElement) -> LatticePoint:
        return cls(element, tuple(embed(element, j) for j in range(3)))


def lift(frag: Fragment) -> LatticePoint:
    """Lift a fragment onto the lattice: (b1, b2, b3) -> q1 + q2*eta + q3*eta^2."""
    m = frag.m
    q = [gray_encode(frag.bits[i * m : (i + 1) * m]).value for i in range(3)]
    return LatticePoint.from_element(FieldElement(q[0], q[1], q[2]))


def unlift(point: LatticePoint, m: int) -> Fragment:
    """Exact inverse of lift for the 2^m-QAM constellation.

    A coefficient outside the constellation raises ValueError: the decoder
    contract guarantees in-alphabet coordinates, so that signals a bug
    upstream rather than channel noise.
    """
    parts = [gray_decode(QamSymbol(c, m)) for c in point.element.coefficients()]
    return Fragment("".join(parts), m)


def random_fragment(rng, m: int) -> Fragment:
    """Draw a uniformly random fragment from a numpy Generator."""
    _check_m(m)
    draws = rng.integers(0, 2, size=3 * m)
    return Fragment("".join("1" if b else "0" for b in draws), m)
