"""Exact arithmetic in the degree-3 cyclic field behind the transmit lattice.

The field is generated over Q(i) by eta = 2*cos(2*pi/7), whose minimal
polynomial over the rationals is the monic cubic

    p(x) = x^3 + x^2 - 2x - 1.

The cubic is a derived constant rather than a quoted one: the test suite
checks |p(2*cos(2*pi*k/7))| < 1e-12 for k = 1, 2, 3 and cross-checks every
reduction identity against floating-point arithmetic on the embeddings.
Elements are stored on the basis {1, eta, eta^2} with Gaussian-integer
coefficients (the representation is canonical, so equality is
coefficient-wise), and products reduce through

    eta^3 = 1 + 2*eta - eta^2,        eta^4 = -1 - eta + 3*eta^2.

The Galois group is cyclic of order 3, generated by

    tau: eta -> eta^2 - 2,

and the three real embeddings send eta to

    rho_0 = 2*cos(2*pi/7) > rho_1 = 2*cos(4*pi/7) > rho_2 = 2*cos(6*pi/7).

With this ordering tau shifts embedding indices cyclically:
sigma_j(tau(x)) = sigma_{(j+1) mod 3}(x), which is what lines the columns of
a code matrix up with embedding indices.

Coefficients are Python ints, which are exact and unbounded, so coefficient
arithmetic cannot overflow or silently wrap.  All values are immutable and
every function is pure, hence safe under any degree of concurrency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Minimal polynomial of eta, descending coefficients: x^3 + x^2 - 2x - 1.
MIN_POLY = (1, 1, -2, -1)

# Real embeddings of eta, ordered rho_0 > rho_1 > rho_2; embedding j sends
# eta to ROOTS[j].
ROOTS = (
    2.0 * math.cos(2.0 * math.pi / 7.0),
    2.0 * math.cos(4.0 * math.pi / 7.0),
    2.0 * math.cos(6.0 * math.pi / 7.0),
)


def min_poly_value(t: float) -> float:
    """Evaluate the minimal polynomial at t (Horner form)."""
    a3, a2, a1, a0 = MIN_POLY
    return ((a3 * t + a2) * t + a1) * t + a0


@dataclass(frozen=True)
class GaussianInt:
    """Exact complex integer re + im*i."""

    re: int = 0
    im: int = 0

    def __post_init__(self) -> None:
        if not isinstance(self.re, int) or not isinstance(self.im, int):
            raise TypeError("GaussianInt components must be Python ints")

    def __add__(self, other: GaussianInt) -> GaussianInt:
        return GaussianInt(self.re + other.re, self.im + other.im)

    def __sub__(self, other: GaussianInt) -> GaussianInt:
        return GaussianInt(self.re - other.re, self.im - other.im)

    def __neg__(self) -> GaussianInt:
        return GaussianInt(-self.re, -self.im)

    def __mul__(self, other: GaussianInt | int) -> GaussianInt:
        if isinstance(other, GaussianInt):
            return GaussianInt(
                self.re * other.re - self.im * other.im,
                self.re * other.im + self.im * other.re,
            )
        if isinstance(other, int):
            return GaussianInt(self.re * other, self.im * other)
        return NotImplemented

    def __rmul__(self, other: int) -> GaussianInt:
        if isinstance(other, int):
            return GaussianInt(self.re * other, self.im * other)
        return NotImplemented

    def conj(self) -> GaussianInt:
        return GaussianInt(self.re, -self.im)

    def __bool__(self) -> bool:
        return bool(self.re or self.im)

    def __complex__(self) -> complex:
        return complex(self.re, self.im)


def _as_gaussian(v: GaussianInt | int) -> GaussianInt:
    if isinstance(v, GaussianInt):
        return v
    if isinstance(v, int):
        return GaussianInt(v, 0)
    raise TypeError(f"cannot coerce {type(v).__name__} to GaussianInt")


@dataclass(frozen=True)
class FieldElement:
    """c0 + c1*eta + c2*eta^2 with Gaussian-integer coefficients."""

    c0: GaussianInt = GaussianInt(0, 0)
    c1: GaussianInt = GaussianInt(0, 0)
    c2: GaussianInt = GaussianInt(0, 0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "c0", _as_gaussian(self.c0))
        object.__setattr__(self, "c1", _as_gaussian(self.c1))
        object.__setattr__(self, "c2", _as_gaussian(self.c2))

    def coefficients(self) -> tuple[GaussianInt, GaussianInt, GaussianInt]:
        return (self.c0, self.c1, self.c2)

    def __add__(self, other: FieldElement) -> FieldElement:
        return FieldElement(self.c0 + other.c0, self.c1 + other.c1, self.c2 + other.c2)

    def __sub__(self, other: FieldElement) -> FieldElement:
        return FieldElement(self.c0 - other.c0, self.c1 - other.c1, self.c2 - other.c2)

    def __neg__(self) -> FieldElement:
        return FieldElement(-self.c0, -self.c1, -self.c2)

    def __mul__(self, other: FieldElement | GaussianInt | int) -> FieldElement:
        if isinstance(other, (GaussianInt, int)):
            g = _as_gaussian(other)
            return FieldElement(self.c0 * g, self.c1 * g, self.c2 * g)
        if not isinstance(other, FieldElement):
            return NotImplemented
        a0, a1, a2 = self.coefficients()
        b0, b1, b2 = other.coefficients()
        t0 = a0 * b0
        t1 = a0 * b1 + a1 * b0
        t2 = a0 * b2 + a1 * b1 + a2 * b0
        t3 = a1 * b2 + a2 * b1
        t4 = a2 * b2
        # reduce eta^3 and eta^4 through the minimal polynomial
        return FieldElement(
            t0 + t3 - t4,
            t1 + t3 * 2 - t4,
            t2 - t3 + t4 * 3,
        )

    def __rmul__(self, other: GaussianInt | int) -> FieldElement:
        if isinstance(other, (GaussianInt, int)):
            return self * other
        return NotImplemented

    def __bool__(self) -> bool:
        return bool(self.c0 or self.c1 or self.c2)


ZERO = FieldElement(0, 0, 0)
ONE = FieldElement(1, 0, 0)
ETA = FieldElement(0, 1, 0)

# tau(eta) = eta^2 - 2; tau^2(eta) follows by applying tau again, i.e.
# tau(eta)^2 - 2.  Their squares are cached for the substitution below.
_TAU_ETA = FieldElement(-2, 0, 1)
_TAU2_ETA = _TAU_ETA * _TAU_ETA - FieldElement(2)
_TAU_ETA_SQ = _TAU_ETA * _TAU_ETA
_TAU2_ETA_SQ = _TAU2_ETA * _TAU2_ETA


def apply_tau(x: FieldElement, power: int) -> FieldElement:
    """Image of x under tau^power (power in {0, 1, 2}).

    Computed by substituting tau^power(eta) into the polynomial of x and
    reducing, so the result is exact.
    """
    if power not in (0, 1, 2):
        raise ValueError(f"power must be 0, 1 or 2, got {power!r}")
    if power == 0:
        return x
    img, img_sq = (_TAU_ETA, _TAU_ETA_SQ) if power == 1 else (_TAU2_ETA, _TAU2_ETA_SQ)
    return FieldElement(x.c0) + img * x.c1 + img_sq * x.c2


def embed(x: FieldElement, j: int) -> complex:
    """Numerical embedding sigma_j = tau^j: evaluate coefficients at rho_j."""
    if j not in (0, 1, 2):
        raise ValueError(f"embedding index must be 0, 1 or 2, got {j!r}")
    rho = ROOTS[j]
    return complex(x.c0) + complex(x.c1) * rho + complex(x.c2) * (rho * rho)


def trace_norm(x: FieldElement) -> tuple[GaussianInt, GaussianInt]:
    """Relative trace and norm: (x + tau(x) + tau^2(x), x * tau(x) * tau^2(x)).

    Both are Gaussian integers; a nonzero eta or eta^2 coefficient in either
    reduced value means tau or the reduction is broken, so it raises.
    """
    t1 = apply_tau(x, 1)
    t2 = apply_tau(x, 2)
    tr = x + t1 + t2
    nm = x * t1 * t2
    for name, v in (("trace", tr), ("norm", nm)):
        if v.c1 or v.c2:
            raise ArithmeticError(
                f"{name} of {x!r} has non-constant coefficients; "
                "Galois action or reduction is inconsistent"
            )
    return tr.c0, nm.c0
