"""Complex scalars, second-order jets, Hermite polynomials and dense complex polynomials.

A :class:`Jet2` carries ``(f, f', f'')`` at one point. Arithmetic on jets applies the
Leibniz and chain rules through second order, which is all the Hamiltonian needs.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from typing import Iterable, Union

from ptosc.config import settings
from ptosc.errors import DivisionByZeroJet, IndexTooLarge, NonFiniteValue

ComplexScalar = complex
Number = Union[int, float, complex]

EXP_LIMIT = 700.0


def ensure_finite(value: Number, what: str = "value") -> complex:
    z = complex(value)
    if not cmath.isfinite(z):
        raise NonFiniteValue(f"{what} is not finite: {z!r}")
    return z


@dataclass(frozen=True, slots=True)
class Jet2:
    v: ComplexScalar
    d1: ComplexScalar = 0j
    d2: ComplexScalar = 0j

    def __post_init__(self) -> None:
        object.__setattr__(self, "v", ensure_finite(self.v, "jet value"))
        object.__setattr__(self, "d1", ensure_finite(self.d1, "jet first derivative"))
        object.__setattr__(self, "d2", ensure_finite(self.d2, "jet second derivative"))

    @classmethod
    def const(cls, c: Number) -> Jet2:
        return cls(complex(c))

    @classmethod
    def identity(cls, x: Number) -> Jet2:
        return cls(complex(x), 1 + 0j, 0j)

    def __add__(self, other: Jet2 | Number) -> Jet2:
        if isinstance(other, Jet2):
            return Jet2(self.v + other.v, self.d1 + other.d1, self.d2 + other.d2)
        return Jet2(self.v + other, self.d1, self.d2)

    __radd__ = __add__

    def __neg__(self) -> Jet2:
        return Jet2(-self.v, -self.d1, -self.d2)

    def __sub__(self, other: Jet2 | Number) -> Jet2:
        return self + (-other)

    def __rsub__(self, other: Number) -> Jet2:
        return (-self) + other

    def __mul__(self, other: Jet2 | Number) -> Jet2:
        if isinstance(other, Jet2):
            return jet_mul(self, other)
        return Jet2(self.v * other, self.d1 * other, self.d2 * other)

    __rmul__ = __mul__

    def __truediv__(self, other: Jet2 | Number) -> Jet2:
        if isinstance(other, Jet2):
            return jet_div(self, other)
        return jet_div(self, Jet2.const(other))

    def __rtruediv__(self, other: Number) -> Jet2:
        return jet_div(Jet2.const(other), self)


def jet_mul(a: Jet2, b: Jet2) -> Jet2:
    return Jet2(
        a.v * b.v,
        a.d1 * b.v + a.v * b.d1,
        a.d2 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d2,
    )


def jet_div(a: Jet2, b: Jet2, floor: float | None = None) -> Jet2:
    floor = settings.division_floor if floor is None else floor
    if abs(b.v) < floor:
        raise DivisionByZeroJet(f"jet divisor {b.v!r} is below the floor {floor:g}")
    q = a.v / b.v
    q1 = (a.d1 - q * b.d1) / b.v
    q2 = (a.d2 - 2.0 * q1 * b.d1 - q * b.d2) / b.v
    return Jet2(q, q1, q2)


def jet_exp(a: Jet2) -> Jet2:
    if a.v.real > EXP_LIMIT:
        raise OverflowError(f"exp argument has real part {a.v.real:.6g} > {EXP_LIMIT:g}")
    v = cmath.exp(a.v)
    return Jet2(v, a.d1 * v, (a.d2 + a.d1 * a.d1) * v)


def _check_index(n: int) -> None:
    if n < 0:
        raise ValueError(f"Hermite index must be non-negative, got {n}")
    if n > settings.hermite_max_index:
        raise IndexTooLarge(f"Hermite index {n} exceeds the cap {settings.hermite_max_index}")


def _hermite_triple(n: int, z: complex) -> tuple[complex, complex, complex]:
    """(H_{n-2}, H_{n-1}, H_n) at z; negative indices read as zero."""
    h2, h1, h0 = 0j, 0j, 1 + 0j
    for k in range(n):
        h2, h1, h0 = h1, h0, 2.0 * z * h0 - 2.0 * k * h1
    return h2, h1, h0


def hermite(n: int, z: Number) -> complex:
    """Physicists' Hermite polynomial H_n(z) by the three-term recurrence."""
    _check_index(n)
    return ensure_finite(_hermite_triple(n, complex(z))[2], f"H_{n}")


def hermite_jet(n: int, u: Jet2) -> Jet2:
    _check_index(n)
    hm2, hm1, h = _hermite_triple(n, u.v)
    dh = 2.0 * n * hm1
    ddh = 4.0 * n * (n - 1) * hm2
    return Jet2(h, dh * u.d1, ddh * u.d1 * u.d1 + dh * u.d2)


@dataclass(frozen=True, slots=True)
class PolyC:
    """Dense complex polynomial, coefficients in ascending powers."""

    coeffs: tuple[complex, ...] = ()

    def __post_init__(self) -> None:
        cs = [complex(c) for c in self.coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    @classmethod
    def from_coeffs(cls, coeffs: Iterable[Number]) -> PolyC:
        return cls(tuple(complex(c) for c in coeffs))

    @classmethod
    def monomial(cls, power: int, coeff: Number = 1) -> PolyC:
        return cls((0j,) * power + (complex(coeff),))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __call__(self, z: Number) -> complex:
        acc = 0j
        for c in reversed(self.coeffs):
            acc = acc * z + c
        return acc

    def jet(self, u: Jet2) -> Jet2:
        acc = Jet2.const(0)
        for c in reversed(self.coeffs):
            acc = jet_mul(acc, u) + c
        return acc

    def derivative(self) -> PolyC:
        return PolyC(tuple(k * c for k, c in enumerate(self.coeffs) if k))

    def shift(self, k: int) -> PolyC:
        """Multiply by x**k."""
        if self.is_zero():
            return self
        return PolyC((0j,) * k + self.coeffs)

    def __add__(self, other: PolyC) -> PolyC:
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        return PolyC(tuple(x + (b[i] if i < len(b) else 0) for i, x in enumerate(a)))

    def __neg__(self) -> PolyC:
        return PolyC(tuple(-c for c in self.coeffs))

    def __sub__(self, other: PolyC) -> PolyC:
        return self + (-other)

    def __mul__(self, other: PolyC | Number) -> PolyC:
        if not isinstance(other, PolyC):
            return PolyC(tuple(c * other for c in self.coeffs))
        if self.is_zero() or other.is_zero():
            return PolyC()
        out = [0j] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return PolyC(tuple(out))

    __rmul__ = __mul__
