"""Exact commutator algebra for the two operator families x^a and p x^a p.

F = x^2 p + p x^2 is never stored; only its adjoint action [F, .] is implemented, which maps
both families into themselves:

    [F, x^n]     = -2in x^(n+1)
    [F, p x^n p] = i(8 - 2n) p x^(n+1) p - 2ni x^(n-1)

Coefficients are exact Gaussian rationals; powers of eps are kept symbolic by grading.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Iterator, Union

import numpy as np

from ptosc.config import settings
from ptosc.errors import ConvergenceDomainError
from ptosc.services.numerics import Jet2, Number, PolyC, jet_exp, jet_mul
from ptosc.services.pt_model import JetFunction, PTSystem, expF_apply

logger = logging.getLogger(__name__)

Rational = Union[int, Fraction]


@dataclass(frozen=True, slots=True)
class ExactComplex:
    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "re", Fraction(self.re))
        object.__setattr__(self, "im", Fraction(self.im))

    @classmethod
    def coerce(cls, value: ExactComplex | Rational) -> ExactComplex:
        return value if isinstance(value, ExactComplex) else cls(Fraction(value))

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def __add__(self, other: ExactComplex | Rational) -> ExactComplex:
        o = ExactComplex.coerce(other)
        return ExactComplex(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self) -> ExactComplex:
        return ExactComplex(-self.re, -self.im)

    def __sub__(self, other: ExactComplex | Rational) -> ExactComplex:
        return self + (-ExactComplex.coerce(other))

    def __mul__(self, other: ExactComplex | Rational) -> ExactComplex:
        o = ExactComplex.coerce(other)
        return ExactComplex(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __str__(self) -> str:
        den = math.lcm(self.re.denominator, self.im.denominator)
        re = self.re.numerator * (den // self.re.denominator)
        im = self.im.numerator * (den // self.im.denominator)
        return f"({re}/{den} + {im}/{den} i)"


I = ExactComplex(0, 1)


class OpKind(Enum):
    XPOW = 0
    PXPOWP = 1


@dataclass(frozen=True, slots=True)
class OpTerm:
    kind: OpKind
    power: int
    coeff: ExactComplex

    @property
    def key(self) -> tuple[int, int]:
        return self.kind.value, self.power

    def dump(self) -> str:
        if self.kind is OpKind.XPOW:
            return f"{self.coeff} * x^{self.power}"
        return f"{self.coeff} * p x^{self.power} p"


@dataclass(frozen=True)
class OperatorSum:
    terms: tuple[OpTerm, ...] = ()

    @classmethod
    def from_terms(cls, terms: Iterable[OpTerm]) -> OperatorSum:
        acc: dict[tuple[OpKind, int], ExactComplex] = {}
        for t in terms:
            if t.power < 0:
                raise ValueError(f"negative power {t.power} in {t.kind.name} term")
            key = (t.kind, t.power)
            acc[key] = acc.get(key, ExactComplex()) + t.coeff
        normalized = [OpTerm(k, p, c) for (k, p), c in acc.items() if c]
        normalized.sort(key=lambda t: t.key)
        return cls(tuple(normalized))

    @classmethod
    def x_pow(cls, power: int, coeff: ExactComplex | Rational = 1) -> OperatorSum:
        return cls.from_terms([OpTerm(OpKind.XPOW, power, ExactComplex.coerce(coeff))])

    @classmethod
    def p_x_pow_p(cls, power: int, coeff: ExactComplex | Rational = 1) -> OperatorSum:
        return cls.from_terms([OpTerm(OpKind.PXPOWP, power, ExactComplex.coerce(coeff))])

    def __iter__(self) -> Iterator[OpTerm]:
        return iter(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: OperatorSum) -> OperatorSum:
        return OperatorSum.from_terms(self.terms + other.terms)

    def __neg__(self) -> OperatorSum:
        return self.scale(-1)

    def __sub__(self, other: OperatorSum) -> OperatorSum:
        return self + (-other)

    def scale(self, c: ExactComplex | Rational) -> OperatorSum:
        c = ExactComplex.coerce(c)
        return OperatorSum.from_terms(OpTerm(t.kind, t.power, t.coeff * c) for t in self.terms)

    def coefficient(self, kind: OpKind, power: int) -> ExactComplex:
        for t in self.terms:
            if t.kind is kind and t.power == power:
                return t.coeff
        return ExactComplex()

    def dump(self) -> str:
        return "\n".join(t.dump() for t in self.terms)


def oscillator_h() -> OperatorSum:
    """h = p^2/2 + x^2/2."""
    half = Fraction(1, 2)
    return OperatorSum.p_x_pow_p(0, half) + OperatorSum.x_pow(2, half)


def commute_F(t: OperatorSum) -> OperatorSum:
    out: list[OpTerm] = []
    for term in t:
        n = term.power
        if term.kind is OpKind.XPOW:
            out.append(OpTerm(OpKind.XPOW, n + 1, term.coeff * ExactComplex(0, -2 * n)))
            continue
        out.append(OpTerm(OpKind.PXPOWP, n + 1, term.coeff * ExactComplex(0, 8 - 2 * n)))
        # the x^(n-1) piece carries a factor n, so n = 0 never yields x^-1
        if n > 0:
            out.append(OpTerm(OpKind.XPOW, n - 1, term.coeff * ExactComplex(0, -2 * n)))
    return OperatorSum.from_terms(out)


@dataclass(frozen=True)
class EpsilonSeries:
    """Operator-valued polynomial in eps; orders[k] multiplies eps**k."""

    orders: tuple[OperatorSum, ...]

    @property
    def order(self) -> int:
        return len(self.orders) - 1

    def __getitem__(self, k: int) -> OperatorSum:
        return self.orders[k] if 0 <= k < len(self.orders) else OperatorSum()

    def coefficient_map(self, kind: OpKind, power: int) -> dict[int, ExactComplex]:
        return {k: c for k, op in enumerate(self.orders) if (c := op.coefficient(kind, power))}

    def mismatched_orders(self, other: EpsilonSeries) -> list[int]:
        top = max(self.order, other.order)
        return [k for k in range(top + 1) if self[k] != other[k]]

    def bind(self, epsilon: float) -> dict[tuple[OpKind, int], complex]:
        out: dict[tuple[OpKind, int], complex] = {}
        for k, op in enumerate(self.orders):
            for t in op:
                key = (t.kind, t.power)
                out[key] = out.get(key, 0j) + complex(t.coeff) * epsilon**k
        return out

    def dump(self) -> str:
        lines = []
        for k, op in enumerate(self.orders):
            lines.extend(f"eps^{k}: {t.dump()}" for t in op)
        return "\n".join(lines)


def _check_order(order: int, cap: int) -> None:
    if not 0 <= order <= cap:
        raise ValueError(f"order must lie in [0, {cap}], got {order}")


def bch_series(order: int) -> EpsilonSeries:
    """h + sum_k eps^k/k! C_k with C_k = [F, C_(k-1)], C_0 = h."""
    _check_order(order, settings.bch_order_cap)
    c = oscillator_h()
    orders = [c]
    for k in range(1, order + 1):
        c = commute_F(c)
        orders.append(c.scale(Fraction(1, math.factorial(k))))
        logger.debug("ad_F^%d h has %d terms", k, len(c))
    return EpsilonSeries(tuple(orders))


def target_expansion(order: int) -> EpsilonSeries:
    """Taylor expansion in eps of p s^4 p / 2 + 4 eps^2 s^2 + x^2 / (2 s^2)."""
    _check_order(order, settings.target_order_cap)
    two_i = ExactComplex(0, 2)
    terms: list[list[OpTerm]] = [[] for _ in range(order + 1)]

    def power(c: ExactComplex, k: int) -> ExactComplex:
        out = ExactComplex(1)
        for _ in range(k):
            out = out * c
        return out

    # p s^4 p / 2: binomial in 2i eps x, terminates at eps^4
    for k in range(min(4, order) + 1):
        coeff = power(two_i, k) * Fraction(math.comb(4, k), 2)
        terms[k].append(OpTerm(OpKind.PXPOWP, k, coeff))

    # 4 eps^2 s^2 = 4 eps^2 (1 + 2i eps x)^2
    for k in range(3):
        if k + 2 <= order:
            terms[k + 2].append(OpTerm(OpKind.XPOW, k, power(two_i, k) * (4 * math.comb(2, k))))

    # x^2 / (2 s^2) = (x^2/2) sum_m (m + 1) (-2i eps x)^m
    for m in range(order + 1):
        coeff = power(-two_i, m) * Fraction(m + 1, 2)
        terms[m].append(OpTerm(OpKind.XPOW, m + 2, coeff))

    return EpsilonSeries(tuple(OperatorSum.from_terms(ts) for ts in terms))


def random_operator_sum(rng: np.random.Generator, max_power: int = 8, max_terms: int = 6) -> OperatorSum:
    count = int(rng.integers(1, max_terms + 1))
    terms = []
    for _ in range(count):
        kind = OpKind.XPOW if rng.integers(2) == 0 else OpKind.PXPOWP
        re = Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 7)))
        im = Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 7)))
        terms.append(OpTerm(kind, int(rng.integers(0, max_power + 1)), ExactComplex(re, im)))
    return OperatorSum.from_terms(terms)


# pointwise action on jet-valued functions


def apply_term(term: OpTerm, f: JetFunction, x: Number) -> complex:
    x = complex(x)
    j = f(x)
    a = term.power
    if term.kind is OpKind.XPOW:
        value = x**a * j.v
    else:
        # p x^a p f = -(a x^(a-1) f' + x^a f'')
        value = -((a * x ** (a - 1) * j.d1 if a else 0j) + x**a * j.d2)
    return complex(term.coeff) * value


def apply_sum(op: OperatorSum, f: JetFunction, x: Number) -> complex:
    return sum((apply_term(t, f, x) for t in op), 0j)


def apply_F(f: JetFunction, x: Number) -> complex:
    """F f = -2i (x^2 f' + x f)."""
    x = complex(x)
    j = f(x)
    return -2j * (x * x * j.d1 + x * j.v)


@dataclass(frozen=True)
class GaussianProbe:
    """Test function P(x) exp(-x^2/2), closed under x^a, d/dx and hence under F and p x^a p."""

    poly: PolyC

    @classmethod
    def monomial(cls, j: int) -> GaussianProbe:
        return cls(PolyC.monomial(j))

    def __call__(self, x: Number) -> Jet2:
        ident = Jet2.identity(x)
        return jet_mul(self.poly.jet(ident), jet_exp(jet_mul(ident, ident) * -0.5))

    def derivative(self) -> GaussianProbe:
        return GaussianProbe(self.poly.derivative() - self.poly.shift(1))

    def times_x_pow(self, a: int) -> GaussianProbe:
        return GaussianProbe(self.poly.shift(a))

    def scaled(self, c: complex) -> GaussianProbe:
        return GaussianProbe(self.poly * c)

    def __add__(self, other: GaussianProbe) -> GaussianProbe:
        return GaussianProbe(self.poly + other.poly)

    def apply_F(self) -> GaussianProbe:
        return (self.derivative().times_x_pow(2) + self.times_x_pow(1)).scaled(-2j)

    def apply_term(self, term: OpTerm) -> GaussianProbe:
        if term.kind is OpKind.XPOW:
            out = self.times_x_pow(term.power)
        else:
            out = self.derivative().times_x_pow(term.power).derivative().scaled(-1)
        return out.scaled(complex(term.coeff))

    def apply_sum(self, op: OperatorSum) -> GaussianProbe:
        out = GaussianProbe(PolyC())
        for t in op:
            out = out + self.apply_term(t)
        return out


def commutator_residual(op: OperatorSum, probe: GaussianProbe, xs: Iterable[float]) -> float:
    """Compare [F, op] applied by definition, F(op f) - op(F f), with the symbolic rules.

    Returns max |lhs - rhs| over xs, relative to max |rhs| when that is nonzero.
    """
    rhs_op = commute_F(op)
    op_f = probe.apply_sum(op)
    f_f = probe.apply_F()
    worst, scale = 0.0, 0.0
    for x in xs:
        lhs = apply_F(op_f, x) - apply_sum(op, f_f, x)
        rhs = apply_sum(rhs_op, probe, x)
        worst = max(worst, abs(lhs - rhs))
        scale = max(scale, abs(rhs))
    return worst / scale if scale > 0 else worst


@dataclass(frozen=True)
class LemmaSeries:
    """Terms f_0 = U, f_(n+1) = -(mu/(n+1)) (x f_n + x^2 f_n') of e^{eps F} U, mu = 2i eps."""

    U0: PolyC
    terms: tuple[PolyC, ...]
    mu: complex

    def partial_sum(self, x: Number, n_terms: int | None = None) -> complex:
        n_terms = len(self.terms) - 1 if n_terms is None else n_terms
        return sum((f(x) for f in self.terms[: n_terms + 1]), 0j)


def _check_terms(n_terms: int) -> None:
    if not 0 <= n_terms <= settings.series_terms_cap:
        raise ValueError(f"n_terms must lie in [0, {settings.series_terms_cap}], got {n_terms}")


def build_lemma_series(U: PolyC, sys: PTSystem, n_terms: int | None = None) -> LemmaSeries:
    n_terms = settings.series_terms if n_terms is None else n_terms
    _check_terms(n_terms)
    mu = 2j * sys.epsilon
    terms = [U]
    f = U
    for n in range(n_terms):
        f = (f.shift(1) + f.derivative().shift(2)) * (-mu / (n + 1))
        terms.append(f)
    logger.debug("series for e^{eps F} U: %d terms, top degree %d", len(terms), terms[-1].degree)
    return LemmaSeries(U, tuple(terms), mu)


def _check_domain(sys: PTSystem, x: complex) -> None:
    r = abs(2.0 * sys.epsilon * x)
    if r >= 1.0:
        raise ConvergenceDomainError(f"|2 eps x| = {r:.6g} is outside the convergence disk")


def lemma_series_sum(U: PolyC, sys: PTSystem, x: Number, n_terms: int | None = None) -> complex:
    x = complex(x)
    _check_domain(sys, x)
    series = build_lemma_series(U, sys, n_terms)
    return series.partial_sum(x)


def lemma_closed_form(U: PolyC, sys: PTSystem, x: Number) -> complex:
    """e^{eps F} U(x) = U(x/s)/s."""
    return expF_apply(sys, 1.0, U, x)


def geometric_constant(U: PolyC, sys: PTSystem, x: Number, n_values: Iterable[int]) -> float:
    """Smallest C with |S_N - closed form| <= C |2 eps x|^N for every N given."""
    x = complex(x)
    _check_domain(sys, x)
    r = abs(2.0 * sys.epsilon * x)
    n_values = list(n_values)
    series = build_lemma_series(U, sys, max(n_values))
    exact = lemma_closed_form(U, sys, x)
    worst = 0.0
    for n in n_values:
        err = abs(series.partial_sum(x, n) - exact)
        worst = max(worst, err / r**n if r > 0 else err)
    return worst
