"""The deformed oscillator H = p s^4 p / 2 + 4 eps^2 s^2 + x^2 / (2 s^2), with s = 1 + 2i eps x.

Eigenstates are phi_n(x) = (A_n / s) H_n(x/s) exp(-x^2 / 2s^2), i.e. e^{eps F} applied to the
oscillator state psi_n. Everything here works pointwise: a state is a function returning a
:class:`Jet2`, and operators act on such functions at one point at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ptosc.config import settings
from ptosc.errors import PoleError
from ptosc.services.numerics import (
    Jet2,
    Number,
    ensure_finite,
    hermite_jet,
    jet_div,
    jet_exp,
    jet_mul,
)

JetFunction = Callable[[complex], Jet2]
ScalarFunction = Callable[[complex], complex]

# x^2 below this makes exp(-x^2/2) overflow
PSI_REAL_FLOOR = -1400.0


def _at_pole(value: complex) -> bool:
    """True when value = 1 + c x has cancelled to rounding level, i.e. x sits on the zero of value."""
    return abs(value) <= settings.pole_tolerance * (1.0 + abs(value - 1.0))


def _guard(value: complex, point: complex, what: str) -> complex:
    if _at_pole(value):
        raise PoleError(point, what)
    return value


@dataclass(frozen=True)
class PTSystem:
    epsilon: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.epsilon):
            raise ValueError(f"epsilon must be finite, got {self.epsilon!r}")

    @property
    def pole(self) -> complex | None:
        """Zero of s, at i/(2 eps); None for the plain oscillator."""
        if self.epsilon == 0:
            return None
        return 1j / (2.0 * self.epsilon)

    def s(self, x: Number) -> complex:
        return 1 + 2j * self.epsilon * x

    def sbar(self, x: Number) -> complex:
        return 1 - 2j * self.epsilon * x

    def t(self, x: Number) -> complex:
        return 1 + 4j * self.epsilon * x

    def scaled(self, a: float) -> PTSystem:
        return PTSystem(a * self.epsilon)


@dataclass(frozen=True)
class EigenState:
    n: int

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError(f"state index must be non-negative, got {self.n}")

    @property
    def norm_A(self) -> float:
        return (math.sqrt(math.pi) * 2.0**self.n * math.factorial(self.n)) ** -0.5


def energy(state: EigenState) -> float:
    return state.n + 0.5


def s_jet(sys: PTSystem, x: Number) -> Jet2:
    return Jet2(sys.s(x), 2j * sys.epsilon, 0j)


def _gaussian_hermite(n: int, u: Jet2) -> Jet2:
    """H_n(u) exp(-u^2/2) as a jet."""
    return jet_mul(hermite_jet(n, u), jet_exp(jet_mul(u, u) * -0.5))


def psi_jet(state: EigenState, x: Number) -> Jet2:
    x = complex(x)
    if (x * x).real < PSI_REAL_FLOOR:
        raise OverflowError(f"psi_{state.n}({x!r}) overflows: Re(x^2) < {PSI_REAL_FLOOR:g}")
    return jet_mul(Jet2.const(state.norm_A), _gaussian_hermite(state.n, Jet2.identity(x)))


def phi_jet(sys: PTSystem, state: EigenState, x: Number) -> Jet2:
    x = complex(x)
    s = _guard(sys.s(x), x, "s")
    # d(x/s)/dx = 1/s^2 since s - 2i eps x = 1
    inv_s2 = 1.0 / (s * s)
    u = Jet2(x / s, inv_s2, -4j * sys.epsilon * inv_s2 / s)
    prefactor = jet_div(Jet2.const(state.norm_A), s_jet(sys, x))
    return jet_mul(prefactor, _gaussian_hermite(state.n, u))


def psi_function(state: EigenState) -> JetFunction:
    return lambda x: psi_jet(state, x)


def phi_function(sys: PTSystem, state: EigenState) -> JetFunction:
    return lambda x: phi_jet(sys, state, x)


def values(f: JetFunction) -> ScalarFunction:
    """Drop the derivatives of a jet-valued function."""
    return lambda x: f(x).v


def apply_H(sys: PTSystem, f: JetFunction, x: Number) -> complex:
    x = complex(x)
    eps = sys.epsilon
    s = _guard(sys.s(x), x, "s")
    j = f(x)
    s2 = s * s
    kinetic = -0.5 * (8j * eps * s2 * s * j.d1 + s2 * s2 * j.d2)
    return ensure_finite(kinetic + 4.0 * eps * eps * s2 * j.v + x * x * j.v / (2.0 * s2), "H f")


def pt_apply(f: ScalarFunction, x: float) -> complex:
    return complex(f(-x)).conjugate()


def pt_reflect(f: ScalarFunction, z: Number) -> complex:
    """Analytic continuation of the PT image off the real axis: conj(f(-conj z))."""
    z = complex(z)
    return complex(f(-z.conjugate())).conjugate()


def c_apply(sys: PTSystem, f: ScalarFunction, x: Number) -> complex:
    """C f = e^{2 eps F} P f; the substitution rule for e^{a eps F} gives f(-x/t)/t, t = 1 + 4i eps x."""
    x = complex(x)
    t = _guard(sys.t(x), x, "t")
    return f(-x / t) / t


def cpt_apply(sys: PTSystem, f: ScalarFunction, z: Number) -> complex:
    return c_apply(sys, lambda w: pt_reflect(f, w), z)


def expF_apply(sys: PTSystem, a: float, U: ScalarFunction, x: Number) -> complex:
    """e^{a eps F} U = U(x/sigma)/sigma with sigma = 1 + 2i a eps x."""
    x = complex(x)
    sigma = _guard(sys.scaled(a).s(x), x, "sigma")
    return U(x / sigma) / sigma


def psi_table(n_max: int, x: np.ndarray) -> np.ndarray:
    """psi_0..psi_{n_max} on an array of (complex) points, normalized recurrence."""
    x = np.asarray(x, dtype=np.complex128)
    out = np.empty((n_max + 1,) + x.shape, dtype=np.complex128)
    out[0] = math.pi**-0.25 * np.exp(-0.5 * x * x)
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for k in range(1, n_max):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * x * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
    return out


def phi_table(sys: PTSystem, n_max: int, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.complex128)
    s = 1 + 2j * sys.epsilon * z
    hit = np.abs(s) <= settings.pole_tolerance * (1.0 + np.abs(s - 1.0))
    if np.any(hit):
        bad = complex(z.flat[np.argmax(hit)])
        raise PoleError(bad, "s")
    return psi_table(n_max, z / s) / s


def sample_grid(half_width: float | None = None, points: int | None = None) -> np.ndarray:
    half_width = settings.sample_half_width if half_width is None else half_width
    points = settings.sample_points if points is None else points
    return np.linspace(-half_width, half_width, points)


def max_abs(f: ScalarFunction, xs: np.ndarray) -> float:
    return max(abs(f(complex(x))) for x in xs)


def scaled_deviation(
    lhs: ScalarFunction, rhs: ScalarFunction, xs: np.ndarray, scale: float | None = None
) -> float:
    """max |lhs - rhs| over the grid, divided by max |rhs| (or the given scale)."""
    scale = max_abs(rhs, xs) if scale is None else scale
    worst = max(abs(lhs(float(x)) - rhs(float(x))) for x in xs)
    return worst / scale if scale > 0 else worst


def eigen_residual(sys: PTSystem, state: EigenState, xs: np.ndarray, energy_shift: float = 0.0) -> float:
    """Scaled residual max |H phi_n - E_n phi_n| / max |phi_n| over the grid."""
    f = phi_function(sys, state)
    e = energy(state) + energy_shift
    return scaled_deviation(
        lambda x: apply_H(sys, f, x), lambda x: e * f(x).v, xs, scale=max_abs(values(f), xs)
    )
