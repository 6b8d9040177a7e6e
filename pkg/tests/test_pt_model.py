from __future__ import annotations

import math

import numpy as np
import pytest

from ptosc.errors import PoleError
from ptosc.services.numerics import Jet2
from ptosc.services.pt_model import (
    EigenState,
    PTSystem,
    apply_H,
    c_apply,
    cpt_apply,
    eigen_residual,
    energy,
    expF_apply,
    phi_function,
    phi_jet,
    phi_table,
    psi_function,
    psi_jet,
    psi_table,
    pt_apply,
    pt_reflect,
    s_jet,
    scaled_deviation,
    values,
)


def phi(eps: float, n: int):
    return values(phi_function(PTSystem(eps), EigenState(n)))


def test_s_jet_cases():
    assert s_jet(PTSystem(0.0), 3.7) == Jet2.const(1)
    j = s_jet(PTSystem(0.25), 0.0)
    assert (j.v, j.d1, j.d2) == (1, 0.5j, 0)
    sys = PTSystem(0.1)
    assert sys.pole == pytest.approx(5j)
    assert abs(sys.s(sys.pole)) < 1e-15
    assert PTSystem(0.0).pole is None


def test_psi_jet_values():
    j = psi_jet(EigenState(0), 0.0)
    assert j.v.real == pytest.approx(math.pi**-0.25, rel=1e-15)
    assert j.d1 == 0
    assert psi_jet(EigenState(1), 0.0).v == 0
    x = 1.3
    a2 = EigenState(2).norm_A
    expected = a2 * (4 * x * x - 2) * math.exp(-x * x / 2)
    assert abs(psi_jet(EigenState(2), x).v - expected) < 1e-13


def test_psi_jet_overflow_far_off_axis():
    with pytest.raises(OverflowError):
        psi_jet(EigenState(0), 60j)


@pytest.mark.parametrize("n", [0, 2, 5])
def test_phi_reduces_to_psi_at_zero_epsilon(n):
    for x in np.linspace(-3, 3, 11):
        assert phi_jet(PTSystem(0.0), EigenState(n), x) == psi_jet(EigenState(n), x)


def test_phi_ground_state_at_origin():
    for eps in (0.05, 0.2, 0.5):
        assert phi_jet(PTSystem(eps), EigenState(0), 0.0).v == pytest.approx(math.pi**-0.25, rel=1e-15)


def test_phi_derivatives_match_finite_differences():
    sys, state, x, h = PTSystem(0.2), EigenState(3), 0.7, 1e-5

    def f(t: float) -> complex:
        return phi_jet(sys, state, t).v

    j = phi_jet(sys, state, x)
    assert abs(j.d1 - (f(x + h) - f(x - h)) / (2 * h)) < 1e-7
    assert abs(j.d2 - (f(x + h) - 2 * f(x) + f(x - h)) / (h * h)) < 1e-4


def test_phi_at_pole_raises():
    sys = PTSystem(0.1)
    with pytest.raises(PoleError) as info:
        phi_jet(sys, EigenState(0), sys.pole)
    assert info.value.point == sys.pole


def test_energy_levels():
    assert [energy(EigenState(n)) for n in (0, 1, 10)] == [0.5, 1.5, 10.5]


def test_apply_H_oscillator_limit():
    f = psi_function(EigenState(0))
    x = 0.4
    assert abs(apply_H(PTSystem(0.0), f, x) - 0.5 * f(x).v) < 1e-15


def test_apply_H_ground_state_eigenvalue():
    sys = PTSystem(0.25)
    f = phi_function(sys, EigenState(0))
    for x in np.linspace(-4, 4, 17):
        assert abs(apply_H(sys, f, x) - 0.5 * f(x).v) <= 1e-11 * max(abs(f(x).v), 1e-3)


def test_apply_H_excited_state_eigenvalue():
    sys = PTSystem(0.1)
    f = phi_function(sys, EigenState(5))
    x = -1.2
    assert abs(apply_H(sys, f, x) - 5.5 * f(x).v) <= 1e-10 * abs(f(x).v)


@pytest.mark.parametrize("n", range(11))
def test_eigen_residual_small(n):
    xs = np.linspace(-6, 6, 64)
    assert eigen_residual(PTSystem(0.2), EigenState(n), xs) < 1e-10


def test_eigen_residual_detects_energy_shift():
    xs = np.linspace(-6, 6, 64)
    assert eigen_residual(PTSystem(0.2), EigenState(2), xs, energy_shift=1e-6) > 1e-7


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_pt_eigenvalue(n, real_grid):
    f = phi(0.2, n)
    sign = (-1) ** n
    assert scaled_deviation(lambda x: pt_apply(f, x), lambda x: sign * f(x), real_grid) < 1e-13


def test_pt_of_real_even_function():
    f = values(psi_function(EigenState(0)))
    assert all(pt_apply(f, x) == pytest.approx(f(x), rel=1e-15) for x in (0.0, 0.3, -1.7))


def test_pt_reflect_agrees_with_pt_on_real_axis(real_grid):
    f = phi(0.15, 3)
    assert all(pt_reflect(f, x) == pytest.approx(pt_apply(f, x), rel=1e-15, abs=1e-300) for x in real_grid)


@pytest.mark.parametrize("n, sign", [(4, 1), (3, -1)])
def test_c_eigenvalue(n, sign, real_grid):
    sys = PTSystem(0.15)
    f = phi(0.15, n)
    assert scaled_deviation(lambda x: c_apply(sys, f, x), lambda x: sign * f(x), real_grid) < 1e-12


def test_c_is_parity_at_zero_epsilon(real_grid):
    f = values(psi_function(EigenState(2)))
    assert all(c_apply(PTSystem(0.0), f, x) == pytest.approx(f(-x), rel=1e-15, abs=1e-300) for x in real_grid)


def test_c_is_an_involution(real_grid):
    sys = PTSystem(0.2)
    f = phi(0.2, 3)
    twice = lambda x: c_apply(sys, lambda w: c_apply(sys, f, w), x)  # noqa: E731
    assert scaled_deviation(twice, f, real_grid) < 1e-12


def test_cpt_leaves_eigenstates_fixed(real_grid):
    sys = PTSystem(0.2)
    for n in range(6):
        f = phi(0.2, n)
        assert scaled_deviation(lambda x: cpt_apply(sys, f, x), f, real_grid) < 1e-12


def test_expF_apply_substitution():
    sys, x = PTSystem(0.1), 1.0
    s = 1 + 0.2j
    assert abs(expF_apply(sys, 1.0, lambda u: u * u, x) - x * x / s**3) < 1e-15
    assert expF_apply(sys, 0.0, lambda u: u * u, 0.7) == pytest.approx(0.49)
    assert expF_apply(PTSystem(0.0), 1.0, lambda u: u**3, 0.7) == pytest.approx(0.343)


def test_expF_maps_psi_to_phi_and_back(real_grid):
    sys = PTSystem(0.2)
    psi0 = values(psi_function(EigenState(0)))
    assert abs(expF_apply(sys, 1.0, psi0, 0.5) - phi(0.2, 0)(0.5)) < 1e-14
    for n in range(4):
        psi_n = values(psi_function(EigenState(n)))
        back = lambda x, f=phi(0.2, n): expF_apply(sys, -1.0, f, x)  # noqa: E731
        assert scaled_deviation(back, psi_n, real_grid) < 1e-12


def test_tables_agree_with_pointwise_states():
    sys = PTSystem(0.25)
    z = np.array([0.0, 0.8 + 0.4j, -1.5 + 0.2j, 2.0])
    psi = psi_table(7, z)
    ph = phi_table(sys, 7, z)
    for n in range(8):
        for k, w in enumerate(z):
            assert abs(psi[n, k] - psi_jet(EigenState(n), w).v) < 1e-13
            assert abs(ph[n, k] - phi_jet(sys, EigenState(n), w).v) < 1e-13


def test_phi_table_pole():
    sys = PTSystem(0.25)
    with pytest.raises(PoleError):
        phi_table(sys, 2, np.array([0.0, sys.pole]))


@pytest.mark.parametrize("eps", [k / 100 for k in range(1, 51)])
def test_pole_detected_for_every_epsilon(eps):
    sys = PTSystem(eps)
    f = values(psi_function(EigenState(1)))
    with pytest.raises(PoleError):
        phi_jet(sys, EigenState(2), sys.pole)
    with pytest.raises(PoleError):
        apply_H(sys, phi_function(sys, EigenState(0)), sys.pole)
    with pytest.raises(PoleError):
        c_apply(sys, f, 1j / (4 * eps))
    for a in (1.0, -1.0, 2.0):
        with pytest.raises(PoleError):
            expF_apply(sys, a, f, 1j / (2 * a * eps))
    with pytest.raises(PoleError):
        phi_table(sys, 1, np.array([0.0, sys.pole]))


def test_points_near_the_pole_still_evaluate():
    sys = PTSystem(0.09)
    x = sys.pole * (1 + 1e-9)
    assert abs(sys.s(x)) > 0
    assert abs(expF_apply(sys, 1.0, lambda u: 1.0, x)) > 1e8
