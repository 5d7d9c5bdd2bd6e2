import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from latticeheat import oned
from latticeheat.kernel_exact import first_green, second_green
from latticeheat.polyalg import Poly
from latticeheat.stencil import laplacian_1d

F = Fraction


def omega_by_mpmath(N: int, x: int) -> float:
    """Independent evaluation of the lattice constant in 40-digit arithmetic."""
    def integrand(xi):
        A = sum(4 * av * mpmath.sin(v * xi / 2) ** 2 for v, av in enumerate(a, start=1))
        return mpmath.cos(x * xi) / A - 1 / xi ** 2

    with mpmath.workdps(40):
        a = [mpmath.mpf(v.numerator) / v.denominator for v in oned.constants(N, N, 0).a]
        # midpoint patch on [0, delta]; the integrand is smooth and even there
        delta = mpmath.mpf("1e-6")
        val = 2 * (delta * integrand(delta / 2) + mpmath.quad(integrand, [delta, 0.5, mpmath.pi]))
        return float((val - 2 / mpmath.pi) / (2 * mpmath.pi) + mpmath.mpf(x) / 2)


# -- exact tables -----------------------------------------------------------------------

def test_second_difference_constants():
    c = oned.constants(1, 3, 2)
    assert c.b[1] == F(1, 12) and c.b[2] == F(-1, 360) and c.b[3] == F(1, 20160)
    assert c.c[(2, 2)] == F(1, 144)
    assert c.c[(3, 3)] == F(1, 1728)
    for n in (1, 2, 3):
        assert c.d[(1, n)] == -c.b[n]
        assert c.d[(0, n)] == 0
    assert c.d[(2, 1)] == -2 * c.b[1]


def test_order_four_family_starts_at_grade_two():
    c = oned.constants(2, 4, 1)
    assert set(c.b) == {2, 3, 4}
    assert c.a == (F(4, 3), F(-1, 12))
    # sum a_v v^6 = 4/3 - 64/12 = -4, times 2(-1)^3/6!
    assert c.b[2] == F(1, 90)


def test_first_polynomials():
    c = oned.constants(1, 3, 1)
    p1 = oned.polys(c, 1, 0)
    assert p1.P == Poly(1, {(4,): F(1, 12)})
    assert p1.Q.is_zero()
    assert p1.R == p1.P
    p2 = oned.polys(c, 2, 0)
    assert p2.P == Poly(1, {(6,): F(-1, 360), (8,): F(1, 288)})
    assert oned.polys(c, 2, 0).R == p2.P
    r11 = oned.polys(c, 1, 1).R  # -xi^2 (d_11 xi^2 + xi^4/12)
    assert r11 == Poly(1, {(4,): F(1, 12), (6,): F(-1, 12)})


def test_tables_reject_out_of_range():
    c = oned.constants(2, 4, 1)
    with pytest.raises(ValueError):
        oned.polys(c, 1, 0)
    with pytest.raises(ValueError):
        oned.polys(c, 5, 0)
    with pytest.raises(ValueError):
        oned.constants(0, 3, 0)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_cross_check_with_general_construction(N):
    for J in range(3):
        rep = oned.cross_check(N, N + 2, J)
        assert rep.ok, rep.mismatches
    assert rep.to_json()["ok"]


# -- profiles --------------------------------------------------------------------------------

def test_gaussian_derivative_polynomials():
    assert oned.gaussian_derivative_poly(1) == (0, F(-1, 2))
    assert oned.gaussian_derivative_poly(2) == (F(-1, 2), 0, F(1, 4))
    y, h = np.linspace(-3, 3, 7), 1e-4
    fd = (oned.h_derivative(2, y + h) - oned.h_derivative(2, y - h)) / (2 * h)
    np.testing.assert_allclose(oned.h_derivative(3, y), fd, atol=1e-8)


def test_leading_radial_profile():
    prof = oned.profiles(1)
    assert prof.f0(np.array([0.0]))[0] == pytest.approx(1 / math.sqrt(math.pi), abs=1e-14)
    y = np.array([0.3, 1.0, 2.5])
    fdd = (prof.f0(y + 1e-3) - 2 * prof.f0(y) + prof.f0(y - 1e-3)) / 1e-6
    np.testing.assert_allclose(fdd, prof.h(y), atol=1e-6)
    # definition 2y int_y^inf h / rho^2
    direct = [2 * v * quad(lambda r: float(prof.h(r)) / r ** 2, v, np.inf, epsabs=1e-15)[0] for v in y]
    np.testing.assert_allclose(prof.f0(y), direct, atol=1e-13)
    np.testing.assert_allclose(prof.g(y), prof.f0(y, 1))


def test_correction_profiles_are_even_and_match_definition():
    prof = oned.profiles(2)
    ys = np.linspace(0.1, 3.0, 5)
    for n in (2, 3):
        np.testing.assert_allclose(prof.h_jn(0, n, ys), prof.h_jn(0, n, -ys), atol=1e-15)
    y = 1.7
    direct = -(2 / y ** 3) * quad(lambda r: float(prof.h_jn(0, 2, r)) * r ** 2, 0, y, epsabs=1e-15)[0]
    assert prof.f_n(2, np.array([y]))[0] == pytest.approx(direct, abs=1e-14)
    assert np.all(prof.f_n(1, ys) == 0)


# -- lattice constant ---------------------------------------------------------------------------

def test_second_difference_constant_vanishes():
    np.testing.assert_allclose(oned.omega_1d(1, np.arange(41)), 0, atol=1e-12)


def test_order_four_constant_at_origin():
    assert oned.omega_1d(2, 0) == pytest.approx(-math.sqrt(3) / 24, abs=1e-12)


@pytest.mark.parametrize("N, x", [(2, 1), (2, 3), (2, 12), (3, 0), (3, 2)])
def test_lattice_constant_against_adaptive_quadrature(N, x):
    assert oned.omega_1d(N, x) == pytest.approx(omega_by_mpmath(N, x), abs=1e-13)


def test_lattice_constant_input_validation():
    with pytest.raises(ValueError):
        oned.omega_1d(2, -1)
    with pytest.raises(ValueError):
        oned.omega_1d(2, 0.5)


@pytest.mark.parametrize("x", [0, 1, 4, 9])
def test_step_integral_is_one_half(x):
    assert oned.step_integral(x) == pytest.approx(0.5, abs=1e-13)


def test_origin_limit_terms_approach_constant():
    gaps = [abs(sum(oned.origin_limit_terms(s)) - 1 / math.pi) for s in (1e-2, 1e-3, 1e-4)]
    assert gaps[2] < gaps[1] < gaps[0] and gaps[2] < 1e-4


# -- assemblies ------------------------------------------------------------------------------------

def test_first_kernel_assembly_against_exact(tight):
    x, t = np.arange(-20, 21), 300.0
    exact = first_green(laplacian_1d(1), 1.0, x, t, 0, tight).real
    for K1, bound in ((1, 1e-6), (3, 1e-9)):
        approx = oned.assemble_1d(1, "first", x, t, 0, K1).total
        assert np.max(np.abs(approx - exact)) < bound


def test_second_kernel_assembly_against_exact(tight):
    x, t = np.arange(0, 20), 300.0
    exact = second_green(laplacian_1d(2), 1.0, x, t, tight).real
    approx = oned.assemble_1d(2, "second", x, t, K1=3).total
    assert np.max(np.abs(approx - exact)) < 1e-7


def test_assemblies_respect_reflection():
    x = np.array([2, 5])
    for which in ("first", "second"):
        a = oned.assemble_1d(1, which, x, 50.0, K1=2).total
        b = oned.assemble_1d(1, which, -x, 50.0, K1=2).total
        np.testing.assert_allclose(a, b)
    # forward differences are odd about x = -1/2
    for which in ("gradient", "gradient_dt"):
        a = oned.assemble_1d(1, which, x, 50.0, K1=2).total
        b = oned.assemble_1d(1, which, -x - 1, 50.0, K1=2).total
        np.testing.assert_allclose(a, -b)


def test_scalar_input_gives_float():
    out = oned.assemble_1d(1, "first", 3, 10.0)
    assert isinstance(out.total, float)


def test_assembly_argument_checks():
    with pytest.raises(ValueError):
        oned.assemble_1d(1, "third", 0, 1.0)
    with pytest.raises(ValueError):
        oned.assemble_1d(2, "first", 0, 1.0, K1=1)
    with pytest.raises(ValueError):
        oned.assemble_1d(1, "gradient_dt", 0, 1.0, argument="other")
    with pytest.raises(ValueError):
        oned.assemble_1d(1, "first", 0.5, 1.0)


def test_scaled_and_unscaled_gradient_arguments_diverge():
    x = np.arange(1, 30)
    ref = np.diff(oned.assemble_1d(1, "first", np.arange(1, 31), 400.0, 0, 3).total)
    scaled = oned.assemble_1d(1, "gradient_dt", x, 400.0, 0, 2).total
    unscaled = oned.assemble_1d(1, "gradient_dt", x, 400.0, 0, 2, argument="unscaled").total
    assert np.max(np.abs(scaled - ref)) < 1e-7
    assert np.max(np.abs(unscaled - ref)) > 100 * np.max(np.abs(scaled - ref))


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2))
def test_time_derivative_polynomials_carry_power_of_minus_xi_squared(N, J):
    c = oned.constants(N, N + 1, J)
    for n in (N, N + 1):
        R = oned.polys(c, n, J).R
        assert all(e[0] >= 2 * J for e, _ in R.sorted_terms())
        assert all(e[0] % 2 == 0 for e, _ in R.sorted_terms())
