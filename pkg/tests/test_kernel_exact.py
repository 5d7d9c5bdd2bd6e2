import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ive

from latticeheat.exceptions import ToleranceNotMetError, UnsupportedCaseError
from latticeheat.kernel_exact import (QuadSpec, first_green, green_field, lattice_coordinates,
                                      omega_integral, scale_factor, scaling_transport,
                                      second_green, with_scheme)
from latticeheat.stencil import Stencil, laplacian_1d, simple_walk, triangular

# Watson's cubic-lattice integral W = 1.5163860591519780 gives (2 pi)^-3 int 1/A = W/6
WATSON_OMEGA0 = 1.5163860591519780 / 6


def bessel_kernel(x, t):
    """Second-difference heat kernel exp(-2t) I_x(2t)."""
    return ive(np.abs(x), 2 * t)


# -- first kernel ----------------------------------------------------------------------

@pytest.mark.parametrize("t", [0.1, 1.0, 7.5, 40.0])
def test_first_kernel_matches_bessel(t, tight):
    x = np.arange(-12, 13)
    u = first_green(laplacian_1d(1), 1.0, x, t, 0, tight)
    np.testing.assert_allclose(u.real, bessel_kernel(x, t), rtol=1e-11, atol=1e-15)
    assert np.max(np.abs(u.imag)) < 1e-15


def test_first_kernel_time_derivative_against_bessel(tight):
    # d/dt exp(-2t) I_x(2t) = exp(-2t) (I_{x-1} + I_{x+1} - 2 I_x)
    x, t = np.arange(-5, 6), 3.0
    du = first_green(laplacian_1d(1), 1.0, x, t, 1, tight).real
    want = bessel_kernel(x - 1, t) + bessel_kernel(x + 1, t) - 2 * bessel_kernel(x, t)
    np.testing.assert_allclose(du, want, atol=1e-14)


def test_second_time_derivative_by_finite_difference(tight):
    st_, x, t, h = simple_walk(2), np.array([[0, 0], [1, 2]]), 2.0, 1e-3
    d1 = lambda s: first_green(st_, 1.0, x, s, 1, tight).real
    fd = (d1(t + h) - d1(t - h)) / (2 * h)
    np.testing.assert_allclose(first_green(st_, 1.0, x, t, 2, tight).real, fd, atol=1e-7)


def test_initial_condition_is_lattice_delta():
    x = np.arange(-3, 4)
    u = first_green(laplacian_1d(2), 1.0, x, 0.0)
    np.testing.assert_allclose(u, (x == 0).astype(float), atol=1e-15)
    u_half = first_green(laplacian_1d(1), 0.5, x * 0.5, 0.0)
    np.testing.assert_allclose(u_half, 2.0 * (x == 0), atol=1e-14)


def test_negative_time_and_off_lattice_rejected():
    with pytest.raises(ValueError):
        first_green(laplacian_1d(1), 1.0, 0, -1.0)
    with pytest.raises(ValueError, match="lattice"):
        first_green(laplacian_1d(1), 0.5, 0.3, 1.0)
    with pytest.raises(ValueError):
        first_green(simple_walk(2), 1.0, np.zeros(3), 1.0)


def test_scalar_point_returns_complex():
    assert isinstance(first_green(laplacian_1d(1), 1.0, 0, 1.0), complex)


def test_positivity_and_symmetry_for_simple_walk(tight):
    pts = lattice_coordinates(2, 4)
    u = first_green(simple_walk(2), 1.0, pts, 1.5, 0, tight).real
    assert np.all(u > 0)
    swapped = first_green(simple_walk(2), 1.0, pts[:, ::-1], 1.5, 0, tight).real
    np.testing.assert_allclose(u, swapped, atol=1e-15)
    flipped = first_green(simple_walk(2), 1.0, -pts, 1.5, 0, tight).real
    np.testing.assert_allclose(u, flipped, atol=1e-15)


def test_simple_walk_factorises_into_one_dimensional_kernels(tight):
    pts = np.array([[0, 0], [2, -1], [3, 3]])
    u = first_green(simple_walk(2), 1.0, pts, 2.0, 0, tight).real
    want = bessel_kernel(pts[:, 0], 2.0) * bessel_kernel(pts[:, 1], 2.0)
    np.testing.assert_allclose(u, want, rtol=1e-11)


def test_tolerance_failure_raises():
    quad = QuadSpec(n_per_axis=16, target_rel_tol=1e-15, max_doublings=0)
    with pytest.raises(ToleranceNotMetError):
        first_green(laplacian_1d(1), 1.0, 0, 100.0, 0, quad)


def test_quadspec_validation():
    with pytest.raises(ValueError):
        QuadSpec(n_per_axis=15)
    with pytest.raises(ValueError):
        QuadSpec(target_rel_tol=0)
    with pytest.raises(ValueError):
        QuadSpec(scheme="simpson")


# -- scaling -------------------------------------------------------------------------------

@pytest.mark.parametrize("J", [0, 1])
def test_mesh_scaling_identity(J, tight):
    st_, eps, t = laplacian_1d(2), 0.5, 0.75
    x = np.array([0.0, 0.5, 1.5, -2.0])
    direct = first_green(st_, eps, x, t, J, tight)
    unit = first_green(st_, 1.0, x / eps, t / eps ** st_.order, J, tight)
    np.testing.assert_allclose(direct, scaling_transport(unit, st_, eps, x, J), rtol=1e-10)


def test_second_kernel_scaling_identity(tight):
    st_, eps, t = laplacian_1d(1), 0.25, 0.5
    x = np.array([0.0, 0.25, 1.0])
    direct = second_green(st_, eps, x, t, tight)
    unit = second_green(st_, 1.0, x / eps, t / eps ** 2, tight)
    np.testing.assert_allclose(direct, unit * scale_factor(eps, 2, 1, kind="second"), rtol=1e-10)


def test_scale_factor_values():
    assert scale_factor(0.5, 2, 1) == 2.0
    assert scale_factor(0.5, 2, 2, J=1) == 16.0
    assert scale_factor(0.5, 4, 1, kind="second") == 0.125
    with pytest.raises(ValueError):
        scale_factor(0.5, 2, 1, kind="third")


# -- field ------------------------------------------------------------------------------

@pytest.mark.parametrize("stencil", [laplacian_1d(3), simple_walk(2), triangular()])
def test_field_agrees_with_pointwise(stencil, tight):
    fld = green_field(stencil, 1.0, 2.0, 0, 6, tight)
    pts = fld.coordinates()
    pointwise = first_green(stencil, 1.0, pts, 2.0, 0, tight)
    np.testing.assert_allclose(fld.values.ravel(), pointwise, atol=1e-14)
    assert fld.value(pts[3]) == fld.values.ravel()[3]
    with pytest.raises(IndexError):
        fld.value(np.full(stencil.dim, 7))


def test_field_mass_is_one_and_second_kind(tight):
    fld = green_field(simple_walk(2), 1.0, 3.0, 0, 40, tight)
    assert fld.mass() == pytest.approx(1.0, abs=1e-12)
    assert green_field(laplacian_1d(1), 1.0, 3.0, 1, 40, tight).mass() == pytest.approx(0.0, abs=1e-12)
    sec = green_field(laplacian_1d(1), 1.0, 2.0, 0, 5, tight, kind="second")
    np.testing.assert_allclose(sec.values, second_green(laplacian_1d(1), 1.0, np.arange(-5, 6), 2.0, tight),
                               atol=1e-13)


def test_field_argument_checks():
    with pytest.raises(ValueError):
        green_field(laplacian_1d(1), 1.0, 0.0)
    with pytest.raises(ValueError):
        green_field(laplacian_1d(1), 1.0, 1.0, kind="third")


# -- second kernel ---------------------------------------------------------------------------

def test_second_kernel_is_time_integral_of_first(tight):
    from scipy.integrate import quad

    x = np.array([0, 1, 4])
    v = second_green(laplacian_1d(1), 1.0, x, 3.0, tight).real
    want = [quad(lambda s: bessel_kernel(xi, s), 0, 3.0, epsabs=1e-14, epsrel=1e-13)[0] for xi in x]
    np.testing.assert_allclose(v, want, atol=1e-12)


def test_second_kernel_derivative_is_first(tight):
    st_, x, t, h = triangular(), np.array([[0, 0], [1, -1]]), 1.2, 1e-4
    v = lambda s: second_green(st_, 1.0, x, s, tight)
    np.testing.assert_allclose((v(t + h) - v(t - h)) / (2 * h), first_green(st_, 1.0, x, t, 0, tight),
                               atol=1e-8)


def test_second_kernel_vanishes_at_zero_and_small_time_limit():
    assert second_green(simple_walk(2), 1.0, np.zeros(2), 0.0) == 0
    # v(0, t) / t -> 1 as t -> 0
    for t in (1e-3, 1e-5):
        assert second_green(laplacian_1d(1), 1.0, 0, t).real / t == pytest.approx(1.0, abs=3 * t)


def test_pyramid_and_trapezoid_schemes_agree(tight):
    st_, x = simple_walk(2), np.array([[0, 0], [3, 1]])
    a = second_green(st_, 1.0, x, 20.0, with_scheme(tight, "trapezoid"))
    b = second_green(st_, 1.0, x, 20.0, with_scheme(QuadSpec(target_rel_tol=1e-12), "pyramid"))
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_pyramid_scheme_rejects_non_elliptic():
    bad = Stencil({(0, 0): 2, (2, 0): -1, (-2, 0): -1}, 2)
    with pytest.raises(UnsupportedCaseError):
        second_green(bad, 1.0, np.zeros(2), 5.0, QuadSpec(scheme="pyramid"))


# -- lattice constant by zone integral -----------------------------------------------------

def test_watson_constant():
    om = omega_integral(simple_walk(3))
    assert om(np.zeros(3)).real == pytest.approx(WATSON_OMEGA0, abs=1e-10)


def test_lattice_constant_decreases_and_is_symmetric():
    om = omega_integral(simple_walk(3))
    vals = om(np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [2, 0, 0], [-2, 0, 0]])).real
    assert vals[0] > vals[1] > vals[3] > 0
    assert vals[1] == pytest.approx(vals[2], abs=1e-12)
    assert vals[3] == pytest.approx(vals[4], abs=1e-12)
    # discrete harmonicity away from the origin is the defining equation: A Omega = delta
    assert 6 * vals[0] - 6 * vals[1] == pytest.approx(1.0, abs=1e-9)


def test_lattice_constant_requires_order_below_dim():
    with pytest.raises(UnsupportedCaseError):
        omega_integral(simple_walk(2))


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 20.0), st.integers(-6, 6))
def test_kernel_bounded_by_one_and_even(t, x):
    st_ = laplacian_1d(1)
    u = first_green(st_, 1.0, np.array([x, -x]), t).real
    assert 0 <= u[0] <= 1 + 1e-12
    assert u[0] == pytest.approx(u[1], abs=1e-14)
    assert u[0] == pytest.approx(float(bessel_kernel(x, t)), abs=1e-10)


def test_long_time_peak_height():
    # u(0, t) ~ (4 pi t)^-1/2 for the second difference
    t = 1e4
    u0 = first_green(laplacian_1d(1), 1.0, 0, t).real
    assert u0 * math.sqrt(4 * math.pi * t) == pytest.approx(1.0, abs=1e-4)
