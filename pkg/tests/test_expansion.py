import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latticeheat import oned
from latticeheat.exceptions import UnsupportedCaseError
from latticeheat.expansion import (Profile, continuous_kernel, expansion_for, first_asymptotic,
                                   h_profile, second_asymptotic)
from latticeheat.kernel_exact import first_green, second_green
from latticeheat.stencil import Stencil, laplacian_1d, simple_walk, triangular

# constant term of v(0, t) - ln(t)/(4 pi) for the 2D simple walk, frozen from the
# direct four-integral evaluation and confirmed by extrapolating exact kernels
S0_SIMPLE_WALK_2D = 0.32172786334039133


def gauss_1d(y):
    return np.exp(-np.asarray(y) ** 2 / 4) / math.sqrt(4 * math.pi)


@pytest.fixture(scope="module")
def e1():
    return expansion_for(laplacian_1d(1))


@pytest.fixture(scope="module")
def e2():
    return expansion_for(simple_walk(2))


# -- Fourier profiles --------------------------------------------------------------------

def test_continuous_kernel_is_gaussian(e1, e2):
    y = np.linspace(-6, 6, 25)
    np.testing.assert_allclose(e1.continuous_kernel(y).real, gauss_1d(y), atol=1e-15)
    pts = np.array([[0.0, 0.0], [1.0, -2.0], [3.0, 0.5]])
    want = np.exp(-np.sum(pts ** 2, axis=1) / 4) / (4 * math.pi)
    np.testing.assert_allclose(e2.continuous_kernel(pts).real, want, atol=1e-15)


def test_first_correction_at_origin(e1):
    # the grade-2 polynomial is xi^4/12, whose transform at 0 is h(0)/16
    assert e1.h_profile(0, 2, np.zeros(1))[0].real == pytest.approx(gauss_1d(0) / 16, rel=1e-13)


def test_grades_below_order_vanish(e1):
    e4 = expansion_for(laplacian_1d(2))
    y = np.linspace(0, 3, 5)
    for k in (1, 2, 3):
        assert np.all(e4.h_profile(0, k, y) == 0)
    assert np.all(e1.h_profile(0, 1, y) == 0)


def test_time_derivative_profile_satisfies_heat_equation(e1):
    # H_{1,0} = h'' = d/dt [t^-1/2 h(x/sqrt t)] at t = 1
    y = np.linspace(-5, 5, 21)
    h1 = e1.h_profile(1, 0, y).real
    np.testing.assert_allclose(h1, oned.h_derivative(2, y), atol=1e-15)
    self_similar = -0.5 * gauss_1d(y) - 0.5 * y * oned.h_derivative(1, y)
    np.testing.assert_allclose(h1, self_similar, atol=1e-15)


def test_profiles_match_closed_forms_of_order_four_family():
    e4 = expansion_for(laplacian_1d(2))
    prof = oned.profiles(2)
    y = np.linspace(0, 4, 9)
    for J in (0, 1):
        for n in (2, 3):
            np.testing.assert_allclose(e4.h_profile(J, 2 * n, y).real, prof.h_jn(J, n, y), atol=1e-13)


def test_triangular_kernel_peak():
    # A0 = xi^T B xi with det B = 4/3, so H(0) = 1 / (4 pi sqrt(det B))
    et = expansion_for(triangular())
    assert et.continuous_kernel(np.zeros((1, 2)))[0].real == pytest.approx(math.sqrt(3) / (8 * math.pi),
                                                                          rel=1e-13)


def test_directional_taylor_of_gaussian(e2):
    w = np.array([[1.0, 0.0], [0.6, 0.8]])
    h0 = 1 / (4 * math.pi)
    np.testing.assert_allclose(e2.directional_taylor(0, 0, w).real, h0, rtol=1e-13)
    np.testing.assert_allclose(np.abs(e2.directional_taylor(0, 1, w)), 0, atol=1e-15)
    np.testing.assert_allclose(e2.directional_taylor(0, 2, w).real, -h0 / 2, rtol=1e-12)


def test_decay_radius_bounds_profile(e1, e2):
    for e in (e1, e2):
        R = e.decay_radius(0, 2)
        far = np.zeros((1, e.dim))
        far[0, 0] = R
        near0 = abs(e.h_profile(0, 2, np.zeros((1, e.dim)))[0])
        assert abs(e.h_profile(0, 2, far)[0]) < 1e-15 * max(near0, 1.0)


def test_profile_handle_caches_and_validates(e1):
    p = Profile(e1, "H")
    assert p(0.0) == pytest.approx(gauss_1d(0))
    assert len(p._cache) == 1
    np.testing.assert_allclose(p(np.array([0.0, 1.0])).real, gauss_1d([0.0, 1.0]))
    with pytest.raises(ValueError):
        Profile(e1, "nope")


def test_module_level_helpers_share_registry():
    assert expansion_for(laplacian_1d(1)) is expansion_for(laplacian_1d(1))
    np.testing.assert_allclose(continuous_kernel(laplacian_1d(1), [0.0]), h_profile(laplacian_1d(1), 0, 0, [0.0]))


def test_non_elliptic_stencil_rejected():
    with pytest.raises(UnsupportedCaseError):
        expansion_for(Stencil({(0,): 2, (2,): -1, (-2,): -1}, 2))


# -- radial profiles --------------------------------------------------------------------------

def test_leading_radial_profile_matches_closed_form(e1):
    y = np.array([0.01, 0.5, 1.0, 2.0, 6.0])
    np.testing.assert_allclose(e1.f_profile(0, y).real, oned.profiles(1).f0(y), atol=1e-13)


def test_radial_profile_at_origin(e1):
    # F_k(0) = order H_k(0) / (order - dim - k) when k > order - dim
    h2 = e1.h_profile(0, 2, np.zeros(1))[0].real
    f = e1.f_profile(2, np.array([0.0, 1e-4])).real
    assert f[0] == pytest.approx(-2 * h2, rel=1e-13)
    assert f[1] == pytest.approx(f[0], rel=1e-7)


def test_radial_profile_refuses_origin_in_log_case(e1):
    with pytest.raises(ValueError):
        e1.f_profile(0, np.array([0.0]))


def test_hhat_ratio_against_direct_difference(e2):
    rho = np.array([0.3, 0.7, 1.0])
    direct = (e2.continuous_kernel(np.column_stack([rho, 0 * rho])) - 1 / (4 * math.pi)) / rho
    np.testing.assert_allclose(e2.hhat_ratio(0, rho, np.array([1.0, 0.0])), direct, atol=1e-14)


def test_fhat_matches_ray_integral(e2):
    from scipy.integrate import quad

    w = np.array([0.6, 0.8])
    ratio = lambda r: ((e2.continuous_kernel((r * w)[None, :])[0].real - 1 / (4 * math.pi)) / r)
    want = 2 * quad(ratio, 0, 1, epsabs=1e-14)[0]
    assert e2.fhat_total((0.5 * w)[None, :])[0].real == pytest.approx(want, abs=1e-12)


def test_correction_profiles_only_in_log_case():
    e3 = expansion_for(simple_walk(3))
    with pytest.raises(UnsupportedCaseError):
        e3.correction_profiles(0, np.ones((1, 3)))


# -- lattice constant and S ---------------------------------------------------------------------

def test_s_constant_frozen_value(e2):
    assert e2.s_constant().real == pytest.approx(S0_SIMPLE_WALK_2D, abs=1e-12)


def test_lattice_constant_routes_agree(e2):
    pts = np.array([[1, 0], [2, 1]])
    via_s = e2.omega(pts, "s")
    via_limit = e2.omega(pts, "extract")
    np.testing.assert_allclose(via_s, via_limit, atol=1e-8)
    np.testing.assert_allclose(e2.omega(pts[::-1] * [1, -1], "s")[::-1], via_s, atol=1e-12)


def test_lattice_constant_route_s_rejects_origin(e2):
    with pytest.raises(ValueError):
        e2.omega(np.zeros((1, 2)), "s")
    with pytest.raises(ValueError):
        e2.omega(np.ones((1, 2)), "teleport")


def test_one_dimensional_constant_at_origin_equals_closed_route(e1):
    assert e1.s_constant() == pytest.approx(oned.omega_1d(1, 0), abs=1e-14)


def test_closed_route_limited_to_second_difference_family():
    e = expansion_for(simple_walk(2))
    with pytest.raises(UnsupportedCaseError):
        e.omega(np.ones((1, 2)), "closed")


# -- assemblies against exact kernels ---------------------------------------------------------------

def test_first_asymptotic_against_exact(e1, tight):
    x, t = np.arange(-10, 11), 400.0
    exact = first_green(laplacian_1d(1), 1.0, x, t, 0, tight).real
    errs = [np.max(np.abs(e1.first_asymptotic(1.0, x, t, 0, K).total.real - exact)) for K in (2, 4)]
    assert errs[0] < 2e-6 and errs[1] < errs[0] / 50


def test_first_asymptotic_requires_K_at_least_order(e1):
    with pytest.raises(ValueError):
        e1.first_asymptotic(1.0, 0.0, 10.0, 0, 1)


def test_first_asymptotic_term_bookkeeping(e1):
    val = first_asymptotic(laplacian_1d(1), 1.0, np.array([0.0, 3.0]), 50.0, 0, 3)
    assert [k for k, _ in val.terms] == [0, 1, 2, 3]
    np.testing.assert_allclose(sum(v for _, v in val.terms), val.total)
    assert np.all(val.terms[1][1] == 0)


def test_second_asymptotic_origin_branch_2d(tight):
    t = 2000.0
    exact = second_green(simple_walk(2), 1.0, np.zeros((1, 2)), t, tight)[0].real
    approx = second_asymptotic(simple_walk(2), 1.0, np.zeros((1, 2)), t, 4).total[0].real
    assert approx == pytest.approx(exact, abs=1e-6)
    assert approx == pytest.approx(math.log(t) / (4 * math.pi) + S0_SIMPLE_WALK_2D, abs=1e-3)


def test_second_asymptotic_rejects_mixed_origin(e2):
    with pytest.raises(ValueError):
        e2.second_asymptotic(1.0, np.array([[0, 0], [1, 0]]), 10.0)


def test_second_asymptotic_3d_against_exact(tight):
    e3 = expansion_for(simple_walk(3))
    pts = np.array([[1.0, 0.0, 0.0], [2.0, 1.0, 0.0]])
    t = 200.0
    exact = second_green(simple_walk(3), 1.0, pts, t, tight).real
    approx = e3.second_asymptotic(1.0, pts, t, 2).total.real
    np.testing.assert_allclose(approx, exact, atol=5e-5)


def test_remainder_probe_slope_first_kernel(e1):
    probe = e1.remainder_probe(1.0, 0, 2, "first", [64.0, 128.0, 256.0], 32)
    assert probe.slope <= -probe.expected_exponent + 0.1
    assert probe.expected_exponent == pytest.approx(2.0)
    with pytest.raises(ValueError):
        e1.remainder_probe(1.0, 0, 2, "first", [64.0, 128.0], 32)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.0, 8.0))
def test_gaussian_profile_even_and_positive(y):
    e = expansion_for(laplacian_1d(1))
    vals = e.continuous_kernel(np.array([y, -y])).real
    assert vals[0] >= 0
    assert vals[0] == pytest.approx(vals[1], abs=1e-16)
    assert vals[0] == pytest.approx(float(gauss_1d(y)), abs=1e-15)
