from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latticeheat.polyalg import (CRational, GradedSeries, HomoPoly, Poly, expansion_polynomials,
                                 homo_add, homo_eval, multinomial, multinomial_layers,
                                 series_exp_neg, series_mul, series_power)
from latticeheat.stencil import laplacian_1d, simple_walk, taylor_layers

F = Fraction


def x1(dim=1, power=1, coeff=1):
    return Poly.monomial((power,) + (0,) * (dim - 1), coeff)


# -- CRational -----------------------------------------------------------------

def test_crational_field_operations():
    a, b = CRational(1, 2), CRational(F(1, 3), -1)
    assert a * b == CRational(F(1, 3) + 2, -1 + F(2, 3))
    assert (a / b) * b == a
    assert a - a == 0
    assert a ** -2 * a ** 2 == 1
    assert complex(a.conjugate()) == complex(1, -2)


def test_crational_division_by_exact_zero():
    with pytest.raises(ZeroDivisionError):
        CRational(1) / CRational(0)


def test_crational_mixes_with_floats_as_complex():
    assert CRational(F(1, 2)) + 0.25 == pytest.approx(0.75)
    assert isinstance(CRational(1) * 1.5, complex)


# -- Poly / HomoPoly -------------------------------------------------------------

def test_additive_inverse_gives_zero():
    p = x1(power=2)
    assert (p + (-p)).is_zero()


def test_doubling():
    p = Poly.monomial((1, 1), 1)
    assert homo_add(HomoPoly.from_poly(p, 2), HomoPoly.from_poly(p, 2)) == Poly.monomial((1, 1), 2)


def test_homo_add_rejects_degree_mismatch():
    with pytest.raises(ValueError, match="degree"):
        homo_add(HomoPoly(1, 2, {(2,): 1}), HomoPoly(1, 4, {(4,): -1}))


def test_homopoly_rejects_mixed_terms():
    with pytest.raises(ValueError):
        HomoPoly(2, 2, {(2, 0): 1, (1, 0): 1})


def test_homo_eval_examples():
    norm2 = Poly(2, {(2, 0): 1, (0, 2): 1})
    assert homo_eval(norm2, (1, 1)) == 2
    assert homo_eval(Poly(2), (0.3, 5.0)) == 0
    # b_1 = 1/12 for the second-difference symbol (Taylor of 2(1 - cos))
    assert homo_eval(Poly(1, {(4,): F(1, 12)}), (2,)) == F(4, 3)


def test_zero_polynomial_degree_conventions():
    assert Poly(3).degree == -1
    assert HomoPoly(2, 5).degree == 5


def test_json_round_trip_exact_and_float():
    p = Poly(2, {(2, 0): F(-1, 12), (0, 1): CRational(1, F(2, 7))})
    assert Poly.from_json(p.to_json()) == p
    q = Poly(1, {(3,): 0.1 + 2j})
    assert Poly.from_json(q.to_json()) == q


def test_multinomial_layers_count_and_coefficients():
    exps = list(multinomial_layers(3, 4))
    assert len(exps) == 15  # C(4 + 2, 2)
    assert all(sum(e) == 4 for e in exps)
    assert multinomial((2, 1, 1)) == 12
    assert sum(multinomial(e) for e in exps) == 3 ** 4


coeffs = st.fractions(min_value=-5, max_value=5, max_denominator=7)
exps2 = st.tuples(st.integers(0, 3), st.integers(0, 3))
polys2 = st.dictionaries(exps2, coeffs, max_size=4).map(lambda d: Poly(2, d))


@settings(max_examples=60, deadline=None)
@given(polys2, polys2, polys2)
def test_ring_axioms(p, q, r):
    assert p + q == q + p
    assert p * q == q * p
    assert p * (q + r) == p * q + p * r
    assert (p * q) * r == p * (q * r)


@settings(max_examples=60, deadline=None)
@given(polys2, polys2, st.tuples(coeffs, coeffs))
def test_evaluation_is_a_ring_homomorphism(p, q, point):
    assert (p * q).evaluate_exact(point) == p.evaluate_exact(point) * q.evaluate_exact(point)
    xi = np.array([float(point[0]), float(point[1])])
    assert (p + q).evaluate(xi) == pytest.approx(complex(p.evaluate_exact(point) + q.evaluate_exact(point)),
                                                 abs=1e-9)


# -- graded series ---------------------------------------------------------------

def _series_1d(layers, offset=2, K=4):
    return GradedSeries(1, 2, offset, K, layers)


def test_graded_series_rejects_incompatible_degree():
    with pytest.raises(ValueError, match="incompatible"):
        GradedSeries(1, 2, 2, 4, {1: x1(power=4)})


def test_series_mul_identity():
    T = _series_1d({0: x1(power=2), 2: x1(power=4, coeff=F(-1, 12))})
    one = GradedSeries.one(1, 2, 4)
    assert series_mul(one, T, 4).layers == T.layers


def test_series_square_of_single_layer():
    b1 = F(1, 12)
    S = _series_1d({1: x1(power=3, coeff=b1)}, offset=2)  # degree 1 + 2
    sq = series_mul(S, S, 4)
    assert sq.layers == {2: x1(power=6, coeff=b1 ** 2)}
    assert b1 ** 2 == F(1, 144)


def test_series_truncation_drops_high_grades():
    S = _series_1d({1: x1(power=3), 3: x1(power=5)}, offset=2, K=4)
    assert max(series_mul(S, S, 3).grades()) <= 3
    assert series_mul(S, S, 3).max_grade == 3


def test_series_power_matches_repeated_product():
    S = _series_1d({0: x1(power=2), 2: x1(power=4, coeff=F(-1, 12))}, K=4)
    assert series_power(S, 3, 4) == series_mul(series_mul(S, S, 4), S, 4)


def test_exp_neg_of_empty_is_one():
    E = series_exp_neg(GradedSeries(1, 2, 2, 5), 5)
    assert E.layers == {0: Poly.constant(1)}


def test_exp_neg_refuses_grade_zero():
    with pytest.raises(ValueError):
        series_exp_neg(_series_1d({0: x1(power=2)}), 4)


def test_exp_neg_second_difference_layers():
    # A(theta) = 2(1 - cos theta): layers theta^2, -theta^4/12, theta^6/360, -theta^8/20160
    A = taylor_layers(laplacian_1d(1), 4)
    E = series_exp_neg(A.without_grade_zero(), 4)
    assert E.layer(1).is_zero() and E.layer(3).is_zero()
    assert E.layer(2) == x1(power=4, coeff=F(1, 12))
    # grade 4: -theta^6/360 + (theta^4/12)^2 / 2
    assert E.layer(4) == x1(power=6, coeff=F(-1, 360)) + x1(power=8, coeff=F(1, 288))


def test_expansion_polynomials_grade_zero_and_middle_layers():
    for J in range(3):
        R = expansion_polynomials(taylor_layers(laplacian_1d(2), 6), J, 6)
        assert R.layer(0) == x1(power=2 * J, coeff=(-1) ** J)
        for k in (1, 2, 3):  # below the approximation order 4
            assert R.layer(k).is_zero()


def test_expansion_polynomials_degree_bookkeeping():
    R = expansion_polynomials(taylor_layers(simple_walk(2), 4), 1, 4)
    for k, layer in R.layers.items():
        for n in layer.degrees():
            gap = n - k - R.offset
            assert gap >= 0 and gap % R.order == 0


@pytest.mark.parametrize("J", [0, 1, 2])
def test_expansion_polynomials_reproduce_the_scaled_symbol(J):
    # (-A(s xi))^J exp(-t A(s xi)) with s = t^-1/2 against the truncated series
    K = 6
    st_ = laplacian_1d(1)
    R = expansion_polynomials(taylor_layers(st_, K), J, K)
    xi = np.array([0.3, 1.0, 1.7])
    errs = []
    for t in (1e2, 1e3):
        A = st_.symbol(xi / np.sqrt(t)).real
        exact = (-A) ** J * np.exp(-t * A)
        approx = sum(t ** (-k / 2 - J) * R.layer(k).evaluate(xi).real for k in R.grades())
        errs.append(np.max(np.abs(exact - approx * np.exp(-xi ** 2))))
    # next layer is grade K + 2 = 8, so the error scales as t^-(4 + J)
    assert errs[1] < errs[0] * 10 ** -(4 + J) * 3
