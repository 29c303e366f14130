from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from henonsplit.errors import DomainError
from henonsplit.maps import (
    F0,
    F1,
    F2,
    G,
    F_by_conjugation,
    F_jacobian,
    F_series,
    MapFamily,
    eigenvalues_closed_form,
    eigenvalues_stable,
    eps_from_h,
    eps_from_h_closed_form,
    fix_S_distance,
    h_from_eps,
    reversor_P,
    reversor_S,
    reversor_S_by_conjugation,
)
from henonsplit.numerics import PrecisionContext, det2

PC = PrecisionContext(256)
coord = st.floats(-0.8, 0.8, allow_nan=False)
eps_st = st.sampled_from(["0.01", "0.1", "0.37"])


def _pt(x, y):
    return (PC.mpf(x), PC.mpf(y))


def _close(a, b, tol=PC.tol(1.0, 20)):
    return max(abs(a[0] - b[0]), abs(a[1] - b[1])) < tol


@given(coord, coord, eps_st)
@settings(max_examples=60, deadline=None)
def test_symplectic(x, y, e):
    assert abs(det2(F_jacobian(PC.mpf(e), _pt(x, y))) - 1) < PC.tol(1.0, 16)


@given(coord, coord, eps_st)
@settings(max_examples=60, deadline=None)
def test_reversors_are_involutions(x, y, e):
    e = PC.mpf(e)
    z = _pt(x, y)
    S = lambda q: reversor_S(e, q)
    F = lambda q: F_by_conjugation(e, q)
    assert _close(S(S(z)), z)
    assert _close(reversor_P(reversor_P(z)), z)
    assert _close(S(F(S(F(z)))), z)
    PG = lambda q: reversor_P(G(e, q))
    assert _close(PG(PG(z)), z)


@given(coord, coord, eps_st)
@settings(max_examples=40, deadline=None)
def test_G_squared_is_F(x, y, e):
    e = PC.mpf(e)
    z = _pt(x, y)
    assert _close(G(e, G(e, z)), F_by_conjugation(e, z))


@given(coord, coord, eps_st)
@settings(max_examples=40, deadline=None)
def test_reversor_closed_form_matches_conjugation(x, y, e):
    e = PC.mpf(e)
    z = _pt(x, y)
    assert _close(reversor_S(e, z), reversor_S_by_conjugation(e, z))


@given(st.fractions(-1, 1, max_denominator=50), st.fractions(-1, 1, max_denominator=50), st.fractions(0, 1, max_denominator=50))
@settings(max_examples=60, deadline=None)
def test_F_series_is_exact_in_eps(x, y, e):
    z = (Fraction(x), Fraction(y))
    e = Fraction(e)
    lhs = F_by_conjugation(e, z)
    rhs = tuple(a + e * b + e * e * c for a, b, c in zip(F0(z), F1(z), F2(z)))
    assert lhs == rhs
    assert F_series(e, z) == rhs


def test_fixed_points_and_eigenvalues():
    fam = MapFamily.from_eps(PC, "0.1")
    w = fam.w_fixed.as_tuple()
    assert _close(fam.F(w), w)
    lp, lm = fam.lambda_plus, fam.lambda_minus
    cp, cm = eigenvalues_closed_form(PC.mp, fam.eps)
    assert abs(lp - cp) < PC.tol(0.9) and abs(lm - cm) < PC.tol(0.9)
    assert abs(lp * lm - 1) < PC.tol(1.0, 4)


def test_stable_eigenvalues_tiny_eps():
    pc = PrecisionContext(400)
    e = pc.mp.mpf("1e-40")
    lp, lm = eigenvalues_stable(pc.mp, e)
    assert lp > 1 > lm
    assert abs(lp * lm - 1) < pc.tol(1.0, 4)


@pytest.mark.parametrize("h", ["1", "0.5", "0.2", "0.06"])
def test_h_eps_round_trip(h):
    pc = PrecisionContext.for_h(float(h))
    e = eps_from_h(pc, h)
    assert abs(e - eps_from_h_closed_form(pc, h)) < pc.tol(1.0, 12) * e
    assert abs(h_from_eps(pc, e) - pc.mp.mpf(h)) < pc.tol(1.0, 12)
    fam = MapFamily.from_h(pc, h)
    assert abs(pc.mp.log(fam.lambda_plus) - pc.mp.mpf(h)) < pc.tol(1.0, 12)


def test_domain_errors():
    with pytest.raises(DomainError):
        h_from_eps(PC, 0)
    with pytest.raises(DomainError):
        eps_from_h(PC, -1)
    with pytest.raises(DomainError):
        MapFamily.from_eps(PC, "-0.1").lambda_plus


def test_fix_S_is_the_fixed_set():
    e = PC.mpf("0.1")
    x = PC.mpf("0.3")
    z = (x, (e - 4 * x * x) / 2)
    assert fix_S_distance(e, z) == 0
    assert reversor_S(e, z) == z


@given(st.fractions(-1, 1, max_denominator=40), st.fractions(-1, 1, max_denominator=40), st.fractions(0, 1, max_denominator=40))
@settings(max_examples=40, deadline=None)
def test_S_factors_through_P_and_G(x, y, e):
    z = (Fraction(x), Fraction(y))
    assert reversor_S(Fraction(e), z) == reversor_P(G(Fraction(e), z))
