import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from henonsplit.diffeq import (
    Decomposition,
    a21_coefficient,
    a21_defect,
    decompose_periodic,
    delta,
    delta2,
    delta_bar,
    delta_inverse,
    lattice_function,
    lattice_solution,
    model_equation,
    relative_residual,
    residual_decay_exponent,
    shift_back,
    shift_forward,
    wkb_exponents,
    wkb_solution,
    wronskian,
    wronskian_asymptotic,
)
from henonsplit.errors import BranchError, DegenerateWronskian, DomainError, TailDivergence
from henonsplit.numerics import PrecisionContext

PC = PrecisionContext(256)
CTX = PC.mp
LIM = PC.tol(1.0, 16)

re_st = st.floats(-10, 10, allow_nan=False)
im_st = st.floats(-10, -0.5, allow_nan=False)


def _f(t):
    return 1 / (t + CTX.mpc(0.3, 0.7)) ** 2


def _g(t):
    return CTX.exp(t / 10) * CTX.cos(t / 3)


@given(re_st, im_st)
@settings(max_examples=30, deadline=None)
def test_operator_identities(x, y):
    t = CTX.mpc(x, y)
    f = _f
    assert abs(delta2(f)(t) - delta(delta_bar(f))(t)) < LIM
    assert abs(delta2(f)(t) - delta_bar(delta(f))(t)) < LIM
    assert abs(delta_bar(shift_forward(f))(t) - delta(f)(t)) < LIM
    assert abs(delta(shift_back(f))(t) - delta_bar(f)(t)) < LIM
    fg = lambda s: _f(s) * _g(s)
    assert abs(delta(fg)(t) - (delta(f)(t) * _g(t + 1) + f(t) * delta(_g)(t))) < LIM


def test_backward_product_rule():
    t = CTX.mpc(1.5, -2)
    fg = lambda s: _f(s) * _g(s)
    correct = delta_bar(_f)(t) * _g(t - 1) + _f(t) * delta_bar(_g)(t)
    printed = delta(_f)(t) * _g(t - 1) + _f(t) * delta_bar(_g)(t)
    assert abs(delta_bar(fg)(t) - correct) < LIM
    assert abs(delta_bar(fg)(t) - printed) > 1e-3


def test_wronskian_basics():
    t = CTX.mpc(2, -3)
    assert wronskian(lambda s: 1, lambda s: s, t) == 1
    assert wronskian(_f, _f, t) == 0
    assert abs(wronskian(_f, _g, t) + wronskian(_g, _f, t)) < LIM


def test_wronskian_flow_on_lattice_solutions():
    de = model_equation()
    t0 = CTX.mpc(0.25, -20)
    u = lattice_function(t0, lattice_solution(de, t0, CTX.mpc(1), CTX.mpc(0.5, 0.2), 30))
    v = lattice_function(t0, lattice_solution(de, t0, CTX.mpc(0), CTX.mpc(1), 30))
    for k in range(2, 28):
        t = t0 + k
        W, Wb = wronskian(u, v, t), wronskian(u, v, t - 1)
        assert abs((W - Wb) + de.w(t) * W) < PC.tol(1.0, 28) * abs(W)


def test_lattice_function_rejects_off_lattice():
    f = lattice_function(CTX.mpc(0), {0: 1, 1: 2})
    with pytest.raises(DomainError):
        f(CTX.mpc(0.5))


def test_model_forms():
    scaled, literal = model_equation(), model_equation(form="literal")
    t = CTX.mpc(3, -4)
    assert scaled.f_0(t) == -2 * CTX.mpc(0, 4) / t
    assert literal.f_0(t) == CTX.mpc(0, 4) / t
    with pytest.raises(DomainError):
        model_equation(form="other")


def test_a21_identity():
    m, b, c, d = (CTX.mpc(v) for v in (0.3, 1.1 - 0.2j, 0.7j, -0.4))
    assert abs(a21_defect(m, b, c, d, a21_coefficient(m, b, c, d, CTX))) < LIM


def test_wkb_exponents():
    a, r = wkb_exponents((-3j, 4j, -1j), CTX)
    assert abs(a * a - 4 * (2 * 4j + 3j + 1j)) < LIM
    assert abs(r - ((-3j + 1j) / 2 + 0.25)) < LIM


def test_branch_cut():
    phi = wkb_solution((-3j, 4j, -1j), 1, ctx=CTX)
    with pytest.raises(BranchError):
        phi(CTX.mpc(20, 0))


def test_wkb_residual_decays():
    de = model_equation()
    phi = wkb_solution(de.leading_coeffs, 1, order=1, b1="derived", ctx=CTX)
    assert relative_residual(de, phi, CTX.mpc(0, -200)) < relative_residual(de, phi, CTX.mpc(0, -20))
    assert residual_decay_exponent(de, phi, [20, 40, 80, 120, 200]) < -1


@pytest.mark.parametrize("order,b1", [(0, "stated"), (1, "stated"), (1, "derived")])
def test_wronskian_asymptotics(order, b1):
    """W(phi+, phi-) / (-a (tau+1)^r tau^(r-1/2)) -> 1 at rate 1/|tau|."""
    de = model_equation()
    a, r = wkb_exponents(de.leading_coeffs, CTX)
    pp = wkb_solution(de.leading_coeffs, 1, order, b1, CTX)
    pm = wkb_solution(de.leading_coeffs, -1, order, b1, CTX)
    errs = [abs(wronskian(pp, pm, t) / wronskian_asymptotic(a, r, t, CTX) - 1) for t in (CTX.mpc(0, -200), CTX.mpc(0, -2000))]
    assert errs[1] < 0.02
    assert 8 < errs[0] / errs[1] < 12


def test_decompose_synthetic():
    de = model_equation()
    pp = wkb_solution(de.leading_coeffs, 1, ctx=CTX)
    pm = wkb_solution(de.leading_coeffs, -1, ctx=CTX)
    u = lambda t: 2 * pp(t) + 3 * pm(t)
    dec = decompose_periodic(pp, pm, u)
    t = CTX.mpc(0.3, -50)
    assert abs(dec.alpha_plus(t) - 2) < 1e-12
    assert abs(dec.alpha_minus(t) - 3) < 1e-12


def test_decompose_degenerate():
    dec = decompose_periodic(_f, _f, _g)
    with pytest.raises(DegenerateWronskian):
        dec.alpha_plus(CTX.mpc(1, -1))


def test_periodicity_residual():
    dec = Decomposition(lambda t: CTX.sin(2 * CTX.pi * t), lambda t: t)
    assert dec.periodicity_residual(CTX.mpc(0.2, -1)) == 1


@pytest.mark.parametrize("tau", [(0.5, -3), (-2, -6), (4, -0.5)])
def test_delta_inverse(tau):
    t = CTX.mpc(*tau)
    g = lambda s: 1 / s ** 4
    u0, u1 = delta_inverse(g, t, PC), delta_inverse(g, t + 1, PC)
    assert abs(u1 - u0 - g(t)) < LIM * abs(g(t))


def test_delta_inverse_geometric():
    t = CTX.mpc(0.5, -1)
    q = CTX.mpf("0.5")
    g = lambda s: q ** s
    assert abs(delta_inverse(g, t, PC) - (-(q ** t) / (1 - q))) < LIM


def test_delta_inverse_divergent():
    with pytest.raises(TailDivergence):
        delta_inverse(lambda s: CTX.exp(s / 50), CTX.mpc(0, -1), PC, direct_max=100)
