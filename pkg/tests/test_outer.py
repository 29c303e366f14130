import pytest

from henonsplit.errors import DomainError, GridMismatch, IllConditioned, PoleProximity
from henonsplit.numerics import PrecisionContext
from henonsplit.outer import (
    order_k_residual,
    solve_X1,
    strip_analyticity_check,
    x0y0_eval,
    x0y0_flow_rhs_printed,
    x0y0_ode_residual,
    x1_closed_form,
    x1_first_order_forcings,
)

PC = PrecisionContext(128)


def test_closed_forms_solve_the_flow():
    ctx = PC.mp
    for j in range(-40, 41):
        t = ctx.mpf(j) / 2
        assert max(abs(r) for r in x0y0_ode_residual(t, PC)) < 1e-34


def test_printed_flow_variant_fails():
    res = x0y0_ode_residual(PC.mpf(1), PC, rhs=x0y0_flow_rhs_printed)
    assert abs(res[1]) > 1e-3


def test_limits_and_parity():
    ctx = PC.mp
    for T in (20, -20):
        X0, Y0 = x0y0_eval(T, PC)
        assert abs(X0) < 1e-8 and abs(Y0 - ctx.mpf(1) / 4) < 1e-8
    for t in ("0.3", "2.5", "7"):
        assert x0y0_eval(ctx.mpf(t), PC)[0] == x0y0_eval(-ctx.mpf(t), PC)[0]


def test_pole_orders():
    ctx = PC.mp
    pole = ctx.mpc(0, ctx.pi / 2)
    path = [pole - ctx.mpc(0, d) for d in ("1e-2", "1e-4", "1e-6")]
    rep = strip_analyticity_check(path, PC)
    assert abs(rep.x_pole_products[-1] - ctx.mpf(1) / 2) < 1e-5
    assert abs(rep.y_pole_products[-1] - ctx.sqrt(2) / 2) < 1e-5


def test_strip_domain_errors():
    ctx = PC.mp
    with pytest.raises(DomainError):
        strip_analyticity_check([ctx.mpc(0, 2)], PC)
    with pytest.raises(PoleProximity):
        strip_analyticity_check([ctx.mpc(0, 1.5)], PC, margin=0.2)


def test_order_k_grid_mismatch():
    with pytest.raises(GridMismatch):
        order_k_residual(1, [0, 0], [0], [0, 0], [0, 0], [0, 1], PC)


def test_order_one_closed_form_satisfies_first_order_system():
    ctx = PC.mp
    ts = [ctx.mpf(j) / 4 for j in range(-40, 41)]
    X = [x1_closed_form(t, PC) for t in ts]
    dX = [ctx.diff(lambda s: x1_closed_form(s, PC), t) for t in ts]
    g = [x1_first_order_forcings(t, "derived") for t in ts]
    Y = [d - 2 * ctx.sech(t) * x - gg[0] for t, x, d, gg in zip(ts, X, dX, g)]
    dY = [ctx.diff(lambda s: ctx.diff(lambda r: x1_closed_form(r, PC), s) - 2 * ctx.sech(s) * x1_closed_form(s, PC) - x1_first_order_forcings(s, "derived")[0], t) for t in ts]
    res = order_k_residual(1, X, Y, [gg[0] for gg in g], [gg[1] for gg in g], ts, PC, dX_k=dX, dY_k=dY)
    assert res < 1e-30


def test_X1_bvp_matches_closed_form():
    sol = solve_X1(PC, grid=200)
    ctx = PC.mp
    # the boundary condition X1(+-20) = 1/16 is off by sech(20)^2 / 8
    for t in ("-15", "-1.3", "0", "2.2", "19.5"):
        assert abs(sol.X(ctx.mpf(t)) - x1_closed_form(ctx.mpf(t), PC)) < 1e-17


def test_stated_forcing_has_no_bounded_solution():
    with pytest.raises(IllConditioned):
        solve_X1(PC, grid=200, forcing="stated")
