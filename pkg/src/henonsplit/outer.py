"""Real-time outer expansion of the separatrix.

x(t) = h (X0 + h X1 + ...), y(t) = h^2 (Y0 + h Y1 + ...) in the
T-coordinates. Order zero is closed form:

    X0 = sech(t)/2,   Y0 = -sech(t)(tanh(t) + sech(t))/2 + 1/4,

solving X0' = Y0 + 2 X0^2 - 1/4, Y0' = -4 X0 Y0 - 16 X0^3 + 2 X0.

For order one two forcings are available. ``"stated"`` is the printed
second-order equation

    X1'' = (1 - 6 sech^2) X1 - 1/16 + sech^4/2 - sech^2/2 - (sech - 6 sech^3) tanh / 2,

``"derived"`` comes from expanding F(gamma(t)) = gamma(t + h) directly and
reads X1'' = (1 - 6 sech^2) X1 - 1/16, whose even bounded solution is
X1 = 1/16 - sech^2/8.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError, GridMismatch, PoleProximity
from .numerics import GridFunction, LinearField, PrecisionContext, ode_solve_bvp, sech, tanh

X1_FORCINGS = ("derived", "stated")


def x0y0_eval(t, pc: PrecisionContext):
    ctx = pc.mp
    t = ctx.convert(t)
    c = ctx.cosh(t)
    if abs(c) < pc.tol(0.5):
        raise PoleProximity("t too close to a pole of sech", t=complex(t))
    s = 1 / c
    th = ctx.tanh(t)
    return (s / 2, -s * (th + s) / 2 + ctx.mpf(1) / 4)


def x0y0_derivative(t, pc: PrecisionContext):
    """Analytic derivative of the closed forms."""
    ctx = pc.mp
    t = ctx.convert(t)
    s, th = ctx.sech(t), ctx.tanh(t)
    dx = -s * th / 2
    # Y0 = -(s th + s^2)/2 + 1/4 ; (s th)' = s (1 - 2 th^2)... with s' = -s th, th' = s^2
    dy = -((-s * th) * th + s * s * s + 2 * s * (-s * th)) / 2
    return (dx, dy)


def x0y0_flow_rhs(X0, Y0):
    """Right-hand side of the order-zero flow with a single cubic term."""
    return (Y0 + 2 * X0 * X0 - (X0 * 0 + 1) / 4, -4 * X0 * Y0 - 16 * X0 ** 3 + 2 * X0)


def x0y0_flow_rhs_printed(X0, Y0):
    """The printed variant with the cubic term appearing twice."""
    return (Y0 + 2 * X0 * X0 - (X0 * 0 + 1) / 4, -4 * X0 * Y0 - 16 * X0 ** 3 - 16 * X0 ** 3 + 2 * X0)


def x0y0_ode_residual(t, pc: PrecisionContext, rhs=x0y0_flow_rhs):
    X0, Y0 = x0y0_eval(t, pc)
    dX, dY = x0y0_derivative(t, pc)
    fX, fY = rhs(X0, Y0)
    return (dX - fX, dY - fY)


def linearized_matrix(X0, Y0):
    """Matrix of the order-k linear systems: ((4 X0, 1), (2 - 4 Y0 - 48 X0^2, -4 X0))."""
    return ((4 * X0, X0 * 0 + 1), (2 - 4 * Y0 - 48 * X0 * X0, -4 * X0))


# ---------------------------------------------------------------------------
# Order one
# ---------------------------------------------------------------------------


def x1_forcing(t, kind: str = "derived"):
    """Inhomogeneous part of the X1 second-order equation (works on series)."""
    s = sech(t)
    base = t * 0 - (t * 0 + 1) / 16
    if kind == "derived":
        return base
    if kind == "stated":
        th = tanh(t)
        return base + s ** 4 / 2 - s ** 2 / 2 - (s - 6 * s ** 3) * th / 2
    raise DomainError(f"unknown forcing {kind!r}; expected one of {X1_FORCINGS}")


def x1_closed_form(t, pc: PrecisionContext):
    """Even bounded solution for the derived forcing."""
    ctx = pc.mp
    s = ctx.sech(ctx.convert(t))
    return ctx.mpf(1) / 16 - s * s / 8


def x1_first_order_forcings(t, kind: str = "derived"):
    """(g1, g2) of the first-order form

        X1' = 4 X0 X1 + Y1 + g1,   Y1' = (2 - 4 Y0 - 48 X0^2) X1 - 4 X0 Y1 + g2.

    ``"stated"`` returns the printed inhomogeneous terms; the printed pair
    also carries a different X1 coefficient, see ``x1_stated_coefficient_defect``.
    """
    s, th = sech(t), tanh(t)
    if kind == "derived":
        return s * s * th / 2, _derived_g2(s, th)
    if kind == "stated":
        g1 = s / 4 - s ** 3 / 2 + s * s * th / 2
        g2 = -(s ** 4) / 4 - s * s * th * th / 4 + s * s / 4 - (t * 0 + 1) / 16
        return g1, g2
    raise DomainError(f"unknown forcing {kind!r}")


def x1_stated_coefficient_defect(t):
    """Printed X1 coefficient of the second first-order equation minus 2 - 4 Y0 - 48 X0^2."""
    s, th = sech(t), tanh(t)
    printed = (2 * s ** 3 - 10 * s * s - 2 * s * th - 1) / 4
    return printed - (1 + 2 * s * th - 10 * s * s)


def _derived_g2(s, th):
    # With X1' = 4X0 X1 + Y1 + g1 and Y1' = L X1 - 4X0 Y1 + g2, eliminating Y1 gives
    # X1'' = (1 - 6 s^2) X1 + g1' + 4 X0 g1 + g2. The derived equation has
    # forcing -1/16, so g2 = -1/16 - g1' - 4 X0 g1, with g1 = s^2 th / 2:
    # g1' = (s^2 th)'/2 = (-2 s^2 th^2 + s^4)/2.
    g1 = s * s * th / 2
    dg1 = (-2 * s * s * th * th + s ** 4) / 2
    return -(s * 0 + 1) / 16 - dg1 - 2 * s * g1


def x1_field(pc: PrecisionContext, kind: str = "derived") -> LinearField:
    """(X1, X1') as a first-order system."""

    def A(t):
        s = sech(t)
        zero = t * 0
        return ((zero, zero + 1), (1 - 6 * s * s, zero))

    def b(t):
        return (t * 0, x1_forcing(t, kind))

    return LinearField(A, b, 2)


@dataclass
class OuterOrder:
    k: int
    grid: GridFunction
    boundary_values: tuple
    forcing: str = "derived"

    def X(self, t):
        return self.grid(t)[0]

    def dX(self, t):
        return self.grid(t)[1]

    def d2X(self, t):
        return self.grid(t, 1)[1]

    def Y(self, t, pc: PrecisionContext):
        """Y1 = X1' - 2 sech X1 - g1 (first-order form, derived forcing)."""
        ctx = pc.mp
        t = ctx.convert(t)
        X, dX = self.grid(t)
        g1 = x1_first_order_forcings(t, "derived")[0]
        return dX - 2 * ctx.sech(t) * X - g1


def solve_X1(pc: PrecisionContext, T=20, grid: int = 2000, forcing: str = "derived") -> OuterOrder:
    if T < 15:
        raise DomainError("T must be at least 15", T=T)
    ctx = pc.mp
    limit = (ctx.mpf(1) / 16, ctx.zero)
    gf = ode_solve_bvp(x1_field(pc, forcing), (limit, limit), T, grid, pc)
    return OuterOrder(1, gf, (ctx.mpf(1) / 16, ctx.zero), forcing)


def x1dd_residual(sol: OuterOrder, t, pc: PrecisionContext, kind: str | None = None):
    """X1'' - (1 - 6 sech^2) X1 - forcing, with X1'' from the dense solution."""
    ctx = pc.mp
    t = ctx.convert(t)
    kind = kind or sol.forcing
    X = sol.X(t)
    s = ctx.sech(t)
    return sol.d2X(t) - (1 - 6 * s * s) * X - x1_forcing(t, kind)


def order_k_residual(k: int, X_k, Y_k, g1, g2, t_grid, pc: PrecisionContext, dX_k=None, dY_k=None):
    """Sup-norm residual of the order-k linear system on a grid.

    X_k, Y_k, g1, g2 are sequences aligned with t_grid. Derivatives are
    taken from dX_k/dY_k when given (dense solutions), otherwise by
    centered differences on the interior nodes.
    """
    if k < 1:
        raise DomainError("k must be >= 1", k=k)
    n = len(t_grid)
    if not all(len(v) == n for v in (X_k, Y_k, g1, g2)) or (dX_k is not None and len(dX_k) != n):
        raise GridMismatch("grid functions must share the grid", n=n)
    ctx = pc.mp
    worst = ctx.zero
    rng = range(n) if dX_k is not None else range(1, n - 1)
    for i in rng:
        t = t_grid[i]
        X0, Y0 = x0y0_eval(t, pc)
        M = linearized_matrix(X0, Y0)
        if dX_k is not None:
            dX, dY = dX_k[i], dY_k[i]
        else:
            dt = t_grid[i + 1] - t_grid[i - 1]
            dX = (X_k[i + 1] - X_k[i - 1]) / dt
            dY = (Y_k[i + 1] - Y_k[i - 1]) / dt
        r1 = dX - (M[0][0] * X_k[i] + M[0][1] * Y_k[i] + g1[i])
        r2 = dY - (M[1][0] * X_k[i] + M[1][1] * Y_k[i] + g2[i])
        worst = max(worst, abs(r1), abs(r2))
    return worst


# ---------------------------------------------------------------------------
# Singularity diagnostics
# ---------------------------------------------------------------------------


@dataclass
class StripReport:
    points: list
    x_pole_products: list  # |X0| |t - i pi/2|
    y_pole_products: list  # |Y0| |t - i pi/2|^2
    max_abs_x: object


def strip_analyticity_check(path, pc: PrecisionContext, margin: float = 0.0) -> StripReport:
    """Evaluate X0, Y0 along a polyline inside |Im t| < pi/2."""
    ctx = pc.mp
    pole = ctx.mpc(0, ctx.pi / 2)
    xs, ys, pts = [], [], []
    mx = ctx.zero
    for t in path:
        t = ctx.convert(t)
        if abs(ctx.im(t)) >= ctx.pi / 2:
            raise DomainError("path leaves the strip |Im t| < pi/2", t=complex(t))
        for n in (-1, 0, 1):
            if abs(t - (pole + n * ctx.pi * 1j)) < margin:
                raise PoleProximity("path within margin of a pole", t=complex(t))
        X0, Y0 = x0y0_eval(t, pc)
        d = abs(t - pole)
        pts.append(t)
        xs.append(abs(X0) * d)
        ys.append(abs(Y0) * d * d)
        mx = max(mx, abs(X0))
    return StripReport(pts, xs, ys, mx)


def outer_curve(t, h, pc: PrecisionContext, order: int = 1):
    """(h X0 + h^2 X1, h^2 Y0 + h^3 Y1) with the derived X1 closed form."""
    ctx = pc.mp
    X0, Y0 = x0y0_eval(t, pc)
    if order == 0:
        return (h * X0, h * h * Y0)
    t = ctx.convert(t)
    s, th = ctx.sech(t), ctx.tanh(t)
    X1 = ctx.mpf(1) / 16 - s * s / 8
    dX1 = s * s * th / 4
    Y1 = dX1 - 2 * s * X1 - s * s * th / 2
    return (h * X0 + h * h * X1, h * h * Y0 + h ** 3 * Y1)
