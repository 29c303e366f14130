"""Second-order linear difference equations in complex time.

Operators follow the usual conventions

    (Delta f)(tau) = f(tau+1) - f(tau),      (Delta-bar f)(tau) = f(tau) - f(tau-1),
    (Delta^2 f)(tau) = f(tau+1) + f(tau-1) - 2 f(tau),
    f`(tau) = f(tau+1),                      `f(tau) = f(tau-1),

and the equations studied are

    u(tau+1)(1 + f_{+1}) + u(tau-1)(1 + f_{-1}) + u(tau)(-2 + f_0) = 0.

Dividing by 1 + f_{-1} puts them in the normalized form
Delta^2 u + w Delta u + z u = 0 with w = (f_{+1} - f_{-1})/(1 + f_{-1}) and
z = (f_0 + f_{+1} + f_{-1})/(1 + f_{-1}).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import mpmath

from .errors import BranchError, DegenerateWronskian, DomainError, TailDivergence
from .numerics import PrecisionContext

C_MINUS1 = -3j
C_0 = 4j
C_PLUS1 = -1j


# ---------------------------------------------------------------------------
# Operators
# ---------------------------------------------------------------------------


def delta(f: Callable) -> Callable:
    return lambda t: f(t + 1) - f(t)


def delta_bar(f: Callable) -> Callable:
    return lambda t: f(t) - f(t - 1)


def delta2(f: Callable) -> Callable:
    return lambda t: f(t + 1) + f(t - 1) - 2 * f(t)


def shift_forward(f: Callable) -> Callable:
    """f`"""
    return lambda t: f(t + 1)


def shift_back(f: Callable) -> Callable:
    """`f"""
    return lambda t: f(t - 1)


def delta_ops(f: Callable) -> dict:
    return {
        "delta": delta(f),
        "delta_bar": delta_bar(f),
        "delta2": delta2(f),
        "forward": shift_forward(f),
        "back": shift_back(f),
    }


def wronskian(f: Callable, g: Callable, tau):
    return f(tau) * (g(tau + 1) - g(tau)) - g(tau) * (f(tau + 1) - f(tau))


# ---------------------------------------------------------------------------
# Equations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SecondOrderDE:
    f_plus1: Callable
    f_0: Callable
    f_minus1: Callable
    leading_coeffs: tuple = (C_MINUS1, C_0, C_PLUS1)  # (c^{-1}, c^0, c^1)

    def residual(self, u: Callable, tau):
        return u(tau + 1) * (1 + self.f_plus1(tau)) + u(tau - 1) * (1 + self.f_minus1(tau)) + u(tau) * (-2 + self.f_0(tau))

    def w(self, tau):
        return (self.f_plus1(tau) - self.f_minus1(tau)) / (1 + self.f_minus1(tau))

    def z(self, tau):
        return (self.f_0(tau) + self.f_plus1(tau) + self.f_minus1(tau)) / (1 + self.f_minus1(tau))

    def normalized_residual(self, u: Callable, tau):
        return delta2(u)(tau) + self.w(tau) * delta(u)(tau) + self.z(tau) * u(tau)


def model_equation(coeffs=(C_MINUS1, C_0, C_PLUS1), form: str = "scaled") -> SecondOrderDE:
    """f_i = c^i / tau.

    In the ``"scaled"`` form the middle coefficient is -2(1 + c^0/tau), i.e.
    f_0 = -2 c^0 / tau; this is the reading under which the WKB exponents
    a^2 = 4(2c^0 - c^{-1} - c^1) and r = (c^{-1} - c^1)/2 + 1/4 hold.
    ``"literal"`` takes f_0 = c^0 / tau.
    """
    cm, c0, c1 = coeffs
    if form == "scaled":
        f0 = lambda t: -2 * c0 / t
    elif form == "literal":
        f0 = lambda t: c0 / t
    else:
        raise DomainError("form must be 'scaled' or 'literal'", form=form)
    return SecondOrderDE(lambda t: c1 / t, f0, lambda t: cm / t, (cm, c0, c1))


def lattice_solution(de: SecondOrderDE, tau0, u0, u1, steps: int) -> dict:
    """Exact solution on tau0 + {0..steps} by forward recursion, keyed by offset."""
    vals = {0: u0, 1: u1}
    for k in range(1, steps):
        t = tau0 + k
        vals[k + 1] = -(vals[k - 1] * (1 + de.f_minus1(t)) + vals[k] * (-2 + de.f_0(t))) / (1 + de.f_plus1(t))
    return vals


def lattice_function(tau0, values: dict) -> Callable:
    """Callable view of lattice samples; tau must be tau0 + integer."""

    def f(t):
        k = t - tau0
        n = int(round(float(mpmath.re(k))))
        if abs(k - n) > 1e-9:
            raise DomainError("point not on the lattice", tau=complex(t))
        return values[n]

    return f


def a21_coefficient(m, b, c, d, ctx=mpmath):
    """Root of (1 + b) a^2 - (m - d) a - c = 0 that decouples the frozen 2x2 step."""
    return (m - d + ctx.sqrt((m - d) ** 2 + 4 * c * (1 + b))) / (2 * (1 + b))


def a21_defect(m, b, c, d, a21):
    """u-coefficient of the transformed second equation; zero when a21 triangularizes."""
    return a21 * (1 + m) + c - (1 + d) * a21 - a21 * a21 * (1 + b)


# ---------------------------------------------------------------------------
# WKB solutions
# ---------------------------------------------------------------------------


def wkb_exponents(coeffs, ctx=mpmath):
    """(a, r) with a = 2 sqrt(2c^0 - c^{-1} - c^1), r = (c^{-1} - c^1)/2 + 1/4."""
    cm, c0, c1 = (ctx.mpc(c) for c in coeffs)
    return 2 * ctx.sqrt(2 * c0 - cm - c1), (cm - c1) / 2 + ctx.mpf(1) / 4


def b1_stated(coeffs, sign: int, ctx=mpmath):
    """The displayed first correction coefficient b_1^{+-}."""
    cm, c0, c1 = (ctx.mpc(c) for c in coeffs)
    num = 32 * cm ** 2 - 32 * (cm - 3) * c0 - 16 * c0 ** 2 + 8 * (2 * cm - 4 * c0 - 9) * c1 + 32 * c1 ** 2 - 24 * cm + 9
    return -sign * num / (48 * ctx.sqrt(-cm + 2 * c0 - c1))


def b1_derived(coeffs, sign: int, ctx=mpmath):
    """b_1 from the order tau^{-3/2} balance of the scaled model equation.

    With A = sign * a: b_1 = (A^4 + 24 A^2 (c^1 + c^{-1}) + 192 r^2 - 192 r + 192 r (c^1 - c^{-1})) / (96 A).
    """
    cm, c0, c1 = (ctx.mpc(c) for c in coeffs)
    a, r = wkb_exponents(coeffs, ctx)
    A = sign * a
    return (A ** 4 + 24 * A ** 2 * (c1 + cm) + 192 * r * r - 192 * r + 192 * r * (c1 - cm)) / (96 * A)


def _log_cut_positive(ctx, tau):
    """log with the cut along the positive reals, arg in (-2 pi, 0]."""
    if ctx.im(tau) == 0 and ctx.re(tau) > 0:
        raise BranchError("tau on the branch cut of tau^(1/2)", tau=complex(tau))
    lg = ctx.log(tau)
    if ctx.im(lg) > 0:
        lg -= 2j * ctx.pi
    return lg


@dataclass(frozen=True)
class WKBSolution:
    sign: int
    a: object
    r: object
    b_coeffs: tuple  # (b_1,) or ()
    ctx: object = mpmath

    def __call__(self, tau):
        ctx = self.ctx
        tau = ctx.mpc(tau)
        lg = _log_cut_positive(ctx, tau)
        root = ctx.exp(lg / 2)
        out = ctx.exp(self.sign * self.a * root + self.r * lg)
        if self.b_coeffs:
            corr = 1
            for k, b in enumerate(self.b_coeffs, start=1):
                corr += b / root ** k
            out *= corr
        return out


def wkb_solution(coeffs, sign: int, order: int = 1, b1: str = "stated", ctx=mpmath) -> WKBSolution:
    if sign not in (1, -1):
        raise DomainError("sign must be +1 or -1", sign=sign)
    a, r = wkb_exponents(coeffs, ctx)
    if order == 0:
        bs = ()
    elif b1 == "stated":
        bs = (b1_stated(coeffs, sign, ctx),)
    elif b1 == "derived":
        bs = (b1_derived(coeffs, sign, ctx),)
    else:
        raise DomainError("b1 must be 'stated' or 'derived'", b1=b1)
    return WKBSolution(sign, a, r, bs, ctx)


def wkb_phi(de: SecondOrderDE, sign: int, tau, order: int = 1, b1: str = "stated", ctx=mpmath):
    if abs(tau) < 10:
        raise DomainError("WKB evaluation needs |tau| >= 10", tau=complex(tau))
    return wkb_solution(de.leading_coeffs, sign, order, b1, ctx)(tau)


def relative_residual(de: SecondOrderDE, phi: Callable, tau):
    return abs(de.residual(phi, tau)) / abs(phi(tau))


def residual_decay_exponent(de: SecondOrderDE, phi: Callable, radii, direction=-1j):
    """Log-log slope of the relative residual along the ray tau = R * direction."""
    xs, ys = [], []
    for R in radii:
        t = mpmath.mpc(direction) * R
        xs.append(math.log(R))
        ys.append(float(mpmath.log(relative_residual(de, phi, t))))
    n = len(xs)
    mx, my = sum(xs) / n, sum(ys) / n
    return sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sum((x - mx) ** 2 for x in xs)


def wronskian_asymptotic(a, r, tau, ctx=mpmath):
    """-(tau+1)^r tau^(r - 1/2) a, the leading behavior of W(phi_+, phi_-)."""
    lt, lt1 = _log_cut_positive(ctx, ctx.mpc(tau)), _log_cut_positive(ctx, ctx.mpc(tau) + 1)
    return -a * ctx.exp(r * lt1 + (r - ctx.mpf(1) / 2) * lt)


# ---------------------------------------------------------------------------
# Periodic decomposition
# ---------------------------------------------------------------------------


@dataclass
class Decomposition:
    alpha_plus: Callable
    alpha_minus: Callable

    def periodicity_residual(self, tau):
        return max(abs(self.alpha_plus(tau + 1) - self.alpha_plus(tau)), abs(self.alpha_minus(tau + 1) - self.alpha_minus(tau)))


def decompose_periodic(phi_plus: Callable, phi_minus: Callable, u: Callable, floor=None) -> Decomposition:
    """u = alpha_+ phi_+ + alpha_- phi_- with

        alpha_+ = W(u, phi_-) / W(phi_+, phi_-),   alpha_- = -W(u, phi_+) / W(phi_+, phi_-).
    """

    def W0(tau):
        w = wronskian(phi_plus, phi_minus, tau)
        scale = abs(phi_plus(tau) * phi_minus(tau))
        lim = floor if floor is not None else mpmath.mpf(2) ** (-mpmath.mp.prec // 2)
        if abs(w) <= lim * scale:
            raise DegenerateWronskian("W(phi_+, phi_-) vanishes", tau=complex(tau))
        return w

    return Decomposition(
        lambda t: wronskian(u, phi_minus, t) / W0(t),
        lambda t: -wronskian(u, phi_plus, t) / W0(t),
    )


# ---------------------------------------------------------------------------
# Right inverse of Delta
# ---------------------------------------------------------------------------


def delta_inverse(g: Callable, tau, pc: PrecisionContext, direct_max: int = 400, anchor: float = 400.0):
    """u(tau) = -sum_{k>=0} g(tau + k), so that u(tau+1) - u(tau) = g(tau).

    Terms are summed directly until they drop below 2^-(bits+8) relative to
    the partial sum, with a geometric estimate for the remainder. A slowly
    decaying tail is summed directly up to the lattice point whose real part
    first reaches ``anchor`` and handed to mpmath's accelerated nsum from
    there; tau and tau + 1 then share the same tail, so the defining
    identity holds to rounding even when the tail is only approximate.
    """
    ctx = pc.mp
    tau = ctx.mpc(tau)
    cut = ctx.ldexp(ctx.mpf(1), -pc.bits - 8)
    total = ctx.mpc(0)
    prev = None
    first = abs(g(tau))
    for k in range(direct_max):
        term = g(tau + k)
        total += term
        mag = abs(term)
        if mag <= cut * max(1, abs(total)):
            if prev is not None and 0 < mag < abs(prev):
                q = mag / abs(prev)
                total += term * q / (1 - q)
            return -total
        prev = term
    if first > 0 and abs(prev) > first:
        raise TailDivergence("terms of the forward sum do not decay", tau=complex(tau))
    n_anchor = max(direct_max, math.ceil(anchor - float(ctx.re(tau))))
    for k in range(direct_max, n_anchor):
        total += g(tau + k)
    start = tau + n_anchor
    try:
        tail = ctx.nsum(lambda k: g(start + k), [0, ctx.inf])
    except (ValueError, ZeroDivisionError) as exc:
        raise TailDivergence("tail acceleration failed", tau=complex(tau)) from exc
    if not ctx.isfinite(tail):
        raise TailDivergence("tail acceleration diverged", tau=complex(tau))
    return -(total + tail)
