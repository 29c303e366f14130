"""The area-preserving Henon family and its conjugates.

H(x, y) = (y, -x + 3 + eps - y^2). The fixed point p = (x_e, x_e) with
x_e = -1 + sqrt(4 + eps) is a saddle of H^2 for eps > 0. The affine change
T moves it to w near the origin, where H^2 becomes F = T H^2 T^{-1}.

Everything below ``MapFamily`` is written against plain arithmetic so it
runs unchanged on mpf, mpc, Fraction and sympy expressions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

from .errors import DomainError, NonConvergence
from .numerics import Jet1, PrecisionContext, det2, matmul, matvec


# ---------------------------------------------------------------------------
# Generic closed forms
# ---------------------------------------------------------------------------


def henon(eps, z):
    x, y = z
    return (y, -x + 3 + eps - y * y)


def henon_jacobian(eps, z):
    return ((0, 1), (-1, -2 * z[1]))


def henon2(eps, z):
    return henon(eps, henon(eps, z))


def henon2_jacobian(eps, z):
    return matmul(henon_jacobian(eps, henon(eps, z)), henon_jacobian(eps, z))


def conj_T(z):
    x, y = z
    return ((y - 1) / 2, x + y - 2)


def conj_T_inverse(z):
    u, v = z
    return (v - 2 * u + 1, 2 * u + 1)


def _half(z):
    return (z[0] * 0 + 1) / 2


def conj_T_jacobian(z):
    return ((0, _half(z)), (1, 1))


def reflect_R(z):
    x, y = z
    return (y, x)


def F0(z):
    x, y = z
    x2 = x * x
    return (
        x + y + 2 * x2 - 2 * x * y - y * y / 2 - 8 * x2 * x - 4 * x2 * y - 8 * x2 * x2,
        y - 4 * x * y - y * y - 16 * x2 * x - 8 * x2 * y - 16 * x2 * x2,
    )


def F1(z):
    x, y = z
    return (4 * x * x + 2 * x + y - (x * 0 + 1) / 2, 8 * x * x + 4 * x + 2 * y)


def F2(z):
    x, y = z
    zero = x * 0
    return (zero - (zero + 1) / 2, zero - 1)


def F_series(eps, z):
    """F0 + eps F1 + eps^2 F2, which equals T H^2 T^{-1} identically."""
    a, b, c = F0(z), F1(z), F2(z)
    return (a[0] + eps * b[0] + eps * eps * c[0], a[1] + eps * b[1] + eps * eps * c[1])


def F_series_eval(order_term: int, z):
    if order_term == 0:
        return F0(z)
    if order_term == 1:
        return F1(z)
    if order_term == 2:
        return F2(z)
    raise DomainError("order_term must be 0, 1 or 2", order_term=order_term)


def F_jacobian(eps, z):
    x, y = z
    return (
        (1 + 4 * x - 2 * y - 24 * x * x - 8 * x * y - 32 * x ** 3 + eps * (8 * x + 2), 1 - 2 * x - y - 4 * x * x + eps),
        (-4 * y - 48 * x * x - 16 * x * y - 64 * x ** 3 + eps * (16 * x + 4), 1 - 4 * x - 2 * y - 8 * x * x + 2 * eps),
    )


def F0_jacobian(z):
    return F_jacobian(0, z)


def F_by_conjugation(eps, z):
    return conj_T(henon2(eps, conj_T_inverse(z)))


def G(eps, z):
    """T H T^{-1}; its square is F."""
    x, y = z
    return (eps / 2 - 2 * x * x - x - y / 2, eps - 4 * x * x - y)


def G_jacobian(eps, z):
    x = z[0]
    return ((-4 * x - 1, -_half(z)), (-8 * x, -1 + x * 0))


def reversor_S(eps, z):
    """T R H T^{-1}, an involution with S F S = F^{-1}."""
    x, y = z
    return (x, eps - y - 4 * x * x)


def reversor_S_jacobian(eps, z):
    return ((1, 0), (-8 * z[0], -1))


def reversor_S_by_conjugation(eps, z):
    return conj_T(reflect_R(henon(eps, conj_T_inverse(z))))


def reversor_P(z):
    """Linear involution with P G P = G^{-1}."""
    u, v = z
    return (-u + v / 2, v)


def reversor_P_jacobian(z):
    return ((-1, _half(z)), (0, 1))


def fix_S_distance(eps, z):
    """Signed vertical offset from the symmetry line Fix(S) = {y = (eps - 4x^2)/2}."""
    x, y = z
    return y - (eps - 4 * x * x) / 2


# ---------------------------------------------------------------------------
# Evaluators bound to a parameter value
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlanarMap:
    name: str
    apply: Callable
    jacobian: Callable

    def __call__(self, z):
        return self.apply(z)

    def push(self, jet: Jet1) -> Jet1:
        return jet.push(self.apply, self.jacobian)

    def then(self, other: "PlanarMap") -> "PlanarMap":
        """other after self."""
        return PlanarMap(
            f"{other.name}*{self.name}",
            lambda z: other.apply(self.apply(z)),
            lambda z: matmul(other.jacobian(self.apply(z)), self.jacobian(z)),
        )

    def det_jacobian(self, z):
        return det2(self.jacobian(z))


@dataclass(frozen=True)
class RealPoint:
    x: object
    y: object

    def __iter__(self):
        yield self.x
        yield self.y

    def as_tuple(self):
        return (self.x, self.y)


def _q_minus_2(ctx, eps):
    # sqrt(4+eps) - 2 without cancellation
    return eps / (ctx.sqrt(4 + eps) + 2)


def eigenvalues_closed_form(ctx, eps):
    """lambda_+- = 9 + 2 eps - 4 sqrt(4+eps) +- 2 sqrt(36 + 13 eps - (4 eps + 18) sqrt(4+eps) + eps^2)."""
    q = ctx.sqrt(4 + eps)
    disc = 36 + 13 * eps - (4 * eps + 18) * q + eps * eps
    base = 9 + 2 * eps - 4 * q
    root = 2 * ctx.sqrt(disc)
    return base + root, base - root


def eigenvalues_stable(ctx, eps):
    """Same roots, rewritten as (sqrt(1+a^2) +- a)^2 with a^2 = q (q - 2), q = sqrt(4+eps)."""
    q = ctx.sqrt(4 + eps)
    a = ctx.sqrt(q * _q_minus_2(ctx, eps))
    c = ctx.sqrt(1 + a * a)
    return (c + a) ** 2, 1 / (c + a) ** 2


def h_from_eps(pc: PrecisionContext, eps):
    ctx = pc.mp
    eps = ctx.convert(eps)
    if eps <= 0:
        raise DomainError("eps must be positive", eps=float(eps))
    q = ctx.sqrt(4 + eps)
    return 2 * ctx.asinh(ctx.sqrt(q * _q_minus_2(ctx, eps)))


def _dh_deps(ctx, eps):
    # h = 2 asinh(a), a^2 = q(q-2); dh/deps = (da^2/deps) / (a sqrt(1+a^2))
    q = ctx.sqrt(4 + eps)
    a2 = q * _q_minus_2(ctx, eps)
    da2 = (2 * q - 2) / (2 * q)
    return da2 / (ctx.sqrt(a2) * ctx.sqrt(1 + a2))


def eps_series_guess(ctx, h):
    return h ** 2 / 2 + 5 * h ** 4 / 192 + 25 * h ** 6 / 73728


def eps_from_h(pc: PrecisionContext, h, max_iter: int = 200):
    """Invert h = log(lambda_+) by Newton, started from the small-h series."""
    ctx = pc.mp
    h = ctx.convert(h)
    if h <= 0:
        raise DomainError("h must be positive", h=float(h))
    eps = eps_series_guess(ctx, h)
    tol = pc.tol(1.0, 8)
    for _ in range(max_iter):
        step = (h_from_eps(pc, eps) - h) / _dh_deps(ctx, eps)
        nxt = eps - step
        if nxt <= 0:
            nxt = eps / 2
        if abs(nxt - eps) <= tol * eps:
            return nxt
        eps = nxt
    raise NonConvergence("eps_from_h Newton failed", h=float(h))


def eps_from_h_closed_form(pc: PrecisionContext, h):
    """(1 + cosh(h/2))^2 - 4; an independent inverse used as a test oracle."""
    ctx = pc.mp
    c = ctx.cosh(ctx.convert(h) / 2)
    return (c - 1) * (c + 3)


@dataclass(frozen=True)
class MapFamily:
    pc: PrecisionContext
    eps: object
    h: object = field(default=None)

    @classmethod
    def from_eps(cls, pc: PrecisionContext, eps) -> "MapFamily":
        eps = pc.mp.convert(eps)
        h = h_from_eps(pc, eps) if eps > 0 else None
        return cls(pc, eps, h)

    @classmethod
    def from_h(cls, pc: PrecisionContext, h) -> "MapFamily":
        return cls(pc, eps_from_h(pc, h), pc.mp.convert(h))

    @property
    def ctx(self):
        return self.pc.mp

    def _require_positive(self):
        if not self.eps > 0:
            raise DomainError("eps must be positive", eps=float(self.eps))

    @cached_property
    def eigenvalues(self):
        self._require_positive()
        return eigenvalues_stable(self.ctx, self.eps)

    @property
    def lambda_plus(self):
        return self.eigenvalues[0]

    @property
    def lambda_minus(self):
        return self.eigenvalues[1]

    @cached_property
    def p_fixed(self) -> RealPoint:
        xe = -1 + self.ctx.sqrt(4 + self.eps)
        return RealPoint(xe, xe)

    @cached_property
    def w_fixed(self) -> RealPoint:
        q = self.ctx.sqrt(4 + self.eps)
        return RealPoint(q / 2 - 1, 2 * q - 4)

    def second_iterate_derivative(self):
        """D(H^2) at p_fixed: ((-1, -2y), (2y, 4y^2 - 1)) with y = x_e."""
        return henon2_jacobian(self.eps, self.p_fixed.as_tuple())

    # bound evaluators
    @cached_property
    def H(self) -> PlanarMap:
        e = self.eps
        return PlanarMap("H", lambda z: henon(e, z), lambda z: henon_jacobian(e, z))

    @cached_property
    def H2(self) -> PlanarMap:
        return self.H.then(self.H)

    @cached_property
    def F(self) -> PlanarMap:
        e = self.eps
        return PlanarMap("F", lambda z: F_series(e, z), lambda z: F_jacobian(e, z))

    @cached_property
    def G(self) -> PlanarMap:
        e = self.eps
        return PlanarMap("G", lambda z: G(e, z), lambda z: G_jacobian(e, z))

    @cached_property
    def S(self) -> PlanarMap:
        e = self.eps
        return PlanarMap("S", lambda z: reversor_S(e, z), lambda z: reversor_S_jacobian(e, z))

    @cached_property
    def F_inverse(self) -> PlanarMap:
        # S F S = F^{-1}
        return self.S.then(self.F).then(self.S)

    @staticmethod
    def P() -> PlanarMap:
        return PlanarMap("P", reversor_P, reversor_P_jacobian)


def henon_apply(fam: MapFamily, z):
    return henon(fam.eps, tuple(z))


def F_eps_apply(fam: MapFamily, z):
    return F_series(fam.eps, tuple(z))


def G_eps_apply(fam: MapFamily, z):
    return G(fam.eps, tuple(z))


def second_iterate_derivative(fam: MapFamily):
    return fam.second_iterate_derivative()


def eigenvalues(fam: MapFamily):
    return fam.eigenvalues
