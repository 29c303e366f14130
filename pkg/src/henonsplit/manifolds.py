"""Parametrization method for the unstable manifold of w under F.

P(s) = w + sum_{k>=1} a_k s^k with F(P(s)) = P(lambda s). Order n solves

    (DF(w) - lambda^n I) a_n = -[F(P)]_n (with a_n set to zero),

where the bracket is assembled from running Cauchy products of
X = P_x - w_x and Y = P_y - w_y (F is a quartic polynomial).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DomainError, ResonanceError, TruncationTooSmall
from .maps import MapFamily, RealPoint, reversor_S, reversor_S_jacobian
from .numerics import Jet1, matvec

N_CAP = 400


def _poly_coefficients(fam: MapFamily):
    """F around w: F(w + (X, Y)) - w written as polynomials in X, Y.

    Returned as two dicts keyed by monomial (X, Y, XX, XY, YY, XXX, XXY, XXXX);
    F has no other terms and the constant vanishes because w is fixed.
    """
    e = fam.eps
    wx, wy = fam.w_fixed
    # expand each F-monomial around (wx, wy)
    # F_x = x + y + 2x^2 - 2xy - y^2/2 - 8x^3 - 4x^2 y - 8x^4 + e(4x^2 + 2x + y - 1/2) - e^2/2
    # F_y = y - 4xy - y^2 - 16x^3 - 8x^2 y - 16x^4 + e(8x^2 + 4x + 2y) - e^2
    cx = {
        "X": 1 + 4 * wx - 2 * wy - 24 * wx ** 2 - 8 * wx * wy - 32 * wx ** 3 + e * (8 * wx + 2),
        "Y": 1 - 2 * wx - wy - 4 * wx ** 2 + e,
        "XX": 2 - 24 * wx - 4 * wy - 48 * wx ** 2 + 4 * e,
        "XY": -2 - 8 * wx,
        "YY": -fam.ctx.mpf(1) / 2,
        "XXX": -8 - 32 * wx,
        "XXY": -4,
        "XXXX": -8,
    }
    cy = {
        "X": -4 * wy - 48 * wx ** 2 - 16 * wx * wy - 64 * wx ** 3 + e * (16 * wx + 4),
        "Y": 1 - 4 * wx - 2 * wy - 8 * wx ** 2 + 2 * e,
        "XX": -48 * wx - 8 * wy - 96 * wx ** 2 + 8 * e,
        "XY": -4 - 16 * wx,
        "YY": -1,
        "XXX": -16 - 64 * wx,
        "XXY": -8,
        "XXXX": -16,
    }
    return cx, cy


def unit_eigenvector(fam: MapFamily, lam):
    """lambda-eigenvector of DF(w), unit length, positive first component."""
    ctx = fam.ctx
    (a11, a12), (a21, a22) = fam.F.jacobian(fam.w_fixed.as_tuple())
    v = (a12, lam - a11) if abs(a12) >= abs(a21) else (lam - a22, a21)
    n = ctx.sqrt(v[0] ** 2 + v[1] ** 2)
    v = (v[0] / n, v[1] / n)
    if v[0] < 0:
        v = (-v[0], -v[1])
    return v


def parametrization_coefficients(fam: MapFamily, a1, N: int):
    """Raw coefficients a_0..a_N for a given first-order vector a1."""
    ctx = fam.ctx
    lam = fam.lambda_plus
    cx, cy = _poly_coefficients(fam)
    zero = ctx.zero
    X = [zero] * (N + 1)
    Y = [zero] * (N + 1)
    X[1], Y[1] = a1
    XX, XY, YY, X3, X2Y, X4 = ([zero] * (N + 1) for _ in range(6))
    A = ((cx["X"], cx["Y"]), (cy["X"], cy["Y"]))
    guard = fam.pc.tol(0.5)

    def conv(u, v, n):
        return ctx.fdot(zip(u[: n + 1], v[n::-1]))

    def products(n):
        XX[n] = conv(X, X, n)
        XY[n] = conv(X, Y, n)
        YY[n] = conv(Y, Y, n)
        X3[n] = conv(XX, X, n)
        X2Y[n] = conv(XX, Y, n)
        X4[n] = conv(X3, X, n)

    products(0)
    products(1)
    lam_n = lam
    for n in range(2, N + 1):
        lam_n *= lam
        if min(abs(lam_n - fam.lambda_plus), abs(lam_n - fam.lambda_minus)) < guard:
            raise ResonanceError("lambda^n hits the spectrum", n=n)
        products(n)  # with X[n] = Y[n] = 0
        fx = cx["XX"] * XX[n] + cx["XY"] * XY[n] + cx["YY"] * YY[n] + cx["XXX"] * X3[n] + cx["XXY"] * X2Y[n] + cx["XXXX"] * X4[n]
        fy = cy["XX"] * XX[n] + cy["XY"] * XY[n] + cy["YY"] * YY[n] + cy["XXX"] * X3[n] + cy["XXY"] * X2Y[n] + cy["XXXX"] * X4[n]
        m11, m22 = A[0][0] - lam_n, A[1][1] - lam_n
        det = m11 * m22 - A[0][1] * A[1][0]
        X[n] = (-fx * m22 + A[0][1] * fy) / det
        Y[n] = (-m11 * fy + A[1][0] * fx) / det
        products(n)
    return [(X[k], Y[k]) for k in range(N + 1)]


@dataclass
class ManifoldSeries:
    fam: MapFamily
    base: RealPoint
    eigenvalue: object
    coeffs: list  # a_1..a_N after rescaling
    N: int
    scale: object  # a_k = c^k * raw_k
    radius: object = 1
    residual: object = None
    diagnostics: dict = field(default_factory=dict)

    def series_eval(self, s):
        """Horner evaluation of P and dP/ds inside the disk of radius ``radius * lambda``."""
        ctx = self.fam.ctx
        x = y = dx = dy = ctx.zero
        for k in range(self.N, 0, -1):
            ax, ay = self.coeffs[k - 1]
            dx = dx * s + x
            dy = dy * s + y
            x = x * s + ax
            y = y * s + ay
        # x(s) = s * sum a_k s^{k-1}; dP/ds = sum + s * d(sum)/ds
        return (self.base.x + x * s, self.base.y + y * s), (x + s * dx, y + s * dy)

    def coefficient_norms(self):
        ctx = self.fam.ctx
        return [ctx.sqrt(a * a + b * b) for a, b in self.coeffs]


def manifold_residual(ms: ManifoldSeries, radius=None, samples: int = 17):
    """sup over sampled |s| <= radius of ||F(P(s)) - P(lambda s)||."""
    ctx = ms.fam.ctx
    radius = ctx.convert(radius if radius is not None else ms.radius)
    worst = ctx.zero
    for j in range(samples):
        s = radius * (2 * ctx.mpf(j) / (samples - 1) - 1)
        p, _ = ms.series_eval(s)
        lhs = ms.fam.F(p)
        rhs, _ = ms.series_eval(ms.eigenvalue * s)
        worst = max(worst, abs(lhs[0] - rhs[0]), abs(lhs[1] - rhs[1]))
    return worst


def default_order(bits: int) -> int:
    return max(20, min(N_CAP, math.ceil(1.4 * bits)))


def compute_unstable_series(fam: MapFamily, N: int | None = None, check: bool = True) -> ManifoldSeries:
    """Unstable manifold series, rescaled to the unit disk.

    P is entire, so the raw coefficients decay faster than any geometric
    rate. The scale c keeps every term |a_k| (c lambda)^k at most 1, which
    keeps cancellation under control on |s| <= lambda, and brings the last
    computed term below 2^-(bits+16); the series is then cut at the first
    order whose terms stay below that threshold.
    ``N`` bounds the number of raw coefficients computed.
    """
    if not fam.eps > 0:
        raise DomainError("eps must be positive", eps=float(fam.eps))
    N = N or N_CAP
    if N < 20:
        raise DomainError("N must be at least 20", N=N)
    ctx = fam.ctx
    lam = fam.lambda_plus
    raw = parametrization_coefficients(fam, unit_eigenvector(fam, lam), N)
    norms = [ctx.sqrt(x * x + y * y) for x, y in raw]
    cut = ctx.ldexp(ctx.mpf(1), -fam.pc.bits - 16)
    c = min(norms[k] ** (-ctx.one / k) for k in range(1, N + 1) if norms[k]) / lam
    # small h: also pull the last computed term under the cut
    c = min(c, (cut / 16 / norms[N]) ** (ctx.one / N) / lam)
    terms = [norms[k] * (c * lam) ** k for k in range(N + 1)]
    order = next((k for k in range(2, N + 1) if all(t < cut for t in terms[k:])), None)
    if order is None:
        raise TruncationTooSmall("series tail not below 2^-(bits+16) at the cap", N=N, last=float(terms[N]))
    coeffs, ck = [], ctx.one
    for k in range(1, order + 1):
        ck *= c
        coeffs.append((raw[k][0] * ck, raw[k][1] * ck))
    ms = ManifoldSeries(fam, fam.w_fixed, lam, coeffs, order, c, ctx.one)
    ms.diagnostics["raw_order"] = N
    ms.diagnostics["last_term"] = float(terms[order])
    if check:
        ms.residual = manifold_residual(ms)
        if ms.residual >= fam.pc.tol(0.9):
            raise TruncationTooSmall("functional-equation residual above 2^(-0.9 bits)", residual=float(ms.residual), N=order)
    return ms


def _unrolls_needed(ms: ManifoldSeries, s):
    ctx = ms.fam.ctx
    u = 0
    r = abs(s)
    while r > ms.radius:
        r /= ms.eigenvalue
        u += 1
    return u


def evaluate_manifold(ms: ManifoldSeries, s, unrolls: int | None = None):
    """P(s) as F^u(P(s lambda^-u)) with the tangent dP/ds carried by DF.

    Returns (point, Jet1(point, dP/ds)).
    """
    ctx = ms.fam.ctx
    s = ctx.convert(s)
    if unrolls is None:
        unrolls = _unrolls_needed(ms, s)
    if unrolls < 0:
        raise DomainError("unrolls must be non-negative")
    lam_u = ms.eigenvalue ** unrolls
    s0 = s / lam_u
    if abs(s0) > ms.radius * (1 + ctx.ldexp(1, -ms.fam.pc.bits // 2)):
        raise DomainError("s lambda^-unrolls outside the series disk", s=float(s), unrolls=unrolls)
    p, dp = ms.series_eval(s0)
    jet = Jet1(p, (dp[0] / lam_u, dp[1] / lam_u))
    F = ms.fam.F
    for _ in range(unrolls):
        jet = F.push(jet)
    return jet.value, jet


def stable_manifold_point(ms: ManifoldSeries, s, unrolls: int | None = None):
    """S(P(s)) and DS dP/ds; S maps the unstable branch onto the stable one."""
    _, jet = evaluate_manifold(ms, s, unrolls)
    e = ms.fam.eps
    q = reversor_S(e, jet.value)
    return q, Jet1(q, matvec(reversor_S_jacobian(e, jet.value), jet.derivative))
