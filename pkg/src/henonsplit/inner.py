"""Inner separatrices of F0 in complex time and the splitting determinant.

alpha^-(tau) solves F0(alpha(tau)) = alpha(tau + 1) with
alpha -> 0 as Re tau -> -infinity. Its asymptotic expansion

    x ~ sum_k a_k tau^-k,   y ~ sum_k b_k tau^-k,   a_1 = i/2, b_2 = (1 - i)/2,

is divergent (a_k grows like (k-1)!/(2 pi)^k) but, cut near its smallest
term at |tau| = R, it seeds the orbit to full precision. a_2 is free and
sets the translation of the solution.

The stable partner of the same sign branch is
alpha^+(tau) = S0(conj(alpha^-_{conj a2}(-conj tau))) with S0(x, y) = (x, -y - 4x^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DepthInsufficient, DomainError, SeedInsufficient, TrajectoryOverflow
from .maps import F0, F0_jacobian, reversor_S
from .numerics import Jet1, PrecisionContext, integrate_segment, matvec

R_SEED = 30
MATCHED_A2 = 1 / 8  # a_2 that matches the first-order outer solution at the pole
OVERFLOW = 1e6


def seed_parameters(pc: PrecisionContext):
    """(R, K): truncation order about bits ln 2 and seed depth R >= K / (2 pi) + 10."""
    K = math.ceil(1.05 * pc.mp.prec * math.log(2)) + 10
    R = max(R_SEED, math.ceil(K / (2 * math.pi)) + 10)
    return R, K


# ---------------------------------------------------------------------------
# Asymptotic series
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InnerSeries:
    a2: object
    a: tuple  # a[0..K]
    b: tuple  # b[0..K+1]

    def __call__(self, tau):
        """(x, y) and d/dtau by Horner in z = 1/tau."""
        z = 1 / tau
        x, dx = _horner(self.a, z)
        y, dy = _horner(self.b, z)
        return (x, y), (-z * z * dx, -z * z * dy)


def _horner(c, z):
    v = d = z * 0
    for k in range(len(c) - 1, 0, -1):
        v = v * z + c[k]
    for k in range(len(c) - 1, 1, -1):
        d = d * z + k * c[k]
    return v * z, d * z + c[1]


_series_cache: dict = {}


def inner_series(pc: PrecisionContext, a2, K: int) -> InnerSeries:
    """Coefficients through a_K, b_{K+1}.

    Matching powers of tau in F0(alpha(tau)) = alpha(tau + 1) gives at each
    order k a 2x2 system for (a_k, b_{k+1}); at k = 2 it is singular and a_2
    is the free parameter.
    """
    ctx = pc.mp
    a2 = ctx.mpc(a2)
    key = (pc, complex(a2), str(a2), K)
    if key in _series_cache:
        return _series_cache[key]
    zero = ctx.mpc(0)
    I = ctx.mpc(0, 1)
    a = [zero] * (K + 3)
    b = [zero] * (K + 4)
    a[1] = I / 2
    b[2] = (1 - I) / 2
    P = {n: [zero] * (K + 4) for n in ("xx", "xy", "yy", "x3", "x2y", "x4")}

    def conv(u, v, m):
        return ctx.fdot(zip(u[: m + 1], v[m::-1]))

    def update(m):
        P["xx"][m] = conv(a, a, m)
        P["xy"][m] = conv(a, b, m)
        P["yy"][m] = conv(b, b, m)
        P["x3"][m] = conv(P["xx"], a, m)
        P["x2y"][m] = conv(P["xx"], b, m)
        P["x4"][m] = conv(P["x3"], a, m)

    for m in range(4):
        update(m)
    binom = ctx.binomial

    def known(m):
        # x-equation at tau^-m and y-equation at tau^-(m+1), unknowns set to zero
        s1 = ctx.fsum(a[j] * binom(-j, m - j) for j in range(1, m))
        r1 = s1 - (b[m] + 2 * P["xx"][m] - 2 * P["xy"][m] - P["yy"][m] / 2 - 8 * P["x3"][m] - 4 * P["x2y"][m] - 8 * P["x4"][m])
        s2 = ctx.fsum(b[j] * binom(-j, m + 1 - j) for j in range(2, m + 1))
        r2 = s2 - (-4 * P["xy"][m + 1] - P["yy"][m + 1] - 16 * P["x3"][m + 1] - 8 * P["x2y"][m + 1] - 16 * P["x4"][m + 1])
        return r1, r2

    for k in range(2, K + 1):
        update(k + 1)
        update(k + 2)
        r1, r2 = known(k + 1)
        m00, m01 = -k - 4 * a[1], -1
        m10, m11 = 4 * b[2] + 48 * a[1] ** 2, -(k + 1) + 4 * a[1]
        if k == 2:
            a[2] = a2
            b[3] = r1 + m00 * a2
        else:
            det = m00 * m11 - m01 * m10
            a[k] = (-r1 * m11 + m01 * r2) / det
            b[k + 1] = (-m00 * r2 + m10 * r1) / det
        update(k + 1)
        update(k + 2)
    out = InnerSeries(a2, tuple(a[: K + 1]), tuple(b[: K + 2]))
    _series_cache[key] = out
    return out


def inner_seed(tau, a2, pc: PrecisionContext, order: int | None = 3, R_seed: float = R_SEED):
    """Truncated ansatz at tau with its tau-derivative.

    ``order=3`` keeps a_1/tau + a_2/tau^2 in x and b_2/tau^2 + b_3/tau^3 in y;
    ``order=None`` uses the full optimally truncated series.
    """
    ctx = pc.mp
    tau = ctx.mpc(tau)
    if not (ctx.re(tau) < 0 and abs(ctx.re(tau)) >= R_seed):
        raise DomainError("seed needs Re tau <= -R_seed", tau=complex(tau), R_seed=R_seed)
    K = seed_parameters(pc)[1] if order is None else order
    ser = inner_series(pc, a2, max(K, 3))
    if order is not None:
        ser = InnerSeries(ser.a2, ser.a[: order], ser.b[: order + 1])
    value, deriv = ser(tau)
    return value, Jet1(value, deriv)


# ---------------------------------------------------------------------------
# Separatrices
# ---------------------------------------------------------------------------


def _forward(value, deriv, n: int):
    jet = Jet1(value, deriv)
    for _ in range(n):
        jet = Jet1(F0(jet.value), matvec(F0_jacobian(jet.value), jet.derivative))
        if abs(jet.value[0]) > OVERFLOW or abs(jet.value[1]) > OVERFLOW:
            raise TrajectoryOverflow("inner orbit left the bounded region")
    return jet


def _alpha_minus_raw(tau, a2, pc, R, K):
    ctx = pc.mp
    n = max(0, math.ceil(float(ctx.re(tau)) + R))
    ser = inner_series(pc, a2, K)
    value, deriv = ser(tau - n)
    return _forward(value, deriv, n)


def compute_alpha_minus(tau, a2, pc: PrecisionContext, R_seed: float | None = None, check: bool = True):
    """alpha^-(tau) and its tau-derivative, seeded at Re tau <= -R_seed.

    With ``check`` the computation is repeated from R_seed + 10 and must
    agree to 2^(-0.6 bits).
    """
    ctx = pc.mp
    tau = ctx.mpc(tau)
    R, K = seed_parameters(pc)
    R = R if R_seed is None else R_seed
    jet = _alpha_minus_raw(tau, a2, pc, R, K)
    if check:
        other = _alpha_minus_raw(tau, a2, pc, R + 10, K)
        diff = max(abs(jet.value[0] - other.value[0]), abs(jet.value[1] - other.value[1]))
        if diff >= pc.tol(0.6):
            raise SeedInsufficient("seed depth not converged", tau=complex(tau), diff=float(diff))
    return jet.value, jet


def compute_alpha_plus(tau, a2, pc: PrecisionContext, R_seed: float | None = None, check: bool = True):
    """alpha^+(tau) = S0(conj alpha^-_{conj a2}(-conj tau)), with its tau-derivative."""
    ctx = pc.mp
    tau = ctx.mpc(tau)
    _, jet = compute_alpha_minus(-ctx.conj(tau), ctx.conj(ctx.mpc(a2)), pc, R_seed, check)
    x, y = (ctx.conj(v) for v in jet.value)
    dx, dy = (-ctx.conj(v) for v in jet.derivative)
    value = reversor_S(0, (x, y))
    return value, Jet1(value, (dx, -dy - 8 * x * dx))


def stable_by_reflection(tau, a2, pc: PrecisionContext):
    """S0(alpha^-(-tau)) without conjugation: the opposite sign branch."""
    _, jet = compute_alpha_minus(-pc.mp.mpc(tau), a2, pc, check=False)
    return reversor_S(0, jet.value)


def functional_equation_residual(tau, a2, pc: PrecisionContext, plus: bool = False):
    """|F0(alpha(tau)) - alpha(tau + 1)| with both sides computed independently."""
    f = compute_alpha_plus if plus else compute_alpha_minus
    R = seed_parameters(pc)[0]
    v0, _ = f(tau, a2, pc, R_seed=R, check=False)
    # a half-step deeper seed so the two sides do not share an orbit
    v1, _ = f(pc.mp.mpc(tau) + 1, a2, pc, R_seed=R + 0.5, check=False)
    w = F0(v0)
    return max(abs(w[0] - v1[0]), abs(w[1] - v1[1]))


# ---------------------------------------------------------------------------
# Difference and determinant
# ---------------------------------------------------------------------------


def inner_difference(tau, a2, pc: PrecisionContext, check: bool = True):
    """(u, v) = alpha^+ - alpha^-."""
    p, _ = compute_alpha_plus(tau, a2, pc, check=check)
    m, _ = compute_alpha_minus(tau, a2, pc, check=check)
    return (p[0] - m[0], p[1] - m[1])


def difference_equation_residual(tau, a2, pc: PrecisionContext):
    """Residual of w(tau+1) = F0(alpha^-(tau) + w(tau)) - F0(alpha^-(tau)), relative to |w(tau)|."""
    ctx = pc.mp
    tau = ctx.mpc(tau)
    m, _ = compute_alpha_minus(tau, a2, pc, check=False)
    u, v = inner_difference(tau, a2, pc, check=False)
    u1, v1 = inner_difference(tau + 1, a2, pc, check=False)
    fp = F0((m[0] + u, m[1] + v))
    fm = F0(m)
    r = max(abs(u1 - (fp[0] - fm[0])), abs(v1 - (fp[1] - fm[1])))
    return r / max(abs(u), abs(v))


def theta_hat(tau, a2, pc: PrecisionContext, check: bool = False):
    """det[d alpha^-/d tau | alpha^+ - alpha^-]."""
    _, jm = compute_alpha_minus(tau, a2, pc, check=check)
    p, _ = compute_alpha_plus(tau, a2, pc, check=check)
    u, v = p[0] - jm.value[0], p[1] - jm.value[1]
    dx, dy = jm.derivative
    return dx * v - dy * u


def fourier_coefficient(g, Y, pc: PrecisionContext, nodes: int = 32, harmonic: int = 1):
    """int over [tau0, tau0 + 1], tau0 = -1/2 - iY, of e^{2 pi i harmonic s} g(s) ds."""
    ctx = pc.mp
    Y = ctx.mpf(Y)
    two_pi_i = 2 * ctx.pi * ctx.mpc(0, 1) * harmonic

    def integrand(x):
        s = ctx.mpc(x, -Y)
        return ctx.exp(two_pi_i * s) * g(s)

    return integrate_segment(integrand, ctx.mpf(-1) / 2, ctx.mpf(1) / 2, pc, nodes=nodes)


@dataclass
class Theta1Estimate:
    value: object
    Y: float
    next_value: object
    relative_change: float


def theta1_fourier(Y: float, a2, pc: PrecisionContext, nodes: int = 32, tol: float = 0.01) -> Theta1Estimate:
    """First Fourier coefficient of Theta-hat at depth Y, checked against depth Y + 1."""
    if not 3 <= Y <= 7:
        raise DomainError("Y must lie in [3, 7]", Y=Y)
    g = lambda s: theta_hat(s, a2, pc)
    v = fourier_coefficient(g, Y, pc, nodes)
    w = fourier_coefficient(g, Y + 1, pc, nodes)
    rel = float(abs(v - w) / abs(v))
    if rel >= tol:
        raise DepthInsufficient("Theta1 not stable between depths Y and Y+1", Y=Y, relative_change=rel)
    return Theta1Estimate(v, Y, w, rel)


def reexpansion_fit(a2, pc: PrecisionContext, terms: int = 14, radius: float = 25.0):
    """Coefficients (a_1..a_terms), (b_1..b_terms) of the computed alpha^- in powers of 1/tau.

    alpha^- is sampled at ``terms`` points of a left half-circle |tau| = radius
    and the truncated expansions are collocated there; the points lie well
    inside the region reached by forward iteration, so the fit tests the
    orbit rather than the seed.
    """
    ctx = pc.mp
    pts = [radius * ctx.expjpi(ctx.mpf(1) / 2 + (j + ctx.mpf(1) / 2) / terms) for j in range(terms)]
    vals = [compute_alpha_minus(t, a2, pc, R_seed=seed_parameters(pc)[0] + 3 * radius, check=False)[0] for t in pts]
    V = ctx.matrix([[t ** -k for k in range(1, terms + 1)] for t in pts])
    a = ctx.lu_solve(V, ctx.matrix([v[0] for v in vals]))
    b = ctx.lu_solve(V, ctx.matrix([v[1] for v in vals]))
    return [a[i] for i in range(terms)], [b[i] for i in range(terms)]


# ---------------------------------------------------------------------------
# Grid trace and decay diagnostics
# ---------------------------------------------------------------------------


def default_grid(pc: PrecisionContext, re_parts=(-0.5, 0.0, 0.5), im_lo=-9.0, im_hi=-2.0, step=0.125):
    ctx = pc.mp
    n = int(round((im_hi - im_lo) / step))
    return [ctx.mpc(r, im_lo + j * step) for r in re_parts for j in range(n + 1)]


@dataclass
class InnerTrace:
    tau_grid: list
    alpha_minus: list
    alpha_plus: list
    u_v: list
    theta_hat: list
    seed_params: dict = field(default_factory=dict)


def inner_trace(pc: PrecisionContext, a2=0, grid=None) -> InnerTrace:
    grid = grid if grid is not None else default_grid(pc)
    R, K = seed_parameters(pc)
    am, ap, uv, th = [], [], [], []
    for tau in grid:
        _, jm = compute_alpha_minus(tau, a2, pc, check=False)
        p, jp = compute_alpha_plus(tau, a2, pc, check=False)
        u, v = p[0] - jm.value[0], p[1] - jm.value[1]
        am.append(jm)
        ap.append(jp)
        uv.append((u, v))
        th.append(jm.derivative[0] * v - jm.derivative[1] * u)
    return InnerTrace(grid, am, ap, uv, th, {"a2": a2, "R_seed": R, "K": K})


def decay_slope(values, ims):
    """Least-squares slope of log|value| against |Im tau|."""
    xs = [abs(float(t)) for t in ims]
    ys = [math.log(abs(complex(v))) for v in values]
    n = len(xs)
    mx, my = sum(xs) / n, sum(ys) / n
    return sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sum((x - mx) ** 2 for x in xs)
